import dataclasses
import random

import pytest

from doorchain.crypto import SigningKey
from doorchain.domain import (
    Department,
    DomainError,
    HolderCard,
    IdentityCard,
    Participant,
    PhysicalPlace,
    Role,
    issue_card,
    sign_payload,
    verify_card,
    verify_payload,
)

ISSUER = SigningKey(b"\x07" * 32)


def fresh_card(pid: str = "alice") -> HolderCard:
    return issue_card(pid, ISSUER, {pid})


def test_issue_card_verifies():
    holder = fresh_card()
    assert holder.card.participant_id == "alice"
    assert verify_card(holder.card, ISSUER.verify_key())


def test_issue_card_unknown_participant_rejected():
    with pytest.raises(DomainError):
        issue_card("ghost", ISSUER, {"alice"})
    with pytest.raises(DomainError):
        issue_card("ghost", ISSUER, lambda pid: False)


def test_issue_card_ids_unique():
    a = fresh_card()
    b = fresh_card()
    assert a.card.card_id != b.card.card_id
    assert a.card.public_key != b.card.public_key


def test_verify_card_rejects_wrong_issuer():
    holder = fresh_card()
    other = SigningKey(b"\x08" * 32)
    assert not verify_card(holder.card, other.verify_key())


def _mutate_bytes(rng: random.Random, blob: bytes) -> bytes:
    pos = rng.randrange(len(blob))
    flip = blob[pos] ^ (1 << rng.randrange(8))
    return blob[:pos] + bytes([flip]) + blob[pos + 1 :]


def test_card_mutations_detected():
    """Any bit flip in a certified field must invalidate the certificate."""
    holder = fresh_card()
    card = holder.card
    rng = random.Random(1234)
    for _ in range(100):
        field = rng.choice(["card_id", "participant_id", "public_key", "certificate"])
        value = getattr(card, field)
        if isinstance(value, str):
            raw = value.encode()
            mutated = _mutate_bytes(rng, raw).decode("utf-8", errors="replace")
            if mutated == value:
                continue
        else:
            mutated = _mutate_bytes(rng, value)
        tampered = dataclasses.replace(card, **{field: mutated})
        assert not verify_card(tampered, ISSUER.verify_key()), field


def test_card_dict_round_trip():
    card = fresh_card().card
    again = IdentityCard.from_dict(card.to_dict())
    assert again == card
    assert verify_card(again, ISSUER.verify_key())


def test_holder_card_save_load(tmp_path):
    holder = fresh_card()
    path = tmp_path / "alice.card"
    holder.save(path)
    again = HolderCard.load(path)
    assert again.card == holder.card
    msg = b"hello"
    assert verify_payload(again.card.verify_key(), msg, holder.sign(msg))


def test_sign_and_verify_payload():
    key = SigningKey(b"\x11" * 32)
    sig = sign_payload(key, b"payload")
    assert verify_payload(key.verify_key(), b"payload", sig)
    assert not verify_payload(key.verify_key(), b"payloae", sig)
    assert not verify_payload(key.verify_key(), b"payload", sig[:-1] + b"\x00")


def test_participant_round_trip():
    p = Participant("bob", "Bob B", Role.EMPLOYEE, "eng")
    assert Participant.from_dict(p.to_dict()) == p
    root = Participant("root", "Root", Role.ADMIN, None)
    assert Participant.from_dict(root.to_dict()) == root
    assert root.to_dict()["departmentId"] is None


def test_participant_validation():
    with pytest.raises(ValueError):
        Participant("", "x", Role.EMPLOYEE, "eng")
    with pytest.raises(ValueError):
        Participant("ceo", "x", Role.CEO, None)


def test_department_and_place_round_trip():
    d = Department("eng", "Engineering", "carol")
    assert Department.from_dict(d.to_dict()) == d
    pl = PhysicalPlace("door-1", "front door", "eng")
    assert PhysicalPlace.from_dict(pl.to_dict()) == pl


def test_role_values():
    assert {r.value for r in Role} == {"Admin", "CEO", "Manager", "Employee"}
