"""Regenerate the parity fixtures from the reference node implementation.

The console must produce byte-identical canonical JSON and compatible
Ed25519 signatures, and its matrix must mirror the node's decision
semantics. These fixtures pin all three against the Python package:

    python3 frontend/tests/fixtures/generate.py

Run from anywhere; paths resolve relative to this file.
"""

from __future__ import annotations

import json
import random
from base64 import b64encode
from pathlib import Path

from doorchain.acl import (
    AccessRequest,
    AclRule,
    Action,
    Condition,
    ConditionKind,
    DynamicEntry,
    Effect,
    Operation,
    decide_effective,
)
from doorchain.chaincode import grant_access_payload
from doorchain.codec import canonical_json, canonical_json_bytes, rfc3339_to_micros
from doorchain.crypto import SigningKey
from doorchain.domain import HolderCard, IdentityCard, Participant, PhysicalPlace, Role, card_signed_bytes

HERE = Path(__file__).resolve().parent


def write(name: str, data) -> None:
    (HERE / name).write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


# -- canonical JSON vectors ---------------------------------------------------

CANONICAL_VALUES = [
    None,
    True,
    False,
    0,
    -42,
    1756123200000000,  # micros-scale timestamp
    "",
    "plain",
    'line\nbreak\ttab "quoted" back\\slash  bell',
    "café ☕ \U0001f389",
    [],
    {},
    [1, "two", None, [3, {"b": 1, "a": 2}]],
    {"b": 1, "a": 2},
    {"z": [1, 2, {"y": None, "x": True}], "a": "text"},
    {"é": 1, "e": 2, "Z": 3},  # key order is by code point: Z, e, é
    {"￿": "bmp-end", "\U0001f600": "astral"},  # astral keys sort after U+FFFF
    {"": ""},
    grant_access_payload("bob", "vault"),
    {"type": "RegisterParticipant", "participant": {"participantId": "zoe", "displayName": "Zoë", "role": "Employee", "departmentId": None}},
]


def canonical_fixture():
    return [{"value": v, "canonical": canonical_json(v)} for v in CANONICAL_VALUES]


# -- card and signature probes ------------------------------------------------

def card_fixture():
    holder_key = SigningKey(bytes([7]) * 32)
    authority = SigningKey(bytes([42]) * 32)
    card_id = "card-fixture-0001"
    participant_id = "fixture-admin"
    public_key = holder_key.verify_key().to_bytes()
    certificate = authority.sign(card_signed_bytes(card_id, participant_id, public_key))
    card = IdentityCard(
        card_id=card_id,
        participant_id=participant_id,
        public_key=public_key,
        certificate=certificate,
        issued_at_micros=rfc3339_to_micros("2026-08-25T12:00:00+00:00"),
    )
    holder = HolderCard(card=card, signing_key=holder_key)

    payload = grant_access_payload("bob", "vault")
    challenge = bytes(range(32))
    return {
        "cardFile": holder.to_dict(),
        "publicKeyHex": public_key.hex(),
        "authorityPublicKeyHex": authority.verify_key().to_bytes().hex(),
        "payloadProbe": {
            "payload": payload,
            "canonical": canonical_json(payload),
            "signatureB64": b64encode(holder_key.sign(canonical_json_bytes(payload))).decode(),
        },
        "challengeProbe": {
            "challengeB64": b64encode(challenge).decode(),
            "signatureB64": b64encode(holder_key.sign(challenge)).decode(),
        },
    }


# -- decision sweep -----------------------------------------------------------

POOL = [
    AclRule("admin-everywhere", frozenset({Role.ADMIN}), "*",
            frozenset(Action), Operation.ALLOW),
    AclRule("ceo-own-dept", frozenset({Role.CEO}), "*",
            frozenset({Action.READ, Action.UPDATE}), Operation.ALLOW,
            Condition(ConditionKind.DEPARTMENT_MATCH)),
    AclRule("staff-hours", frozenset({Role.MANAGER, Role.EMPLOYEE}), "*",
            frozenset({Action.READ}), Operation.ALLOW,
            Condition(ConditionKind.TIME_WINDOW, 420, 1260)),
    AclRule("night-watch", frozenset({Role.MANAGER}), "dept:ops:*",
            frozenset({Action.READ}), Operation.ALLOW,
            Condition(ConditionKind.TIME_WINDOW, 1320, 300)),
    AclRule("vault-lockdown", frozenset({Role.MANAGER, Role.EMPLOYEE, Role.CEO}), "vault",
            frozenset({Action.READ, Action.UPDATE, Action.DELETE}), Operation.DENY),
    AclRule("eng-floor", frozenset({Role.EMPLOYEE}), "dept:eng:*",
            frozenset({Action.READ}), Operation.ALLOW,
            Condition(ConditionKind.DEPARTMENT_MATCH)),
    AclRule("degenerate-window", frozenset({Role.EMPLOYEE}), "*",
            frozenset({Action.READ}), Operation.ALLOW,
            Condition(ConditionKind.TIME_WINDOW, 600, 600)),
]

PEOPLE = [
    Participant("root", "Root", Role.ADMIN, None),
    Participant("carol", "Carol", Role.CEO, "eng"),
    Participant("oscar", "Oscar", Role.CEO, "ops"),
    Participant("mia", "Mia", Role.MANAGER, "ops"),
    Participant("bob", "Bob", Role.EMPLOYEE, "eng"),
    Participant("ned", "Ned", Role.EMPLOYEE, None),
]

PLACES = [
    PhysicalPlace("door-1", "Eng front door", "eng"),
    PhysicalPlace("lobby", "Eng lobby", "eng"),
    PhysicalPlace("vault", "Ops vault", "ops"),
    PhysicalPlace("annex", "Ops annex", "ops"),
]


def decisions_fixture(count: int = 300):
    rng = random.Random(20260825)
    cases = []
    for _ in range(count):
        rules = rng.sample(POOL, rng.randint(0, 4))
        participant = rng.choice(PEOPLE)
        place = rng.choice(PLACES)
        action = rng.choice(list(Action))
        minute = rng.randrange(1440)
        at_micros = rng.randrange(0, 1_000) * 86_400_000_000 + minute * 60_000_000
        overlay = []
        for _ in range(rng.randint(0, 3)):
            overlay.append(
                DynamicEntry(
                    participant_id=rng.choice(PEOPLE).participant_id,
                    place_id=rng.choice(PLACES).place_id,
                    effect=rng.choice([Effect.GRANT, Effect.REVOKE]),
                    seq=rng.randrange(1, 500),
                    granted_by="seed",
                )
            )
        request = AccessRequest(participant, place, action, at_micros)
        decision = decide_effective(rules, overlay, request)
        cases.append(
            {
                "rules": [r.to_dict() for r in rules],
                "participant": participant.to_dict(),
                "place": place.to_dict(),
                "action": action.value,
                "atMicros": at_micros,
                "overlay": [
                    {
                        "participantId": e.participant_id,
                        "placeId": e.place_id,
                        "effect": e.effect.value,
                        "seq": e.seq,
                        "grantedBy": e.granted_by,
                    }
                    for e in overlay
                ],
                "expected": decision.to_dict(),
            }
        )
    return cases


if __name__ == "__main__":
    write("canonical.json", canonical_fixture())
    write("card.json", card_fixture())
    write("decisions.json", decisions_fixture())
    print("wrote canonical.json, card.json, decisions.json")
