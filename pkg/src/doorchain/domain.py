"""Business entities and the identity-card credential scheme.

Participants, departments and physical places are plain value types; identity
cards are Ed25519 credentials certified by a single issuing authority. A card
certificate signs exactly (cardId, participantId, publicKey), so flipping any
byte of those fields invalidates the card.
"""

from __future__ import annotations

import json
import secrets
from base64 import b64decode, b64encode
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Optional

from .codec import canonical_json, lp, lp_str, micros_to_rfc3339, now_micros, rfc3339_to_micros
from .crypto import SigningKey, VerifyKey


class Role(str, Enum):
    ADMIN = "Admin"
    CEO = "CEO"
    MANAGER = "Manager"
    EMPLOYEE = "Employee"


class DomainError(Exception):
    pass


class UnknownParticipant(DomainError):
    pass


@dataclass(frozen=True)
class Participant:
    participant_id: str
    display_name: str
    role: Role
    department_id: Optional[str] = None

    def __post_init__(self):
        if not self.participant_id:
            raise ValueError("participantId must be non-empty")
        if self.role == Role.CEO and not self.department_id:
            raise ValueError("a CEO participant always carries a departmentId")

    def to_dict(self) -> dict:
        return {
            "participantId": self.participant_id,
            "displayName": self.display_name,
            "role": self.role.value,
            "departmentId": self.department_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Participant":
        return cls(
            participant_id=d["participantId"],
            display_name=d["displayName"],
            role=Role(d["role"]),
            department_id=d.get("departmentId"),
        )


@dataclass(frozen=True)
class Department:
    department_id: str
    name: str
    ceo_participant_id: str

    def to_dict(self) -> dict:
        return {
            "departmentId": self.department_id,
            "name": self.name,
            "ceoParticipantId": self.ceo_participant_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Department":
        return cls(d["departmentId"], d["name"], d["ceoParticipantId"])


@dataclass(frozen=True)
class PhysicalPlace:
    place_id: str
    description: str
    department_id: str

    def to_dict(self) -> dict:
        return {
            "placeId": self.place_id,
            "description": self.description,
            "departmentId": self.department_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PhysicalPlace":
        return cls(d["placeId"], d["description"], d["departmentId"])


def card_signed_bytes(card_id: str, participant_id: str, public_key: bytes) -> bytes:
    """The exact bytes a card certificate signs."""
    return lp_str(card_id) + lp_str(participant_id) + lp(public_key)


@dataclass(frozen=True)
class IdentityCard:
    """Public half of a card: enough for anyone to verify the holder."""

    card_id: str
    participant_id: str
    public_key: bytes
    certificate: bytes
    issued_at_micros: int

    def verify_key(self) -> VerifyKey:
        return VerifyKey(self.public_key)

    def to_dict(self) -> dict:
        return {
            "cardId": self.card_id,
            "participantId": self.participant_id,
            "publicKey": b64encode(self.public_key).decode(),
            "certificate": b64encode(self.certificate).decode(),
            "issuedAt": micros_to_rfc3339(self.issued_at_micros),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IdentityCard":
        return cls(
            card_id=d["cardId"],
            participant_id=d["participantId"],
            public_key=b64decode(d["publicKey"]),
            certificate=b64decode(d["certificate"]),
            issued_at_micros=rfc3339_to_micros(d["issuedAt"]),
        )


@dataclass(frozen=True)
class HolderCard:
    """A card plus its private key, as held by the participant (card file)."""

    card: IdentityCard
    signing_key: SigningKey

    def sign(self, payload: bytes) -> bytes:
        return self.signing_key.sign(payload)

    def to_dict(self) -> dict:
        d = self.card.to_dict()
        d["privateKey"] = b64encode(self.signing_key.seed()).decode()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "HolderCard":
        return cls(card=IdentityCard.from_dict(d), signing_key=SigningKey(b64decode(d["privateKey"])))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(canonical_json(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "HolderCard":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def issue_card(
    participant_id: str,
    issuer_key: SigningKey,
    participant_exists: Callable[[str], bool] | Iterable[str],
    *,
    issued_at_micros: Optional[int] = None,
) -> HolderCard:
    """Issue a fresh card for a registered participant.

    `participant_exists` is either a membership callable or a collection of
    known participant ids; unknown participants are rejected.
    """
    if callable(participant_exists):
        known = participant_exists(participant_id)
    else:
        known = participant_id in set(participant_exists)
    if not known:
        raise UnknownParticipant(f"participant {participant_id!r} is not registered")
    key = SigningKey.generate()
    public_key = key.verify_key().to_bytes()
    card_id = secrets.token_hex(16)
    certificate = issuer_key.sign(card_signed_bytes(card_id, participant_id, public_key))
    card = IdentityCard(
        card_id=card_id,
        participant_id=participant_id,
        public_key=public_key,
        certificate=certificate,
        issued_at_micros=issued_at_micros if issued_at_micros is not None else now_micros(),
    )
    return HolderCard(card=card, signing_key=key)


def verify_card(card: IdentityCard, issuer_public_key: VerifyKey) -> bool:
    """True iff the certificate is a valid issuer signature over the card."""
    try:
        signed = card_signed_bytes(card.card_id, card.participant_id, card.public_key)
        return issuer_public_key.verify(signed, card.certificate)
    except Exception:
        return False


def sign_payload(key: SigningKey, payload: bytes) -> bytes:
    return key.sign(payload)


def verify_payload(public_key: VerifyKey, payload: bytes, signature: bytes) -> bool:
    return public_key.verify(payload, signature)
