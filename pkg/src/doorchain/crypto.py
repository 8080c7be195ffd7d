"""Thin Ed25519 wrappers used for cards, client signatures and endorsements."""

from __future__ import annotations

import secrets

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

SEED_LEN = 32
SIGNATURE_LEN = 64


class VerifyKey:
    """Ed25519 verification key; verify() never raises on bad input."""

    def __init__(self, raw: bytes):
        if len(raw) != 32:
            raise ValueError("Ed25519 public key must be 32 bytes")
        self._raw = bytes(raw)
        self._key = Ed25519PublicKey.from_public_bytes(self._raw)

    def to_bytes(self) -> bytes:
        return self._raw

    def verify(self, payload: bytes, signature: bytes) -> bool:
        if not isinstance(signature, (bytes, bytearray)) or len(signature) != SIGNATURE_LEN:
            return False
        try:
            self._key.verify(bytes(signature), payload)
            return True
        except InvalidSignature:
            return False

    def __eq__(self, other) -> bool:
        return isinstance(other, VerifyKey) and other._raw == self._raw

    def __hash__(self) -> int:
        return hash(self._raw)


class SigningKey:
    """Ed25519 signing key, constructed from a 32-byte seed."""

    def __init__(self, seed: bytes):
        if len(seed) != SEED_LEN:
            raise ValueError("Ed25519 seed must be 32 bytes")
        self._seed = bytes(seed)
        self._key = Ed25519PrivateKey.from_private_bytes(self._seed)

    @classmethod
    def generate(cls) -> "SigningKey":
        return cls(secrets.token_bytes(SEED_LEN))

    def seed(self) -> bytes:
        return self._seed

    def sign(self, payload: bytes) -> bytes:
        return self._key.sign(payload)

    def verify_key(self) -> VerifyKey:
        return VerifyKey(self._key.public_key().public_bytes_raw())
