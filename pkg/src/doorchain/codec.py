"""Canonical byte encodings shared by hashing, signing and the block file.

Everything that ends up inside a hash or a signature goes through this module,
so the exact byte layout is pinned here once:

* integers are big-endian fixed width (u32 / u64),
* variable-length byte strings are length-prefixed with a u32,
* strings are UTF-8,
* structured values (payloads, read-write sets, events) are canonical JSON:
  sorted keys, no insignificant whitespace, UTF-8, no floats.

Timestamps are carried as microseconds since the Unix epoch (UTC) wherever
they are hashed, and as RFC 3339 strings at the JSON surface.
"""

from __future__ import annotations

import hashlib
import json
import struct
from datetime import datetime, timezone

ZERO_HASH = b"\x00" * 32


class DecodeError(ValueError):
    """Raised when canonical bytes do not parse exactly as declared."""


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def u32(value: int) -> bytes:
    if value < 0 or value > 0xFFFFFFFF:
        raise ValueError(f"u32 out of range: {value}")
    return struct.pack(">I", value)


def u64(value: int) -> bytes:
    if value < 0 or value > 0xFFFFFFFFFFFFFFFF:
        raise ValueError(f"u64 out of range: {value}")
    return struct.pack(">Q", value)


def lp(data: bytes) -> bytes:
    """Length-prefixed bytes: u32 length followed by the raw bytes."""
    return u32(len(data)) + data


def lp_str(text: str) -> bytes:
    return lp(text.encode("utf-8"))


def _reject_floats(obj) -> None:
    if isinstance(obj, float):
        raise ValueError("floats are not allowed in canonical JSON")
    if isinstance(obj, dict):
        for k, v in obj.items():
            if not isinstance(k, str):
                raise ValueError("canonical JSON object keys must be strings")
            _reject_floats(v)
    elif isinstance(obj, (list, tuple)):
        for v in obj:
            _reject_floats(v)


def canonical_json_bytes(obj) -> bytes:
    """Serialize to canonical JSON: sorted keys, compact, UTF-8, ints only."""
    _reject_floats(obj)
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def canonical_json(obj) -> str:
    return canonical_json_bytes(obj).decode("utf-8")


class Reader:
    """Strict sequential reader over canonical bytes.

    Every parse must consume its input exactly; leftover or missing bytes are
    decode errors, which is what makes single-byte tampering detectable.
    """

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    @property
    def remaining(self) -> int:
        return len(self._data) - self._pos

    def take(self, n: int) -> bytes:
        if n < 0 or self._pos + n > len(self._data):
            raise DecodeError(f"unexpected end of input (want {n}, have {self.remaining})")
        out = self._data[self._pos : self._pos + n]
        self._pos += n
        return out

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.take(8))[0]

    def lp(self) -> bytes:
        return self.take(self.u32())

    def lp_str(self) -> str:
        raw = self.lp()
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(f"invalid UTF-8: {exc}") from None

    def lp_json(self):
        raw = self.lp()
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DecodeError(f"invalid canonical JSON: {exc}") from None

    def expect_end(self) -> None:
        if self.remaining != 0:
            raise DecodeError(f"{self.remaining} trailing bytes")


def now_micros() -> int:
    return int(datetime.now(timezone.utc).timestamp() * 1_000_000)


def micros_to_datetime(micros: int) -> datetime:
    return datetime.fromtimestamp(micros / 1_000_000, tz=timezone.utc)


def datetime_to_micros(dt: datetime) -> int:
    if dt.tzinfo is None:
        raise ValueError("naive datetimes are ambiguous; use UTC-aware values")
    return int(dt.timestamp() * 1_000_000)


def micros_to_rfc3339(micros: int) -> str:
    return micros_to_datetime(micros).isoformat(timespec="microseconds")


def rfc3339_to_micros(text: str) -> int:
    dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    return datetime_to_micros(dt)


def minute_of_day(micros: int) -> int:
    """Minute within the UTC day, in [0, 1440)."""
    return (micros // 60_000_000) % 1440
