"""Versioned key-value world state with snapshot views.

Each key maps to (value bytes, version), where version is the (blockHeight,
txOffset) coordinate of the last committed write. Snapshots are plain dict
copies taken under the store lock; chaincode executes against a StateView
wrapping such a snapshot so repeated reads are stable and every read lands in
the transaction's read set.
"""

from __future__ import annotations

import threading
from typing import Iterator, NamedTuple, Optional

from .codec import lp, lp_str, sha256, u32, u64


class Version(NamedTuple):
    height: int
    offset: int

    def to_json(self) -> list:
        return [self.height, self.offset]

    @classmethod
    def from_json(cls, v) -> "Version":
        return cls(int(v[0]), int(v[1]))


class VersionedStore:
    """Thread-safe current-state map; the single commit writer mutates it."""

    def __init__(self):
        self._entries: dict[str, tuple[bytes, Version]] = {}
        self._lock = threading.RLock()

    def get(self, key: str) -> Optional[tuple[bytes, Version]]:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: str, value: bytes, version: Version) -> None:
        with self._lock:
            self._entries[key] = (bytes(value), version)

    def delete(self, key: str) -> None:
        with self._lock:
            self._entries.pop(key, None)

    def snapshot(self) -> dict[str, tuple[bytes, Version]]:
        with self._lock:
            return dict(self._entries)

    def items(self) -> Iterator[tuple[str, bytes, Version]]:
        for key, (value, version) in sorted(self.snapshot().items()):
            yield key, value, version

    def state_hash(self) -> bytes:
        """SHA-256 over the sorted (key, value, version) sequence."""
        h_input = bytearray()
        for key, value, version in self.items():
            h_input += lp_str(key) + lp(value) + u64(version.height) + u32(version.offset)
        return sha256(bytes(h_input))

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


class StateView:
    """Immutable snapshot of the store, with read tracking.

    Reads observe the snapshot only (never this execution's own writes) and
    are recorded as (key, version-or-None) pairs, first read per key wins.
    """

    def __init__(self, entries: dict[str, tuple[bytes, Version]]):
        self._entries = entries
        self.reads: dict[str, Optional[Version]] = {}

    def read(self, key: str) -> Optional[bytes]:
        entry = self._entries.get(key)
        if key not in self.reads:
            self.reads[key] = entry[1] if entry else None
        return entry[0] if entry else None

    def range_read(self, prefix: str) -> list[tuple[str, bytes, Version]]:
        out = []
        for key in sorted(self._entries):
            if key.startswith(prefix):
                value, version = self._entries[key]
                if key not in self.reads:
                    self.reads[key] = version
                out.append((key, value, version))
        return out
