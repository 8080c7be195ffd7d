"""Post-commit event distribution.

Every committed valid transaction may carry chaincode events. The bus assigns
each one a stable coordinate (blockHeight, txOffset, eventIndex), keeps an
ordered in-memory log, and serves cursor-based subscriptions. Delivery is
at-least-once: a consumer that reconnects passes its last coordinate and
receives everything after it, deduplicable by coordinate. Nothing here is
durable; the log is re-derivable from committed blocks.
"""

from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass, field
from typing import Optional

from .chaincode import ChainEvent, EventKind
from .state import Version

Coord = tuple[int, int, int]


class UnknownSubscription(Exception):
    pass


@dataclass(frozen=True)
class EventRecord:
    height: int
    offset: int
    index: int
    event: ChainEvent

    @property
    def coord(self) -> Coord:
        return (self.height, self.offset, self.index)

    @property
    def event_id(self) -> str:
        return f"{self.height}-{self.offset}-{self.index}"

    def to_dict(self) -> dict:
        return {
            "id": self.event_id,
            "blockHeight": self.height,
            "txOffset": self.offset,
            "eventIndex": self.index,
            "event": self.event.to_dict(),
        }


def parse_event_id(value: str) -> Optional[Coord]:
    parts = value.strip().split("-")
    if len(parts) != 3:
        return None
    try:
        height, offset, index = (int(p) for p in parts)
    except ValueError:
        return None
    if height < 0 or offset < 0 or index < 0:
        return None
    return (height, offset, index)


@dataclass(frozen=True)
class EventFilter:
    """Restrict a subscription to certain event kinds and/or one place."""

    kinds: Optional[frozenset] = None
    place_id: Optional[str] = None

    def matches(self, event: ChainEvent) -> bool:
        if self.kinds is not None and event.kind not in self.kinds:
            return False
        if self.place_id is not None and event.place_id != self.place_id:
            return False
        return True


MATCH_ALL = EventFilter()


@dataclass
class Subscription:
    subscription_id: str
    filter: EventFilter
    cursor: Optional[Coord]
    _mutex: threading.Lock = field(default_factory=threading.Lock, repr=False)


class EventBus:
    def __init__(self, max_log: int = 200_000):
        self._log: list[EventRecord] = []
        self._max_log = max_log
        self._subs: dict[str, Subscription] = {}
        self._lock = threading.RLock()
        self._published = threading.Condition(self._lock)

    def publish(self, items: list[tuple[Version, ChainEvent]]) -> list[EventRecord]:
        """Assign coordinates to one block's events and append them to the log."""
        with self._lock:
            counters: dict[Version, int] = {}
            records = []
            for version, event in items:
                index = counters.get(version, 0)
                counters[version] = index + 1
                records.append(EventRecord(version.height, version.offset, index, event))
            self._log.extend(records)
            if len(self._log) > self._max_log:
                del self._log[: len(self._log) - self._max_log]
            self._published.notify_all()
            return records

    def replay(self, after: Optional[Coord] = None) -> list[EventRecord]:
        with self._lock:
            if after is None:
                return list(self._log)
            return [rec for rec in self._log if rec.coord > after]

    def tail(self) -> Optional[Coord]:
        """Coordinate of the newest record, or None for an empty log."""
        with self._lock:
            return self._log[-1].coord if self._log else None

    def subscribe(
        self,
        filter: Optional[EventFilter] = None,
        after: Optional[Coord] = None,
    ) -> Subscription:
        """Register a cursor at `after` (None delivers from the start of the log)."""
        with self._lock:
            sub = Subscription(secrets.token_hex(8), filter or MATCH_ALL, after)
            self._subs[sub.subscription_id] = sub
            return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            self._subs.pop(sub.subscription_id, None)

    def poll(self, sub: Subscription, max_items: int = 100) -> list[EventRecord]:
        """Return up to max_items matching records past the cursor; advance it.

        The cursor moves over non-matching records too, so a filtered
        subscription never rescans the same span.
        """
        with self._lock:
            if sub.subscription_id not in self._subs:
                raise UnknownSubscription(sub.subscription_id)
        with sub._mutex:
            with self._lock:
                pending = [r for r in self._log if sub.cursor is None or r.coord > sub.cursor]
            out = []
            last = None
            for rec in pending:
                last = rec.coord
                if sub.filter.matches(rec.event):
                    out.append(rec)
                    if len(out) >= max_items:
                        break
            if last is not None:
                sub.cursor = last
            return out

    def wait(self, timeout: float) -> bool:
        """Block until something is published or the timeout passes."""
        with self._lock:
            return self._published.wait(timeout)

    def __len__(self) -> int:
        with self._lock:
            return len(self._log)
