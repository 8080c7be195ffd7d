"""Access decision engine: ordered static rules plus a dynamic overlay.

Static evaluation is first-match-wins over an ordered rule list with default
deny. The dynamic overlay holds per-(participant, place) grant/revoke entries
recorded on the ledger; for physical entry (action Read) the entry with the
highest sequence number wins outright over the static rules. Both evaluators
are pure functions of their inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from .codec import minute_of_day
from .domain import Participant, PhysicalPlace


class Action(str, Enum):
    CREATE = "Create"
    READ = "Read"
    UPDATE = "Update"
    DELETE = "Delete"


class Operation(str, Enum):
    ALLOW = "Allow"
    DENY = "Deny"


class ConditionKind(str, Enum):
    ALWAYS = "Always"
    TIME_WINDOW = "TimeWindow"
    DEPARTMENT_MATCH = "DepartmentMatch"


@dataclass(frozen=True)
class Condition:
    kind: ConditionKind
    start_minute: Optional[int] = None
    end_minute: Optional[int] = None

    def __post_init__(self):
        if self.kind == ConditionKind.TIME_WINDOW:
            for m in (self.start_minute, self.end_minute):
                if m is None or not (0 <= m < 1440):
                    raise ValueError("TimeWindow minutes must lie in [0, 1440)")
        elif self.start_minute is not None or self.end_minute is not None:
            raise ValueError(f"{self.kind.value} takes no minutes")

    def satisfied(self, participant: Participant, place: PhysicalPlace, at_micros: int) -> bool:
        if self.kind == ConditionKind.ALWAYS:
            return True
        if self.kind == ConditionKind.DEPARTMENT_MATCH:
            return participant.department_id is not None and participant.department_id == place.department_id
        minute = minute_of_day(at_micros)
        start, end = self.start_minute, self.end_minute
        if start == end:
            return False  # degenerate window is empty, not full-day
        if start < end:
            return start <= minute < end
        return minute >= start or minute < end  # wraps midnight

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value}
        if self.kind == ConditionKind.TIME_WINDOW:
            d["startMinuteOfDay"] = self.start_minute
            d["endMinuteOfDay"] = self.end_minute
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Condition":
        kind = ConditionKind(d["kind"])
        if kind == ConditionKind.TIME_WINDOW:
            return cls(kind, d["startMinuteOfDay"], d["endMinuteOfDay"])
        return cls(kind)


ALWAYS = Condition(ConditionKind.ALWAYS)


@dataclass(frozen=True)
class AclRule:
    rule_id: str
    roles: frozenset
    resource_pattern: str
    actions: frozenset
    operation: Operation
    condition: Condition = ALWAYS

    def __post_init__(self):
        if not self.roles:
            raise ValueError("rule roles must be non-empty")
        if not self.actions:
            raise ValueError("rule actions must be non-empty")

    def matches_place(self, place: PhysicalPlace) -> bool:
        p = self.resource_pattern
        if p == "*":
            return True
        if p.startswith("dept:") and p.endswith(":*"):
            return p[5:-2] == place.department_id
        return p == place.place_id

    def to_dict(self) -> dict:
        return {
            "ruleId": self.rule_id,
            "roles": sorted(r.value for r in self.roles),
            "resourcePattern": self.resource_pattern,
            "actions": sorted(a.value for a in self.actions),
            "operation": self.operation.value,
            "condition": self.condition.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AclRule":
        from .domain import Role

        return cls(
            rule_id=d["ruleId"],
            roles=frozenset(Role(r) for r in d["roles"]),
            resource_pattern=d["resourcePattern"],
            actions=frozenset(Action(a) for a in d["actions"]),
            operation=Operation(d["operation"]),
            condition=Condition.from_dict(d.get("condition", {"kind": "Always"})),
        )


@dataclass(frozen=True)
class AccessRequest:
    participant: Participant
    place: PhysicalPlace
    action: Action
    at_micros: int


class Effect(str, Enum):
    GRANT = "Grant"
    REVOKE = "Revoke"


@dataclass(frozen=True)
class DynamicEntry:
    participant_id: str
    place_id: str
    effect: Effect
    seq: int
    granted_by: str


class DecisionSource(str, Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"
    DEFAULT_DENY = "default-deny"


@dataclass(frozen=True)
class Decision:
    outcome: Operation
    source: DecisionSource
    rule_id: Optional[str] = None
    seq: Optional[int] = None

    def to_dict(self) -> dict:
        source: dict = {"kind": self.source.value}
        if self.source == DecisionSource.STATIC:
            source["ruleId"] = self.rule_id
        elif self.source == DecisionSource.DYNAMIC:
            source["seq"] = self.seq
        return {"outcome": self.outcome.value, "source": source}

    @classmethod
    def from_dict(cls, d: dict) -> "Decision":
        src = d["source"]
        return cls(
            outcome=Operation(d["outcome"]),
            source=DecisionSource(src["kind"]),
            rule_id=src.get("ruleId"),
            seq=src.get("seq"),
        )


DEFAULT_DENY = Decision(Operation.DENY, DecisionSource.DEFAULT_DENY)


def match_rule(rule: AclRule, request: AccessRequest) -> bool:
    return (
        request.participant.role in rule.roles
        and rule.matches_place(request.place)
        and request.action in rule.actions
        and rule.condition.satisfied(request.participant, request.place, request.at_micros)
    )


def decide_static(rules: Sequence[AclRule], request: AccessRequest) -> Decision:
    """First matching rule in list order wins; no match means deny."""
    for rule in rules:
        if match_rule(rule, request):
            return Decision(rule.operation, DecisionSource.STATIC, rule_id=rule.rule_id)
    return DEFAULT_DENY


def decide_effective(
    rules: Sequence[AclRule],
    overlay: Sequence[DynamicEntry],
    request: AccessRequest,
) -> Decision:
    """Dynamic overlay (latest entry wins) for physical entry, else static.

    Only action Read consults the overlay; administrative actions always go
    through the static rules.
    """
    if request.action == Action.READ:
        latest = None
        for entry in overlay:
            if (
                entry.participant_id == request.participant.participant_id
                and entry.place_id == request.place.place_id
                and (latest is None or entry.seq > latest.seq)
            ):
                latest = entry
        if latest is not None:
            outcome = Operation.ALLOW if latest.effect == Effect.GRANT else Operation.DENY
            return Decision(outcome, DecisionSource.DYNAMIC, seq=latest.seq)
    return decide_static(rules, request)


def load_rules(path: str | Path) -> list[AclRule]:
    """Load the static rule set: a JSON array of rule records."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise ValueError("rule set file must be a JSON array")
    return [AclRule.from_dict(d) for d in data]


def rules_to_json(rules: Sequence[AclRule]) -> list[dict]:
    return [r.to_dict() for r in rules]
