"""Transaction processor functions.

Each handler executes one transaction type against an immutable world-state
snapshot, producing a read-write set, emitted events and a response. Handlers
never mutate state; a failed handler returns an application error with an
empty write list. Execution is a pure function of (submitter card, payload,
snapshot, chain config), which is what lets independent peers endorse the
same proposal and compare results byte for byte.

World-state key scheme (exact strings):
    participant/<participantId>
    place/<placeId>
    dept/<departmentId>
    dyn/<participantId>/<placeId>
    deleg/<participantId>/<departmentId>
    denials/<participantId>/<placeId>
    revokedCard/<cardId>
Values are canonical JSON.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from .acl import (
    AccessRequest,
    AclRule,
    Action,
    Decision,
    DynamicEntry,
    Effect,
    Operation,
    decide_effective,
)
from .codec import canonical_json_bytes
from .domain import Department, IdentityCard, Participant, PhysicalPlace, Role
from .state import StateView, Version

KEY_PARTICIPANT = "participant/"
KEY_PLACE = "place/"
KEY_DEPT = "dept/"
KEY_DYN = "dyn/"
KEY_DELEG = "deleg/"
KEY_DENIALS = "denials/"
KEY_REVOKED_CARD = "revokedCard/"


def participant_key(pid: str) -> str:
    return KEY_PARTICIPANT + pid


def place_key(pid: str) -> str:
    return KEY_PLACE + pid


def dept_key(did: str) -> str:
    return KEY_DEPT + did


def dyn_key(pid: str, place_id: str) -> str:
    return f"{KEY_DYN}{pid}/{place_id}"


def deleg_key(pid: str, dept_id: str) -> str:
    return f"{KEY_DELEG}{pid}/{dept_id}"


def denials_key(pid: str, place_id: str) -> str:
    return f"{KEY_DENIALS}{pid}/{place_id}"


def revoked_card_key(card_id: str) -> str:
    return KEY_REVOKED_CARD + card_id


class TxType(str, Enum):
    REGISTER_PARTICIPANT = "RegisterParticipant"
    REGISTER_PLACE = "RegisterPlace"
    REGISTER_DEPARTMENT = "RegisterDepartment"
    GRANT_ACCESS = "GrantAccess"
    REVOKE_ACCESS = "RevokeAccess"
    DELEGATE_AUTHORITY = "DelegateAuthority"
    REVOKE_DELEGATION = "RevokeDelegation"
    CHECK_ACCESS = "CheckAccess"
    REVOKE_CARD = "RevokeCard"
    BOOTSTRAP = "Bootstrap"  # genesis only; rejected in the normal pipeline


class EventKind(str, Enum):
    ACCESS_GRANTED = "AccessGranted"
    ACCESS_DENIED = "AccessDenied"
    ACCESS_GRANT_CHANGED = "AccessGrantChanged"
    DELEGATION_CHANGED = "DelegationChanged"
    INTRUSION_ALERT = "IntrusionAlert"


@dataclass(frozen=True)
class ChainEvent:
    kind: EventKind
    participant_id: str
    place_id: Optional[str]
    detail: str
    tx_id: str
    count: Optional[int] = None  # consecutive-denial count, IntrusionAlert only

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "participantId": self.participant_id,
            "placeId": self.place_id,
            "detail": self.detail,
            "txId": self.tx_id,
            "count": self.count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChainEvent":
        return cls(
            kind=EventKind(d["kind"]),
            participant_id=d["participantId"],
            place_id=d.get("placeId"),
            detail=d["detail"],
            tx_id=d["txId"],
            count=d.get("count"),
        )


@dataclass(frozen=True)
class Write:
    key: str
    value: Optional[bytes]  # None is a deletion marker

    def to_json(self) -> list:
        from base64 import b64encode

        return [self.key, b64encode(self.value).decode() if self.value is not None else None]

    @classmethod
    def from_json(cls, v) -> "Write":
        from base64 import b64decode

        return cls(v[0], b64decode(v[1]) if v[1] is not None else None)


@dataclass
class ReadWriteSet:
    reads: list[tuple[str, Optional[Version]]] = field(default_factory=list)
    writes: list[Write] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "reads": [[k, v.to_json() if v else None] for k, v in self.reads],
            "writes": [w.to_json() for w in self.writes],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReadWriteSet":
        return cls(
            reads=[(k, Version.from_json(v) if v else None) for k, v in d["reads"]],
            writes=[Write.from_json(w) for w in d["writes"]],
        )

    def canonical_bytes(self) -> bytes:
        return canonical_json_bytes(self.to_dict())


@dataclass
class ExecutionResult:
    rwset: ReadWriteSet
    events: list[ChainEvent]
    response: dict
    decision: Optional[Decision] = None

    @property
    def ok(self) -> bool:
        return self.response.get("status") == "ok"

    def response_bytes(self) -> bytes:
        return canonical_json_bytes(self.response)


@dataclass(frozen=True)
class ChainConfig:
    """Immutable per-chain parameters, fixed at genesis."""

    rules: tuple[AclRule, ...]
    intrusion_threshold: int = 3
    max_block_size: int = 10

    def seq_of(self, version: Version) -> int:
        """Global commit index of a version: height * maxBlockSize + offset."""
        return version.height * self.max_block_size + version.offset


class _AppError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def _unauthorized(msg: str) -> _AppError:
    return _AppError("unauthorized", msg)


def _not_found(msg: str) -> _AppError:
    return _AppError("not-found", msg)


class _Ctx:
    """Per-execution context: snapshot reads, buffered writes, events."""

    def __init__(self, view: StateView, tx_id: str):
        self.view = view
        self.tx_id = tx_id
        self.writes: dict[str, Optional[bytes]] = {}
        self.events: list[ChainEvent] = []

    def get_json(self, key: str) -> Optional[dict]:
        raw = self.view.read(key)
        return json.loads(raw.decode("utf-8")) if raw is not None else None

    def exists(self, key: str) -> bool:
        return self.view.read(key) is not None

    def put_json(self, key: str, value: dict) -> None:
        self.writes[key] = canonical_json_bytes(value)

    def delete(self, key: str) -> None:
        self.writes[key] = None

    def emit(self, kind: EventKind, participant_id: str, place_id: Optional[str], detail: str, count: Optional[int] = None) -> None:
        self.events.append(ChainEvent(kind, participant_id, place_id, detail, self.tx_id, count))

    def rwset(self, *, include_writes: bool = True) -> ReadWriteSet:
        reads = list(self.view.reads.items())
        writes = [Write(k, v) for k, v in self.writes.items()] if include_writes else []
        return ReadWriteSet(reads=reads, writes=writes)


def _require_id(payload: dict, field_name: str) -> str:
    value = payload.get(field_name)
    if not isinstance(value, str) or not value:
        raise _AppError("invalid-argument", f"{field_name} must be a non-empty string")
    return value


def _load_participant(ctx: _Ctx, pid: str) -> Participant:
    d = ctx.get_json(participant_key(pid))
    if d is None:
        raise _not_found(f"participant {pid} not registered")
    return Participant.from_dict(d)


def _load_place(ctx: _Ctx, place_id: str) -> PhysicalPlace:
    d = ctx.get_json(place_key(place_id))
    if d is None:
        raise _not_found(f"place {place_id} not registered")
    return PhysicalPlace.from_dict(d)


def _may_administer_access(ctx: _Ctx, submitter: Participant, place: PhysicalPlace) -> bool:
    """Admin, CEO of the place's department, or active delegate for it.

    Checked in that order so the delegation key is only read (and only lands
    in the read set) when the cheaper role clauses fail.
    """
    if submitter.role == Role.ADMIN:
        return True
    if submitter.role == Role.CEO and submitter.department_id == place.department_id:
        return True
    return ctx.exists(deleg_key(submitter.participant_id, place.department_id))


def execute(
    submitter_card: IdentityCard,
    payload: dict,
    view: StateView,
    config: ChainConfig,
    *,
    tx_id: str,
    at_micros: int,
) -> ExecutionResult:
    """Dispatch one transaction payload against a state snapshot."""
    ctx = _Ctx(view, tx_id)
    decision = None
    try:
        tx_type = payload.get("type")
        if ctx.exists(revoked_card_key(submitter_card.card_id)):
            raise _AppError("revoked-card", f"card {submitter_card.card_id} is revoked")
        submitter = _load_participant(ctx, submitter_card.participant_id)

        if tx_type == TxType.GRANT_ACCESS.value:
            _apply_access_change(ctx, submitter, payload, Effect.GRANT)
        elif tx_type == TxType.REVOKE_ACCESS.value:
            _apply_access_change(ctx, submitter, payload, Effect.REVOKE)
        elif tx_type == TxType.DELEGATE_AUTHORITY.value:
            _apply_delegation(ctx, submitter, payload, grant=True)
        elif tx_type == TxType.REVOKE_DELEGATION.value:
            _apply_delegation(ctx, submitter, payload, grant=False)
        elif tx_type == TxType.CHECK_ACCESS.value:
            decision = _apply_check_access(ctx, submitter, payload, config, at_micros)
        elif tx_type == TxType.REGISTER_PARTICIPANT.value:
            _apply_register_participant(ctx, submitter, payload)
        elif tx_type == TxType.REGISTER_PLACE.value:
            _apply_register_place(ctx, submitter, payload)
        elif tx_type == TxType.REGISTER_DEPARTMENT.value:
            _apply_register_department(ctx, submitter, payload)
        elif tx_type == TxType.REVOKE_CARD.value:
            _apply_revoke_card(ctx, submitter, payload)
        else:
            raise _AppError("unknown-transaction", f"unknown transaction type {tx_type!r}")
    except _AppError as err:
        return ExecutionResult(
            rwset=ctx.rwset(include_writes=False),
            events=[],
            response={"status": "error", "code": err.code, "message": err.message},
        )

    response: dict = {"status": "ok"}
    if decision is not None:
        response["decision"] = decision.to_dict()
    return ExecutionResult(rwset=ctx.rwset(), events=ctx.events, response=response, decision=decision)


def _apply_access_change(ctx: _Ctx, submitter: Participant, payload: dict, effect: Effect) -> None:
    target_id = _require_id(payload, "targetParticipantId")
    place_id = _require_id(payload, "placeId")
    _load_participant(ctx, target_id)
    place = _load_place(ctx, place_id)
    if not _may_administer_access(ctx, submitter, place):
        raise _unauthorized(
            f"{submitter.participant_id} may not change access for department {place.department_id}"
        )
    key = dyn_key(target_id, place_id)
    ctx.view.read(key)  # observe the current entry so concurrent changes conflict
    ctx.put_json(key, {"effect": effect.value, "grantedBy": submitter.participant_id})
    ctx.emit(
        EventKind.ACCESS_GRANT_CHANGED,
        target_id,
        place_id,
        f"{effect.value} by {submitter.participant_id}",
    )


def _apply_delegation(ctx: _Ctx, submitter: Participant, payload: dict, *, grant: bool) -> None:
    delegate_id = _require_id(payload, "delegateParticipantId")
    dept_id = _require_id(payload, "departmentId")
    _load_participant(ctx, delegate_id)
    if ctx.get_json(dept_key(dept_id)) is None:
        raise _not_found(f"department {dept_id} not registered")
    authorized = submitter.role == Role.ADMIN or (
        submitter.role == Role.CEO and submitter.department_id == dept_id
    )
    if not authorized:
        raise _unauthorized(f"{submitter.participant_id} may not delegate for department {dept_id}")
    key = deleg_key(delegate_id, dept_id)
    ctx.view.read(key)
    if grant:
        ctx.put_json(key, {"delegatedBy": submitter.participant_id})
        detail = f"delegated by {submitter.participant_id}"
    else:
        ctx.delete(key)
        detail = f"delegation revoked by {submitter.participant_id}"
    ctx.emit(EventKind.DELEGATION_CHANGED, delegate_id, None, f"{dept_id}: {detail}")


def _apply_check_access(
    ctx: _Ctx, submitter: Participant, payload: dict, config: ChainConfig, at_micros: int
) -> Decision:
    place_id = _require_id(payload, "placeId")
    place = _load_place(ctx, place_id)

    overlay: list[DynamicEntry] = []
    key = dyn_key(submitter.participant_id, place_id)
    raw = ctx.view.read(key)
    if raw is not None:
        entry = json.loads(raw.decode("utf-8"))
        version = ctx.view.reads[key]
        overlay.append(
            DynamicEntry(
                participant_id=submitter.participant_id,
                place_id=place_id,
                effect=Effect(entry["effect"]),
                seq=config.seq_of(version),
                granted_by=entry["grantedBy"],
            )
        )

    request = AccessRequest(submitter, place, Action.READ, at_micros)
    decision = decide_effective(config.rules, overlay, request)

    counter_key = denials_key(submitter.participant_id, place_id)
    current = ctx.get_json(counter_key)
    count = current["count"] if current else 0
    if decision.outcome == Operation.ALLOW:
        ctx.put_json(counter_key, {"count": 0})
        ctx.emit(EventKind.ACCESS_GRANTED, submitter.participant_id, place_id, "access allowed")
    else:
        count += 1
        ctx.emit(EventKind.ACCESS_DENIED, submitter.participant_id, place_id, "access denied")
        if count >= config.intrusion_threshold:
            ctx.emit(
                EventKind.INTRUSION_ALERT,
                submitter.participant_id,
                place_id,
                f"{count} consecutive denials",
                count=count,
            )
            count = 0  # reset after the alert so runs are counted, not tails
        ctx.put_json(counter_key, {"count": count})
    return decision


def _require_admin(submitter: Participant) -> None:
    if submitter.role != Role.ADMIN:
        raise _unauthorized(f"{submitter.participant_id} is not an Admin")


def _apply_register_participant(ctx: _Ctx, submitter: Participant, payload: dict) -> None:
    _require_admin(submitter)
    entity = payload.get("participant")
    if not isinstance(entity, dict):
        raise _AppError("invalid-argument", "participant record missing")
    try:
        participant = Participant.from_dict(entity)
    except (KeyError, ValueError) as exc:
        raise _AppError("invalid-argument", f"invalid participant: {exc}") from None
    key = participant_key(participant.participant_id)
    if ctx.exists(key):
        raise _AppError("already-exists", f"participant {participant.participant_id} already registered")
    ctx.put_json(key, participant.to_dict())


def _apply_register_place(ctx: _Ctx, submitter: Participant, payload: dict) -> None:
    _require_admin(submitter)
    entity = payload.get("place")
    if not isinstance(entity, dict):
        raise _AppError("invalid-argument", "place record missing")
    try:
        place = PhysicalPlace.from_dict(entity)
    except (KeyError, ValueError) as exc:
        raise _AppError("invalid-argument", f"invalid place: {exc}") from None
    key = place_key(place.place_id)
    if ctx.exists(key):
        raise _AppError("already-exists", f"place {place.place_id} already registered")
    if not ctx.exists(dept_key(place.department_id)):
        raise _not_found(f"department {place.department_id} not registered")
    ctx.put_json(key, place.to_dict())


def _apply_register_department(ctx: _Ctx, submitter: Participant, payload: dict) -> None:
    _require_admin(submitter)
    entity = payload.get("department")
    if not isinstance(entity, dict):
        raise _AppError("invalid-argument", "department record missing")
    try:
        dept = Department.from_dict(entity)
    except (KeyError, ValueError) as exc:
        raise _AppError("invalid-argument", f"invalid department: {exc}") from None
    key = dept_key(dept.department_id)
    if ctx.exists(key):
        raise _AppError("already-exists", f"department {dept.department_id} already registered")
    ceo = _load_participant(ctx, dept.ceo_participant_id)
    if ceo.role != Role.CEO:
        raise _AppError("invalid-argument", f"{dept.ceo_participant_id} does not hold the CEO role")
    ctx.put_json(key, dept.to_dict())


def _apply_revoke_card(ctx: _Ctx, submitter: Participant, payload: dict) -> None:
    _require_admin(submitter)
    card_id = _require_id(payload, "cardId")
    key = revoked_card_key(card_id)
    if ctx.exists(key):
        raise _AppError("already-exists", f"card {card_id} is already revoked")
    ctx.put_json(key, {"revokedBy": submitter.participant_id})


# Payload constructors: the canonical shapes clients sign and submit.

def grant_access_payload(target_participant_id: str, place_id: str) -> dict:
    return {"type": TxType.GRANT_ACCESS.value, "targetParticipantId": target_participant_id, "placeId": place_id}


def revoke_access_payload(target_participant_id: str, place_id: str) -> dict:
    return {"type": TxType.REVOKE_ACCESS.value, "targetParticipantId": target_participant_id, "placeId": place_id}


def delegate_authority_payload(delegate_participant_id: str, department_id: str) -> dict:
    return {"type": TxType.DELEGATE_AUTHORITY.value, "delegateParticipantId": delegate_participant_id, "departmentId": department_id}


def revoke_delegation_payload(delegate_participant_id: str, department_id: str) -> dict:
    return {"type": TxType.REVOKE_DELEGATION.value, "delegateParticipantId": delegate_participant_id, "departmentId": department_id}


def check_access_payload(place_id: str) -> dict:
    return {"type": TxType.CHECK_ACCESS.value, "placeId": place_id}


def register_participant_payload(participant: Participant) -> dict:
    return {"type": TxType.REGISTER_PARTICIPANT.value, "participant": participant.to_dict()}


def register_place_payload(place: PhysicalPlace) -> dict:
    return {"type": TxType.REGISTER_PLACE.value, "place": place.to_dict()}


def register_department_payload(department: Department) -> dict:
    return {"type": TxType.REGISTER_DEPARTMENT.value, "department": department.to_dict()}


def revoke_card_payload(card_id: str) -> dict:
    return {"type": TxType.REVOKE_CARD.value, "cardId": card_id}
