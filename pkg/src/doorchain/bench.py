"""Benchmark harness: fixed-rate load through the full pipeline.

A round has three phases. init registers a disposable department, a pool of
users and places per client, and issues their cards. run submits transactions
from a single scheduler at the configured send rate; submissions block a
worker thread until commit but never the schedule. end aggregates the eight
report columns: Succ, Fail, Send Rate, Max/Min/Avg/75%ile Latency, Throughput.

A transaction counts as Succ iff it commits Valid with a non-error response;
a CheckAccess that returns Deny is still Succ. Keys are sharded per client so
the standard preset never produces MVCC conflicts; the conflict preset aims
every transaction at one key pair instead.
"""

from __future__ import annotations

import json
import math
import random
import secrets
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from . import chaincode
from .client import ClientError
from .codec import canonical_json_bytes, now_micros
from .config import BenchSection
from .crypto import SigningKey
from .domain import Department, HolderCard, Participant, PhysicalPlace, Role, issue_card
from .ledger import Validity
from .network import AccessNetwork, EndorseRejected, Proposal, assemble

_CODE_STATUS = {
    "unauthorized": 403,
    "not-found": 404,
    "already-exists": 409,
    "invalid-argument": 422,
    "unknown-transaction": 422,
    "revoked-card": 401,
}


class BenchError(Exception):
    pass


def nearest_rank_percentile(sorted_values: list[float], pct: float) -> float:
    """Nearest-rank percentile: the ceil(p*n)-th smallest value, 1-indexed."""
    if not sorted_values:
        raise ValueError("no samples")
    rank = max(1, math.ceil(pct / 100.0 * len(sorted_values)))
    return sorted_values[rank - 1]


@dataclass(frozen=True)
class BenchSample:
    kind: str
    scheduled: float  # seconds from round start, ideal dispatch time
    sent: float  # seconds from round start, just before submission
    committed: float  # seconds from round start, commit acknowledgement
    valid: bool

    @property
    def latency(self) -> float:
        return self.committed - self.sent

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "scheduled": round(self.scheduled, 6),
            "sent": round(self.sent, 6),
            "committed": round(self.committed, 6),
            "valid": self.valid,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BenchSample":
        return cls(d["kind"], d["scheduled"], d["sent"], d["committed"], d["valid"])


MARKDOWN_HEADER = (
    "| Name | Succ | Fail | Send Rate | Max Latency | Min Latency "
    "| Avg Latency | 75%ile Latency | Throughput |"
)


@dataclass
class BenchReport:
    name: str
    succ: int
    fail: int
    send_rate: float
    max_latency: Optional[float]
    min_latency: Optional[float]
    avg_latency: Optional[float]
    p75_latency: Optional[float]
    throughput: float
    samples: list[BenchSample] = field(default_factory=list)

    @classmethod
    def aggregate(cls, name: str, send_rate: float, samples: list[BenchSample]) -> "BenchReport":
        """Deterministic aggregation: same samples always give the same report."""
        succ_samples = [s for s in samples if s.valid]
        succ, fail = len(succ_samples), len(samples) - len(succ_samples)
        if succ_samples:
            latencies = sorted(s.latency for s in succ_samples)
            first_send = min(s.sent for s in samples)
            last_commit = max(s.committed for s in succ_samples)
            throughput = succ / max(last_commit - first_send, 1e-9)
            return cls(
                name=name,
                succ=succ,
                fail=fail,
                send_rate=send_rate,
                max_latency=latencies[-1],
                min_latency=latencies[0],
                avg_latency=sum(latencies) / len(latencies),
                p75_latency=nearest_rank_percentile(latencies, 75),
                throughput=throughput,
                samples=samples,
            )
        return cls(
            name=name,
            succ=0,
            fail=fail,
            send_rate=send_rate,
            max_latency=None,
            min_latency=None,
            avg_latency=None,
            p75_latency=None,
            throughput=0.0,
            samples=samples,
        )

    def to_dict(self) -> dict:
        r6 = lambda v: None if v is None else round(v, 6)
        return {
            "name": self.name,
            "succ": self.succ,
            "fail": self.fail,
            "sendRate": self.send_rate,
            "maxLatency": r6(self.max_latency),
            "minLatency": r6(self.min_latency),
            "avgLatency": r6(self.avg_latency),
            "p75Latency": r6(self.p75_latency),
            "throughput": round(self.throughput, 6),
            "samples": [s.to_dict() for s in self.samples],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BenchReport":
        return cls(
            name=d["name"],
            succ=d["succ"],
            fail=d["fail"],
            send_rate=d["sendRate"],
            max_latency=d["maxLatency"],
            min_latency=d["minLatency"],
            avg_latency=d["avgLatency"],
            p75_latency=d["p75Latency"],
            throughput=d["throughput"],
            samples=[BenchSample.from_dict(s) for s in d.get("samples", [])],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def markdown(self) -> str:
        sec = lambda v: "n/a" if v is None else f"{v:.2f}s"
        row = (
            f"| {self.name} | {self.succ} | {self.fail} | {self.send_rate:g} tps "
            f"| {sec(self.max_latency)} | {sec(self.min_latency)} | {sec(self.avg_latency)} "
            f"| {sec(self.p75_latency)} | {self.throughput:.2f} tps |"
        )
        separator = "|" + " --- |" * 9
        return "\n".join([MARKDOWN_HEADER, separator, row])


class LocalClient:
    """GatewayClient-shaped driver over an in-process network, no HTTP.

    Matches the gateway's response dictionaries and error codes so the bench
    and tests can target either transparently. Does not retry MVCC conflicts;
    an invalidated transaction surfaces as valid=False.
    """

    def __init__(self, network: AccessNetwork, holder: HolderCard, timeout: float = 30.0):
        self.network = network
        self.holder = holder
        self.timeout = timeout
        self.participant_id = holder.card.participant_id

    def close(self) -> None:
        pass

    def login(self) -> dict:
        return {"participantId": self.participant_id}

    def _submit(self, payload: dict) -> dict:
        proposal = Proposal(
            card=self.holder.card,
            payload=payload,
            client_signature=self.holder.sign(canonical_json_bytes(payload)),
            proposed_at_micros=now_micros(),
            nonce=secrets.token_bytes(16),
        )
        try:
            endorsements = self.network.endorse_all(proposal)
        except EndorseRejected as exc:
            raise ClientError(401, exc.code, exc.message) from None
        response = endorsements[0].response
        if response.get("status") != "ok":
            code = response.get("code", "invalid-argument")
            raise ClientError(_CODE_STATUS.get(code, 422), code, response.get("message", ""))
        envelope = assemble(proposal, endorsements, self.network.policy)
        self.network.orderer.submit(envelope)
        result = self.network.commits.wait_for(envelope.tx_id, self.timeout)
        if result is None:
            raise ClientError(503, "commit-timeout", "transaction did not commit in time")
        return {
            "txId": envelope.tx_id.hex(),
            "valid": result.validity == Validity.VALID,
            "blockHeight": result.height,
            "txOffset": result.offset,
            "response": result.response,
        }

    def grant(self, target_participant_id: str, place_id: str) -> dict:
        return self._submit(chaincode.grant_access_payload(target_participant_id, place_id))

    def revoke(self, target_participant_id: str, place_id: str) -> dict:
        return self._submit(chaincode.revoke_access_payload(target_participant_id, place_id))

    def delegate(self, delegate_participant_id: str, department_id: str) -> dict:
        return self._submit(
            chaincode.delegate_authority_payload(delegate_participant_id, department_id)
        )

    def revoke_delegation(self, delegate_participant_id: str, department_id: str) -> dict:
        return self._submit(
            chaincode.revoke_delegation_payload(delegate_participant_id, department_id)
        )

    def register_participant(self, participant: Participant) -> dict:
        return self._submit(chaincode.register_participant_payload(participant))

    def register_place(self, place: PhysicalPlace) -> dict:
        return self._submit(chaincode.register_place_payload(place))

    def register_department(self, department: Department) -> dict:
        return self._submit(chaincode.register_department_payload(department))

    def revoke_card(self, card_id: str) -> dict:
        return self._submit(chaincode.revoke_card_payload(card_id))

    def check_access(self, place_id: str) -> dict:
        result = self._submit(chaincode.check_access_payload(place_id))
        return {
            "decision": result["response"].get("decision"),
            "txId": result["txId"],
            "valid": result["valid"],
            "blockHeight": result["blockHeight"],
        }


@dataclass
class _Fixtures:
    users: list[tuple[Participant, HolderCard]]
    places: list[PhysicalPlace]


def _prepare_fixtures(
    section: BenchSection,
    authority: SigningKey,
    admin_client: Any,
    client_factory: Callable[[HolderCard], Any],
) -> tuple[_Fixtures, list[Any]]:
    """init phase: register department, users, places; issue and log in cards."""

    def tolerate_existing(fn) -> None:
        try:
            fn()
        except ClientError as exc:
            if exc.status != 409:
                raise

    dept_id = "bench-dept"
    ceo = Participant("bench-ceo", "Bench CEO", Role.CEO, dept_id)
    tolerate_existing(lambda: admin_client.register_participant(ceo))
    tolerate_existing(
        lambda: admin_client.register_department(Department(dept_id, "Bench", ceo.participant_id))
    )

    users = []
    places = []
    for i in range(section.client_count):
        for j in range(section.key_pool_size):
            users.append(Participant(f"bench-u{i}-{j}", f"Bench user {i}/{j}", Role.EMPLOYEE, dept_id))
            places.append(PhysicalPlace(f"bench-p{i}-{j}", f"Bench door {i}/{j}", dept_id))

    with ThreadPoolExecutor(max_workers=16) as pool:
        list(
            pool.map(
                lambda p: tolerate_existing(lambda: admin_client.register_place(p)), places
            )
        )
        list(
            pool.map(
                lambda u: tolerate_existing(lambda: admin_client.register_participant(u)), users
            )
        )

    user_fixtures = []
    user_clients = []
    for user in users:
        holder = issue_card(user.participant_id, authority, lambda pid: True)
        client = client_factory(holder)
        client.login()
        user_fixtures.append((user, holder))
        user_clients.append(client)
    return _Fixtures(users=user_fixtures, places=places), user_clients


def run_round(
    section: BenchSection,
    *,
    name: str,
    authority: SigningKey,
    admin_participant_id: str,
    client_factory: Callable[[HolderCard], Any],
) -> BenchReport:
    if section.total_transactions < 0:
        raise BenchError("totalTransactions must be >= 0")
    if section.send_rate <= 0:
        raise BenchError("sendRate must be positive")

    admin_holder = issue_card(admin_participant_id, authority, lambda pid: True)
    admin_client = client_factory(admin_holder)
    admin_client.login()

    total = section.total_transactions
    if total == 0:
        return BenchReport.aggregate(name, section.send_rate, [])

    fixtures, user_clients = _prepare_fixtures(section, authority, admin_client, client_factory)
    clients = section.client_count
    pool_size = section.key_pool_size
    rng = random.Random(section.seed)
    thresholds = (section.mix_check, section.mix_check + section.mix_grant)
    kinds = []
    for _ in range(total):
        roll = rng.random()
        kinds.append("check" if roll < thresholds[0] else "grant" if roll < thresholds[1] else "revoke")

    samples: list[BenchSample] = [None] * total  # type: ignore[list-item]
    t0 = time.monotonic() + 0.2

    def pair_of(k: int) -> tuple[int, int]:
        if section.conflict_preset:
            return 0, 0
        return k % clients, (k // clients) % pool_size

    def fire(k: int) -> None:
        i, j = pair_of(k)
        slot = i * pool_size + j
        user = fixtures.users[slot][0]
        place_id = fixtures.places[slot].place_id
        kind = kinds[k]
        sent = time.monotonic() - t0
        try:
            if kind == "check":
                result = user_clients[slot].check_access(place_id)
            elif kind == "grant":
                result = admin_client.grant(user.participant_id, place_id)
            else:
                result = admin_client.revoke(user.participant_id, place_id)
            valid = bool(result["valid"])
        except ClientError:
            valid = False
        committed = time.monotonic() - t0
        samples[k] = BenchSample(
            kind=kind, scheduled=k / section.send_rate, sent=sent, committed=committed, valid=valid
        )

    workers = ThreadPoolExecutor(max_workers=min(96, max(16, clients * 8)))
    futures = []
    try:
        for k in range(total):
            due = t0 + k / section.send_rate
            delay = due - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            futures.append(workers.submit(fire, k))
        for future in futures:
            future.result()
    finally:
        workers.shutdown(wait=True)
        for client in user_clients:
            client.close()
        admin_client.close()

    report = BenchReport.aggregate(name, section.send_rate, list(samples))
    if report.succ + report.fail != total:
        raise BenchError("sample conservation violated")
    return report
