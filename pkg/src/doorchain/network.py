"""Execute-order-validate pipeline over an in-process two-org peer network.

Clients endorse proposals on every peer (execute), a single orderer batches
envelopes into blocks (order), and each peer re-checks endorsements and read
versions before committing (validate). Peers never talk to each other; they
converge because they apply the same deterministic rules to the same block
stream.
"""

from __future__ import annotations

import secrets
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .chaincode import ChainConfig, ReadWriteSet, execute
from .codec import canonical_json_bytes, lp, now_micros, sha256, u64
from .domain import HolderCard, IdentityCard, verify_card
from .events import EventBus
from .genesis import chain_config_from_genesis
from .ledger import (
    Block,
    BlockFile,
    Ledger,
    TransactionEnvelope,
    Validity,
)
from .state import StateView, Version
from .crypto import SigningKey, VerifyKey


class NetworkError(Exception):
    pass


class EndorseRejected(NetworkError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


class PolicyUnsatisfied(NetworkError):
    pass


class EndorsementMismatch(NetworkError):
    pass


@dataclass(frozen=True)
class Proposal:
    """A client-signed transaction proposal, prior to endorsement."""

    card: IdentityCard
    payload: dict
    client_signature: bytes
    proposed_at_micros: int
    nonce: bytes

    def payload_bytes(self) -> bytes:
        return canonical_json_bytes(self.payload)

    def canonical_bytes(self) -> bytes:
        return (
            lp(canonical_json_bytes(self.card.to_dict()))
            + lp(self.payload_bytes())
            + lp(self.client_signature)
            + u64(self.proposed_at_micros)
            + lp(self.nonce)
        )

    def tx_id(self) -> bytes:
        return sha256(self.canonical_bytes())


def make_proposal(
    holder: HolderCard,
    payload: dict,
    *,
    at_micros: Optional[int] = None,
    nonce: Optional[bytes] = None,
) -> Proposal:
    """Sign a payload with the holder's card key and wrap it as a proposal."""
    return Proposal(
        card=holder.card,
        payload=payload,
        client_signature=holder.sign(canonical_json_bytes(payload)),
        proposed_at_micros=at_micros if at_micros is not None else now_micros(),
        nonce=nonce if nonce is not None else secrets.token_bytes(16),
    )


@dataclass
class Endorsement:
    peer_id: str
    org_id: str
    rwset: ReadWriteSet
    response: dict
    events: list
    signature: bytes

    def response_hash(self) -> bytes:
        return sha256(canonical_json_bytes(self.response))


@dataclass(frozen=True)
class EndorsementPolicy:
    """One endorsement from each required org."""

    required_orgs: frozenset

    def __post_init__(self):
        if not self.required_orgs:
            raise ValueError("endorsement policy requires at least one org")

    def satisfied_by(self, orgs) -> bool:
        return self.required_orgs <= set(orgs)


@dataclass
class OrdererConfig:
    max_block_size: int = 10
    batch_timeout: float = 1.0

    def __post_init__(self):
        if self.max_block_size < 1:
            raise ValueError("maxBlockSize must be >= 1")
        if self.batch_timeout <= 0:
            raise ValueError("batchTimeout must be positive")


def endorsement_signed_bytes(proposal_bytes: bytes, rwset_bytes: bytes) -> bytes:
    return lp(proposal_bytes) + lp(rwset_bytes)


class Peer:
    """One peer: endorses against its committed state and validates blocks."""

    def __init__(
        self,
        peer_id: str,
        org_id: str,
        signing_key: SigningKey,
        ca_public_key: VerifyKey,
        policy: EndorsementPolicy,
        chain_config: Optional[ChainConfig] = None,
        block_file: Optional[BlockFile] = None,
    ):
        self.peer_id = peer_id
        self.org_id = org_id
        self.signing_key = signing_key
        self.ca_public_key = ca_public_key
        self.policy = policy
        self.chain_config = chain_config
        self.block_file = block_file
        self.event_bus = EventBus()
        self.ledger = Ledger(on_events=self.event_bus.publish)
        self.roster: dict[str, tuple[str, VerifyKey]] = {}
        self._commit_listeners: list[Callable[[Block], None]] = []
        self._reorder_buffer: dict[int, Block] = {}
        self._reorder_window = 64
        self._commit_lock = threading.Lock()

    def set_roster(self, roster: dict[str, tuple[str, VerifyKey]]) -> None:
        self.roster = dict(roster)

    def add_commit_listener(self, fn: Callable[[Block], None]) -> None:
        self._commit_listeners.append(fn)

    # -- bootstrap / recovery ------------------------------------------------

    def bootstrap(self, genesis: Block) -> None:
        if len(self.ledger.chain) != 0:
            raise NetworkError("peer already bootstrapped")
        if self.chain_config is None:
            self.chain_config = chain_config_from_genesis(genesis)
        self._commit(genesis)
        if self.block_file is not None:
            self.block_file.append(genesis)

    def recover_from_file(self) -> int:
        """Replay the peer's own block file; returns the recovered tip height."""
        if self.block_file is None:
            raise NetworkError("peer has no block file")
        blocks = self.block_file.read_blocks()
        if not blocks:
            return -1
        if self.chain_config is None:
            self.chain_config = chain_config_from_genesis(blocks[0])
        for block in blocks:
            self._commit(block)
        return self.ledger.chain.height

    # -- execute phase -------------------------------------------------------

    def endorse(self, proposal: Proposal) -> Endorsement:
        """Simulate the proposal against committed state; never mutates it."""
        if not verify_card(proposal.card, self.ca_public_key):
            raise EndorseRejected("bad-card", "card certificate does not verify")
        if not proposal.card.verify_key().verify(proposal.payload_bytes(), proposal.client_signature):
            raise EndorseRejected("bad-signature", "client signature does not verify")
        if self.chain_config is None:
            raise NetworkError("peer not bootstrapped")
        view = StateView(self.ledger.state.snapshot())
        result = execute(
            proposal.card,
            proposal.payload,
            view,
            self.chain_config,
            tx_id=proposal.tx_id().hex(),
            at_micros=proposal.proposed_at_micros,
        )
        if result.response.get("code") == "revoked-card":
            raise EndorseRejected("revoked-card", result.response.get("message", "card revoked"))
        signature = self.signing_key.sign(
            endorsement_signed_bytes(proposal.canonical_bytes(), result.rwset.canonical_bytes())
        )
        return Endorsement(
            peer_id=self.peer_id,
            org_id=self.org_id,
            rwset=result.rwset,
            response=result.response,
            events=result.events,
            signature=signature,
        )

    # -- validate phase ------------------------------------------------------

    def receive_block(self, block: Block) -> Optional[list[Validity]]:
        """Validate and commit a delivered block; buffers out-of-order heights."""
        with self._commit_lock:
            expected = self.ledger.chain.height + 1
            if block.header.height > expected:
                if block.header.height - expected > self._reorder_window:
                    raise NetworkError(
                        f"block {block.header.height} beyond reorder window (tip {expected - 1})"
                    )
                self._reorder_buffer[block.header.height] = block
                return None
            if block.header.height < expected:
                return None  # duplicate delivery
            flags = self._validate_and_commit(block)
            while self.ledger.chain.height + 1 in self._reorder_buffer:
                self._validate_and_commit(self._reorder_buffer.pop(self.ledger.chain.height + 1))
            return flags

    def _validate_and_commit(self, block: Block) -> list[Validity]:
        local = Block(header=block.header, transactions=list(block.transactions))
        local.validity = self._validate_block(local)
        self._commit(local)
        if self.block_file is not None:
            self.block_file.append(local)
        return local.validity

    def _commit(self, block: Block) -> None:
        self.ledger.commit(block)
        for fn in self._commit_listeners:
            fn(block)

    def _validate_block(self, block: Block) -> list[Validity]:
        flags: list[Validity] = []
        overlay: dict[str, Optional[Version]] = {}
        height = block.header.height
        for offset, env in enumerate(block.transactions):
            if not self._endorsement_valid(env):
                flags.append(Validity.INVALID_ENDORSEMENT)
                continue
            if not self._reads_current(env.rwset, overlay):
                flags.append(Validity.INVALID_MVCC)
                continue
            flags.append(Validity.VALID)
            version = Version(height, offset)
            for write in env.rwset.writes:
                overlay[write.key] = None if write.value is None else version
        return flags

    def _endorsement_valid(self, env: TransactionEnvelope) -> bool:
        if env.card is None:
            return False  # system transactions exist only in genesis
        if env.tx_id != sha256(env.proposal_bytes()):
            return False
        if not verify_card(env.card, self.ca_public_key):
            return False
        payload_bytes = canonical_json_bytes(env.payload)
        if not env.card.verify_key().verify(payload_bytes, env.client_signature):
            return False
        signed = endorsement_signed_bytes(env.proposal_bytes(), env.rwset.canonical_bytes())
        orgs = set()
        for peer_id, signature in env.endorsements:
            entry = self.roster.get(peer_id)
            if entry is None:
                return False
            org_id, key = entry
            if not key.verify(signed, signature):
                return False
            orgs.add(org_id)
        return self.policy.satisfied_by(orgs)

    def _reads_current(self, rwset: ReadWriteSet, overlay: dict[str, Optional[Version]]) -> bool:
        for key, observed in rwset.reads:
            if key in overlay:
                current = overlay[key]
            else:
                entry = self.ledger.state.get(key)
                current = entry[1] if entry else None
            if current != observed:
                return False
        return True

    def world_state_hash(self) -> bytes:
        return self.ledger.world_state_hash()


def assemble(
    proposal: Proposal,
    endorsements: list[Endorsement],
    policy: EndorsementPolicy,
) -> TransactionEnvelope:
    """Combine endorsements into an envelope iff they agree and satisfy policy."""
    if not endorsements:
        raise PolicyUnsatisfied("no endorsements collected")
    orgs = {e.org_id for e in endorsements}
    if not policy.satisfied_by(orgs):
        missing = sorted(policy.required_orgs - orgs)
        raise PolicyUnsatisfied(f"missing endorsements from orgs: {', '.join(missing)}")
    first = endorsements[0]
    first_rwset = first.rwset.canonical_bytes()
    first_response = first.response_hash()
    for e in endorsements[1:]:
        if e.rwset.canonical_bytes() != first_rwset:
            raise EndorsementMismatch(f"read-write sets diverge between {first.peer_id} and {e.peer_id}")
        if e.response_hash() != first_response:
            raise EndorsementMismatch(f"responses diverge between {first.peer_id} and {e.peer_id}")
    return TransactionEnvelope(
        tx_id=proposal.tx_id(),
        card=proposal.card,
        payload=proposal.payload,
        response=first.response,
        rwset=first.rwset,
        events=list(first.events),
        client_signature=proposal.client_signature,
        proposed_at_micros=proposal.proposed_at_micros,
        nonce=proposal.nonce,
        endorsements=[(e.peer_id, e.signature) for e in endorsements],
    )


class Orderer:
    """Single ordering node: serializes envelopes and cuts numbered blocks."""

    def __init__(self, config: OrdererConfig, next_height: int, prev_hash: bytes):
        self.config = config
        self._next_height = next_height
        self._prev_hash = prev_hash
        self._pending: list[TransactionEnvelope] = []
        self._first_at: Optional[float] = None
        self._lock = threading.Lock()

    @property
    def pending_count(self) -> int:
        with self._lock:
            return len(self._pending)

    def submit(self, envelope: TransactionEnvelope) -> None:
        with self._lock:
            if not self._pending:
                self._first_at = time.monotonic()
            self._pending.append(envelope)

    def try_cut(self, now: Optional[float] = None) -> list[Block]:
        """Cut any blocks due by size or batch timeout."""
        now = time.monotonic() if now is None else now
        blocks = []
        with self._lock:
            while len(self._pending) >= self.config.max_block_size:
                blocks.append(self._cut_locked(self.config.max_block_size))
            if (
                self._pending
                and self._first_at is not None
                and now - self._first_at >= self.config.batch_timeout
            ):
                blocks.append(self._cut_locked(len(self._pending)))
        return blocks

    def force_cut(self) -> Optional[Block]:
        with self._lock:
            if not self._pending:
                return None
            return self._cut_locked(len(self._pending))

    def seconds_until_timeout(self, now: Optional[float] = None) -> Optional[float]:
        now = time.monotonic() if now is None else now
        with self._lock:
            if not self._pending or self._first_at is None:
                return None
            return max(0.0, self.config.batch_timeout - (now - self._first_at))

    def _cut_locked(self, count: int) -> Block:
        envs = self._pending[:count]
        self._pending = self._pending[count:]
        self._first_at = time.monotonic() if self._pending else None
        block = Block.build(self._next_height, self._prev_hash, envs, now_micros())
        self._next_height += 1
        self._prev_hash = block.header.block_hash
        return block


@dataclass
class CommitResult:
    tx_id: bytes
    height: int
    offset: int
    validity: Validity
    response: dict

    @property
    def valid(self) -> bool:
        return self.validity == Validity.VALID


class _CommitIndex:
    """Resolves waiters by txId as the exposed peer commits blocks."""

    def __init__(self):
        self._results: dict[bytes, CommitResult] = {}
        self._cond = threading.Condition()

    def on_commit(self, block: Block) -> None:
        with self._cond:
            for offset, (env, flag) in enumerate(zip(block.transactions, block.validity)):
                self._results[env.tx_id] = CommitResult(
                    tx_id=env.tx_id,
                    height=block.header.height,
                    offset=offset,
                    validity=flag,
                    response=env.response,
                )
            self._cond.notify_all()

    def wait_for(self, tx_id: bytes, timeout: float) -> Optional[CommitResult]:
        deadline = time.monotonic() + timeout
        with self._cond:
            while tx_id not in self._results:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return None
                self._cond.wait(remaining)
            return self._results[tx_id]

    def get(self, tx_id: bytes) -> Optional[CommitResult]:
        with self._cond:
            return self._results.get(tx_id)


class AccessNetwork:
    """Wires peers and the orderer together; sync by default, threaded via start().

    In sync mode, callers drive block cutting with pump()/flush(), which makes
    tests deterministic. start() spawns a cutter thread that applies the same
    size/timeout rules on a clock.
    """

    def __init__(
        self,
        peers: list[Peer],
        orderer_config: OrdererConfig,
        policy: EndorsementPolicy,
        delivery_delay: float = 0.0,
    ):
        if not peers:
            raise ValueError("a network needs at least one peer")
        self.peers = peers
        self.policy = policy
        self.exposed_peer = peers[0]
        self.delivery_delay = delivery_delay
        tip = self.exposed_peer.ledger.chain.tip
        if tip is None:
            raise NetworkError("peers must be bootstrapped before building the network")
        self.orderer = Orderer(orderer_config, tip.header.height + 1, tip.header.block_hash)
        self.commits = _CommitIndex()
        self.exposed_peer.add_commit_listener(self.commits.on_commit)
        self._stop = threading.Event()
        self._cutter: Optional[threading.Thread] = None
        # Endorsement collection must not straddle a block delivery: a commit
        # between the two peers' endorsements would change one snapshot and
        # make byte-identical read sets impossible.
        self._endorse_lock = threading.Lock()

    @property
    def chain_config(self) -> ChainConfig:
        assert self.exposed_peer.chain_config is not None
        return self.exposed_peer.chain_config

    # -- pipeline ------------------------------------------------------------

    def endorse_all(self, proposal: Proposal) -> list[Endorsement]:
        with self._endorse_lock:
            return [peer.endorse(proposal) for peer in self.peers]

    def submit_proposal(self, proposal: Proposal) -> TransactionEnvelope:
        """Endorse on every peer, assemble, and hand to the orderer."""
        envelope = assemble(proposal, self.endorse_all(proposal), self.policy)
        self.orderer.submit(envelope)
        return envelope

    def deliver(self, block: Block) -> None:
        with self._endorse_lock:
            for peer in self.peers:
                if self.delivery_delay:
                    time.sleep(self.delivery_delay)
                peer.receive_block(block)

    def pump(self, now: Optional[float] = None) -> int:
        """Sync mode: cut whatever is due and deliver it. Returns blocks cut."""
        blocks = self.orderer.try_cut(now)
        for block in blocks:
            self.deliver(block)
        return len(blocks)

    def flush(self) -> int:
        """Sync mode: cut all pending envelopes regardless of size/timeout."""
        count = 0
        while True:
            block = self.orderer.force_cut()
            if block is None:
                return count
            self.deliver(block)
            count += 1

    # -- live mode -----------------------------------------------------------

    def start(self) -> None:
        if self._cutter is not None:
            return
        self._stop.clear()
        self._cutter = threading.Thread(target=self._cutter_loop, name="orderer-cutter", daemon=True)
        self._cutter.start()

    def stop(self) -> None:
        self._stop.set()
        if self._cutter is not None:
            self._cutter.join(timeout=5)
            self._cutter = None
        self.flush()

    def _cutter_loop(self) -> None:
        while not self._stop.is_set():
            for block in self.orderer.try_cut():
                self.deliver(block)
            wait = self.orderer.seconds_until_timeout()
            self._stop.wait(0.02 if wait is None else min(wait, 0.05) + 0.001)

    # -- convenience ---------------------------------------------------------

    def submit_and_wait(self, proposal: Proposal, timeout: float = 30.0) -> CommitResult:
        envelope = self.submit_proposal(proposal)
        result = self.commits.wait_for(envelope.tx_id, timeout)
        if result is None:
            raise NetworkError(f"transaction {envelope.tx_id.hex()} not committed within {timeout}s")
        return result

    def converged(self) -> bool:
        hashes = {peer.world_state_hash() for peer in self.peers}
        heights = {peer.ledger.chain.height for peer in self.peers}
        return len(hashes) == 1 and len(heights) == 1
