"""The two-part ledger: hash-chained transaction log plus versioned world state.

Block bytes are laid out so that every byte of a serialized chain is covered
by some recomputable hash:

    record      := u32(len) || block
    block       := header || txSection || flagSection
    header      := u64(height) || prevHash(32) || dataHash(32)
                   || u64(timestampMicros) || blockHash(32)
    txSection   := u32(txCount) || { u32(len) || envelope }*
    flagSection := u32(flagCount) || flagByte* || flagsDigest(32)

    dataHash    = SHA-256(txSection)
    blockHash   = SHA-256(u64(height) || prevHash || dataHash || u64(ts))
    flagsDigest = SHA-256(blockHash || flagBytes)

Validity flags are assigned after ordering, so they cannot live under
dataHash; flagsDigest ties them to the block they describe. Envelope bytes
are length-prefixed field concatenation with canonical JSON leaves (see
Envelope.to_bytes). Parsing is strict: any mutation that survives the hash
checks breaks exact consumption instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Optional

from .chaincode import ChainEvent, ReadWriteSet
from .codec import (
    DecodeError,
    Reader,
    ZERO_HASH,
    canonical_json_bytes,
    lp,
    lp_str,
    micros_to_rfc3339,
    sha256,
    u32,
    u64,
)
from .domain import IdentityCard
from .state import Version, VersionedStore


class LedgerError(Exception):
    pass


class BrokenLink(LedgerError):
    pass


class BadHeight(LedgerError):
    pass


class BadDataHash(LedgerError):
    pass


class InvalidBootstrap(LedgerError):
    pass


class Validity(str, Enum):
    VALID = "Valid"
    INVALID_MVCC = "InvalidMvcc"
    INVALID_ENDORSEMENT = "InvalidEndorsement"


_FLAG_BYTES = {Validity.VALID: 0, Validity.INVALID_MVCC: 1, Validity.INVALID_ENDORSEMENT: 2}
_BYTE_FLAGS = {v: k for k, v in _FLAG_BYTES.items()}


@dataclass
class TransactionEnvelope:
    """A signed, endorsed transaction ready for ordering.

    `card` is None only for the genesis bootstrap transaction, which carries
    no client identity; its signature and nonce are empty.
    """

    tx_id: bytes
    card: Optional[IdentityCard]
    payload: dict
    response: dict
    rwset: ReadWriteSet
    events: list[ChainEvent]
    client_signature: bytes
    proposed_at_micros: int
    nonce: bytes
    endorsements: list[tuple[str, bytes]] = field(default_factory=list)

    @property
    def submitter_id(self) -> str:
        return self.card.participant_id if self.card else "genesis"

    @property
    def card_id(self) -> str:
        return self.card.card_id if self.card else ""

    @property
    def tx_type(self) -> str:
        return self.payload.get("type", "")

    def card_bytes(self) -> bytes:
        return canonical_json_bytes(self.card.to_dict()) if self.card else b""

    def proposal_bytes(self) -> bytes:
        """The signed-proposal serialization whose hash is the txId."""
        return (
            lp(self.card_bytes())
            + lp(canonical_json_bytes(self.payload))
            + lp(self.client_signature)
            + u64(self.proposed_at_micros)
            + lp(self.nonce)
        )

    def to_bytes(self) -> bytes:
        out = bytearray()
        out += self.tx_id
        out += lp(self.card_bytes())
        out += lp(canonical_json_bytes(self.payload))
        out += lp(canonical_json_bytes(self.response))
        out += lp(self.rwset.canonical_bytes())
        out += lp(canonical_json_bytes([e.to_dict() for e in self.events]))
        out += lp(self.client_signature)
        out += u64(self.proposed_at_micros)
        out += lp(self.nonce)
        out += u32(len(self.endorsements))
        for peer_id, signature in self.endorsements:
            out += lp_str(peer_id) + lp(signature)
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "TransactionEnvelope":
        r = Reader(data)
        try:
            tx_id = r.take(32)
            card_raw = r.lp()
            card = IdentityCard.from_dict(_json_of(card_raw)) if card_raw else None
            payload = r.lp_json()
            response = r.lp_json()
            rwset = ReadWriteSet.from_dict(r.lp_json())
            events = [ChainEvent.from_dict(d) for d in r.lp_json()]
            client_signature = r.lp()
            proposed_at = r.u64()
            nonce = r.lp()
            endorsements = []
            for _ in range(r.u32()):
                endorsements.append((r.lp_str(), r.lp()))
            r.expect_end()
        except DecodeError:
            raise
        except Exception as exc:
            # corrupt JSON leaves surface as KeyError / binascii / enum errors
            raise DecodeError(f"malformed envelope: {exc}") from None
        return cls(
            tx_id=tx_id,
            card=card,
            payload=payload,
            response=response,
            rwset=rwset,
            events=events,
            client_signature=client_signature,
            proposed_at_micros=proposed_at,
            nonce=nonce,
            endorsements=endorsements,
        )


def _json_of(raw: bytes) -> dict:
    import json

    try:
        return json.loads(raw.decode("utf-8"))
    except Exception as exc:
        raise DecodeError(f"invalid embedded JSON: {exc}") from None


@dataclass(frozen=True)
class BlockHeader:
    height: int
    prev_hash: bytes
    data_hash: bytes
    timestamp_micros: int
    block_hash: bytes


def compute_block_hash(height: int, prev_hash: bytes, data_hash: bytes, timestamp_micros: int) -> bytes:
    return sha256(u64(height) + prev_hash + data_hash + u64(timestamp_micros))


def tx_section_bytes(envelopes: Iterable[TransactionEnvelope]) -> bytes:
    envs = list(envelopes)
    out = bytearray(u32(len(envs)))
    for env in envs:
        out += lp(env.to_bytes())
    return bytes(out)


@dataclass
class Block:
    header: BlockHeader
    transactions: list[TransactionEnvelope]
    validity: list[Validity] = field(default_factory=list)

    @classmethod
    def build(
        cls,
        height: int,
        prev_hash: bytes,
        transactions: list[TransactionEnvelope],
        timestamp_micros: int,
    ) -> "Block":
        data_hash = sha256(tx_section_bytes(transactions))
        block_hash = compute_block_hash(height, prev_hash, data_hash, timestamp_micros)
        header = BlockHeader(height, prev_hash, data_hash, timestamp_micros, block_hash)
        return cls(header=header, transactions=transactions)

    def flag_bytes(self) -> bytes:
        return bytes(_FLAG_BYTES[f] for f in self.validity)

    def to_bytes(self) -> bytes:
        if len(self.validity) != len(self.transactions):
            raise LedgerError("validity flags not assigned for all transactions")
        h = self.header
        flags = self.flag_bytes()
        out = bytearray()
        out += u64(h.height) + h.prev_hash + h.data_hash + u64(h.timestamp_micros) + h.block_hash
        out += tx_section_bytes(self.transactions)
        out += u32(len(flags)) + flags + sha256(h.block_hash + flags)
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Block":
        r = Reader(data)
        height = r.u64()
        prev_hash = r.take(32)
        data_hash = r.take(32)
        ts = r.u64()
        block_hash = r.take(32)
        txs = []
        for _ in range(r.u32()):
            txs.append(TransactionEnvelope.from_bytes(r.lp()))
        flags = []
        n_flags = r.u32()
        for b in r.take(n_flags):
            if b not in _BYTE_FLAGS:
                raise DecodeError(f"unknown validity flag byte {b}")
            flags.append(_BYTE_FLAGS[b])
        flags_digest = r.take(32)
        r.expect_end()
        if n_flags != len(txs):
            raise DecodeError("validity flag count does not match transaction count")
        block = cls(BlockHeader(height, prev_hash, data_hash, ts, block_hash), txs, flags)
        block._stored_flags_digest = flags_digest  # type: ignore[attr-defined]
        return block


@dataclass(frozen=True)
class HistorianRecord:
    """One immutable audit entry per committed transaction, valid or not."""

    tx_id: str
    tx_type: str
    participant_id: str
    timestamp_micros: int
    valid: Validity
    decision: Optional[dict]
    events: tuple[str, ...]
    height: int
    offset: int

    def to_dict(self) -> dict:
        return {
            "txId": self.tx_id,
            "type": self.tx_type,
            "participantId": self.participant_id,
            "timestamp": micros_to_rfc3339(self.timestamp_micros),
            "valid": self.valid.value,
            "decision": self.decision,
            "events": list(self.events),
            "blockHeight": self.height,
            "txOffset": self.offset,
        }


@dataclass
class VerificationReport:
    ok: bool
    height: int  # committed chain height (last verified) or first bad height
    reason: Optional[str] = None

    def to_dict(self) -> dict:
        return {"ok": self.ok, "height": self.height, "reason": self.reason}


class Chain:
    """Append-only block sequence. No operation removes or replaces a block."""

    def __init__(self):
        self._blocks: list[Block] = []

    def __len__(self) -> int:
        return len(self._blocks)

    @property
    def tip(self) -> Optional[Block]:
        return self._blocks[-1] if self._blocks else None

    @property
    def height(self) -> int:
        return len(self._blocks) - 1

    def block(self, height: int) -> Block:
        if height < 0 or height >= len(self._blocks):
            raise BadHeight(f"no block at height {height}")
        return self._blocks[height]

    def blocks(self) -> list[Block]:
        return list(self._blocks)

    def append(self, block: Block) -> None:
        expected_height = len(self._blocks)
        if block.header.height != expected_height:
            raise BadHeight(f"expected height {expected_height}, got {block.header.height}")
        expected_prev = self.tip.header.block_hash if self.tip else ZERO_HASH
        if block.header.prev_hash != expected_prev:
            raise BrokenLink(f"prevHash mismatch at height {block.header.height}")
        if block.header.data_hash != sha256(tx_section_bytes(block.transactions)):
            raise BadDataHash(f"dataHash mismatch at height {block.header.height}")
        recomputed = compute_block_hash(
            block.header.height, block.header.prev_hash, block.header.data_hash, block.header.timestamp_micros
        )
        if recomputed != block.header.block_hash:
            raise BrokenLink(f"blockHash mismatch at height {block.header.height}")
        self._blocks.append(block)

    def to_bytes(self) -> bytes:
        out = bytearray()
        for block in self._blocks:
            raw = block.to_bytes()
            out += u32(len(raw)) + raw
        return bytes(out)


def verify_chain_bytes(data: bytes) -> VerificationReport:
    """Re-derive every hash and link from raw serialized chain bytes."""
    prev_hash = ZERO_HASH
    height = 0
    r = Reader(data)
    while r.remaining:
        try:
            block = Block.from_bytes(r.lp())
        except DecodeError as exc:
            return VerificationReport(False, height, f"parse error: {exc}")
        h = block.header
        if h.height != height:
            return VerificationReport(False, height, f"height mismatch: stored {h.height}")
        if h.prev_hash != prev_hash:
            return VerificationReport(False, height, "previous-hash link broken")
        if h.data_hash != sha256(tx_section_bytes(block.transactions)):
            return VerificationReport(False, height, "data hash mismatch")
        if compute_block_hash(h.height, h.prev_hash, h.data_hash, h.timestamp_micros) != h.block_hash:
            return VerificationReport(False, height, "block hash mismatch")
        stored_digest = getattr(block, "_stored_flags_digest", None)
        if stored_digest != sha256(h.block_hash + block.flag_bytes()):
            return VerificationReport(False, height, "validity flags digest mismatch")
        prev_hash = h.block_hash
        height += 1
    return VerificationReport(True, height - 1)


def verify_chain(chain: Chain) -> VerificationReport:
    return verify_chain_bytes(chain.to_bytes())


class Ledger:
    """Chain + world state + historian for a single peer, single commit writer."""

    def __init__(self, on_events: Optional[Callable[[list[tuple[Version, ChainEvent]]], None]] = None):
        self.chain = Chain()
        self.state = VersionedStore()
        self.historian: list[HistorianRecord] = []
        self._on_events = on_events

    def commit(self, block: Block) -> None:
        """Append a validated block and apply it: writes, historian, events."""
        if len(block.validity) != len(block.transactions):
            raise LedgerError("cannot commit a block without validity flags")
        self.chain.append(block)
        height = block.header.height
        published: list[tuple[Version, ChainEvent]] = []
        for offset, (env, flag) in enumerate(zip(block.transactions, block.validity)):
            if flag == Validity.VALID:
                version = Version(height, offset)
                for write in env.rwset.writes:
                    if write.value is None:
                        self.state.delete(write.key)
                    else:
                        self.state.put(write.key, write.value, version)
                for event in env.events:
                    published.append((version, event))
                event_kinds = tuple(e.kind.value for e in env.events)
            else:
                event_kinds = ()
            self.historian.append(
                HistorianRecord(
                    tx_id=env.tx_id.hex(),
                    tx_type=env.tx_type,
                    participant_id=env.submitter_id,
                    timestamp_micros=env.proposed_at_micros,
                    valid=flag,
                    decision=env.response.get("decision"),
                    events=event_kinds,
                    height=height,
                    offset=offset,
                )
            )
        if self._on_events and published:
            self._on_events(published)

    def world_state_hash(self) -> bytes:
        return self.state.state_hash()

    def get_historian(
        self,
        participant_id: Optional[str] = None,
        tx_type: Optional[str] = None,
        from_micros: Optional[int] = None,
        to_micros: Optional[int] = None,
        limit: Optional[int] = None,
    ) -> list[HistorianRecord]:
        """Matching records in commit order; `limit` keeps the newest tail."""
        out = [
            rec
            for rec in self.historian
            if (participant_id is None or rec.participant_id == participant_id)
            and (tx_type is None or rec.tx_type == tx_type)
            and (from_micros is None or rec.timestamp_micros >= from_micros)
            and (to_micros is None or rec.timestamp_micros <= to_micros)
        ]
        if limit is not None and limit >= 0:
            out = out[len(out) - min(limit, len(out)) :]
        return out


def replay_blocks(blocks: Iterable[Block]) -> Ledger:
    """Re-derive a full ledger from serialized history alone."""
    ledger = Ledger()
    for block in blocks:
        ledger.commit(block)
    return ledger


class BlockFile:
    """Strictly append-only file of length-prefixed block serializations."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if not self.path.exists():
            self.path.touch()

    def has_blocks(self) -> bool:
        return self.path.stat().st_size > 0

    def append(self, block: Block) -> None:
        raw = block.to_bytes()
        with open(self.path, "ab") as f:
            f.write(u32(len(raw)) + raw)
            f.flush()

    def read_blocks(self) -> list[Block]:
        data = self.path.read_bytes()
        blocks = []
        r = Reader(data)
        while r.remaining:
            blocks.append(Block.from_bytes(r.lp()))
        return blocks

    def verify(self) -> VerificationReport:
        return verify_chain_bytes(self.path.read_bytes())
