"""Genesis block construction from a bootstrap document.

The bootstrap document (static rules, chain parameters and the initial
participant/department/place registrations) is embedded in the genesis
block's single system transaction, so a chain fully describes its own
configuration and replay needs no out-of-band files.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .acl import AclRule, rules_to_json
from .chaincode import (
    ChainConfig,
    ReadWriteSet,
    TxType,
    Write,
    dept_key,
    participant_key,
    place_key,
)
from .codec import ZERO_HASH, canonical_json_bytes, micros_to_rfc3339, rfc3339_to_micros, sha256
from .domain import Department, Participant, PhysicalPlace, Role
from .ledger import Block, InvalidBootstrap, TransactionEnvelope, Validity


@dataclass
class GenesisDoc:
    network_name: str
    genesis_timestamp_micros: int
    rules: list[AclRule]
    participants: list[Participant]
    departments: list[Department] = field(default_factory=list)
    places: list[PhysicalPlace] = field(default_factory=list)
    intrusion_threshold: int = 3
    max_block_size: int = 10

    def admins(self) -> list[Participant]:
        return [p for p in self.participants if p.role == Role.ADMIN]

    def to_payload(self) -> dict:
        return {
            "type": TxType.BOOTSTRAP.value,
            "networkName": self.network_name,
            "genesisTimestamp": micros_to_rfc3339(self.genesis_timestamp_micros),
            "rules": rules_to_json(self.rules),
            "participants": [p.to_dict() for p in self.participants],
            "departments": [d.to_dict() for d in self.departments],
            "places": [p.to_dict() for p in self.places],
            "intrusionThreshold": self.intrusion_threshold,
            "maxBlockSize": self.max_block_size,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "GenesisDoc":
        return cls(
            network_name=payload["networkName"],
            genesis_timestamp_micros=rfc3339_to_micros(payload["genesisTimestamp"]),
            rules=[AclRule.from_dict(r) for r in payload["rules"]],
            participants=[Participant.from_dict(p) for p in payload["participants"]],
            departments=[Department.from_dict(d) for d in payload["departments"]],
            places=[PhysicalPlace.from_dict(p) for p in payload["places"]],
            intrusion_threshold=payload["intrusionThreshold"],
            max_block_size=payload["maxBlockSize"],
        )

    def chain_config(self) -> ChainConfig:
        return ChainConfig(
            rules=tuple(self.rules),
            intrusion_threshold=self.intrusion_threshold,
            max_block_size=self.max_block_size,
        )


def _validate(doc: GenesisDoc) -> None:
    if not doc.admins():
        raise InvalidBootstrap("bootstrap must register at least one Admin participant")
    if doc.intrusion_threshold < 1:
        raise InvalidBootstrap("intrusion threshold must be >= 1")
    if doc.max_block_size < 1:
        raise InvalidBootstrap("max block size must be >= 1")
    pids = [p.participant_id for p in doc.participants]
    if len(pids) != len(set(pids)):
        raise InvalidBootstrap("duplicate participant ids in bootstrap")
    dids = [d.department_id for d in doc.departments]
    if len(dids) != len(set(dids)):
        raise InvalidBootstrap("duplicate department ids in bootstrap")
    place_ids = [p.place_id for p in doc.places]
    if len(place_ids) != len(set(place_ids)):
        raise InvalidBootstrap("duplicate place ids in bootstrap")
    by_id = {p.participant_id: p for p in doc.participants}
    for dept in doc.departments:
        ceo = by_id.get(dept.ceo_participant_id)
        if ceo is None or ceo.role != Role.CEO:
            raise InvalidBootstrap(
                f"department {dept.department_id} must name a registered CEO participant"
            )
    for place in doc.places:
        if place.department_id not in set(dids):
            raise InvalidBootstrap(f"place {place.place_id} references unknown department")


def build_genesis(doc: GenesisDoc) -> Block:
    """Deterministic height-0 block embedding the bootstrap registrations."""
    _validate(doc)
    writes = []
    for p in doc.participants:
        writes.append(Write(participant_key(p.participant_id), canonical_json_bytes(p.to_dict())))
    for d in doc.departments:
        writes.append(Write(dept_key(d.department_id), canonical_json_bytes(d.to_dict())))
    for pl in doc.places:
        writes.append(Write(place_key(pl.place_id), canonical_json_bytes(pl.to_dict())))

    env = TransactionEnvelope(
        tx_id=b"",
        card=None,
        payload=doc.to_payload(),
        response={"status": "ok"},
        rwset=ReadWriteSet(reads=[], writes=writes),
        events=[],
        client_signature=b"",
        proposed_at_micros=doc.genesis_timestamp_micros,
        nonce=b"",
    )
    env.tx_id = sha256(env.proposal_bytes())
    block = Block.build(0, ZERO_HASH, [env], doc.genesis_timestamp_micros)
    block.validity = [Validity.VALID]
    return block


def chain_config_from_genesis(genesis: Block) -> ChainConfig:
    if not genesis.transactions or genesis.transactions[0].tx_type != TxType.BOOTSTRAP.value:
        raise InvalidBootstrap("genesis block does not carry a bootstrap transaction")
    return GenesisDoc.from_payload(genesis.transactions[0].payload).chain_config()
