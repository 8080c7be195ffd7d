"""Assemble a running network from configuration.

Peer signing keys are derived deterministically from the authority seed and the
peer id, so a restarted node keeps its endorsement identity without extra key
files. The authority and the node operator are one trust domain here; separate
peer key custody is out of scope.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from .codec import sha256
from .config import AppConfig, load_bootstrap
from .crypto import SigningKey
from .genesis import GenesisDoc, build_genesis
from .ledger import BlockFile
from .network import AccessNetwork, EndorsementPolicy, NetworkError, OrdererConfig, Peer


def derive_peer_key(authority: SigningKey, peer_id: str) -> SigningKey:
    return SigningKey(sha256(authority.seed() + peer_id.encode("utf-8")))


def build_network(
    config: AppConfig,
    authority: SigningKey,
    *,
    genesis_doc: Optional[GenesisDoc] = None,
    data_dir: Optional[Path] = None,
    delivery_delay: float = 0.0,
) -> AccessNetwork:
    """Build peers, bootstrap or recover each, and wire in the orderer."""
    doc = genesis_doc if genesis_doc is not None else load_bootstrap(config)
    genesis = build_genesis(doc)
    chain_config = doc.chain_config()
    policy = EndorsementPolicy(config.network.endorsement_orgs)
    if data_dir is not None:
        data_dir.mkdir(parents=True, exist_ok=True)

    peers = []
    for spec in config.network.peers:
        block_file = None
        if data_dir is not None:
            block_file = BlockFile(data_dir / f"{spec.peer_id}.chain")
        peers.append(
            Peer(
                peer_id=spec.peer_id,
                org_id=spec.org_id,
                signing_key=derive_peer_key(authority, spec.peer_id),
                ca_public_key=authority.verify_key(),
                policy=policy,
                chain_config=chain_config,
                block_file=block_file,
            )
        )
    roster = {p.peer_id: (p.org_id, p.signing_key.verify_key()) for p in peers}
    for peer in peers:
        peer.set_roster(roster)

    for peer in peers:
        if peer.block_file is not None and peer.block_file.has_blocks():
            peer.recover_from_file()
            if peer.ledger.chain.block(0).header.block_hash != genesis.header.block_hash:
                raise NetworkError(
                    f"{peer.peer_id}: stored chain was built from a different genesis; "
                    "refusing to mix histories"
                )
        else:
            peer.bootstrap(genesis)

    heights = {p.ledger.chain.height for p in peers}
    if len(heights) != 1:
        raise NetworkError(f"peers recovered at different heights: {sorted(heights)}")

    return AccessNetwork(
        peers,
        OrdererConfig(
            max_block_size=config.orderer.max_block_size,
            batch_timeout=config.orderer.batch_timeout,
        ),
        policy,
        delivery_delay=delivery_delay,
    )
