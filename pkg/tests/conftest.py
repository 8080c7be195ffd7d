"""Shared builders: a small office world and sync-mode networks."""

from __future__ import annotations

import pytest

from doorchain.acl import ALWAYS, AclRule, Action, Condition, ConditionKind, Operation
from doorchain.config import AppConfig, GatewaySection, OrdererSection
from doorchain.crypto import SigningKey
from doorchain.domain import Department, Participant, PhysicalPlace, Role, issue_card
from doorchain.genesis import GenesisDoc
from doorchain.network import AccessNetwork, EndorsementPolicy, OrdererConfig, Peer

GENESIS_TS = 1_700_000_000_000_000  # 2023-11-14T22:13:20Z

STANDARD_RULES = (
    AclRule(
        "admin-all",
        frozenset({Role.ADMIN}),
        "*",
        frozenset(Action),
        Operation.ALLOW,
        ALWAYS,
    ),
    AclRule(
        "ceo-own-dept",
        frozenset({Role.CEO}),
        "*",
        frozenset({Action.READ, Action.UPDATE}),
        Operation.ALLOW,
        Condition(ConditionKind.DEPARTMENT_MATCH),
    ),
    AclRule(
        "staff-own-dept",
        frozenset({Role.MANAGER, Role.EMPLOYEE}),
        "*",
        frozenset({Action.READ}),
        Operation.ALLOW,
        Condition(ConditionKind.DEPARTMENT_MATCH),
    ),
)

STANDARD_PARTICIPANTS = (
    Participant("root", "Root admin", Role.ADMIN, None),
    Participant("carol", "Carol", Role.CEO, "eng"),
    Participant("erin", "Erin", Role.CEO, "ops"),
    Participant("mia", "Mia", Role.MANAGER, "eng"),
    Participant("bob", "Bob", Role.EMPLOYEE, "eng"),
    Participant("dan", "Dan", Role.EMPLOYEE, "ops"),
)

STANDARD_DEPARTMENTS = (
    Department("eng", "Engineering", "carol"),
    Department("ops", "Operations", "erin"),
)

STANDARD_PLACES = (
    PhysicalPlace("door-1", "Engineering entrance", "eng"),
    PhysicalPlace("door-2", "Engineering lab", "eng"),
    PhysicalPlace("vault", "Operations vault", "ops"),
)


def make_genesis_doc(
    rules=STANDARD_RULES,
    participants=STANDARD_PARTICIPANTS,
    departments=STANDARD_DEPARTMENTS,
    places=STANDARD_PLACES,
    intrusion_threshold=3,
    max_block_size=10,
) -> GenesisDoc:
    return GenesisDoc(
        network_name="test-net",
        genesis_timestamp_micros=GENESIS_TS,
        rules=tuple(rules),
        participants=tuple(participants),
        departments=tuple(departments),
        places=tuple(places),
        intrusion_threshold=intrusion_threshold,
        max_block_size=max_block_size,
    )


def make_network(
    authority: SigningKey,
    doc: GenesisDoc,
    *,
    block_files=None,
    batch_timeout: float = 1.0,
) -> AccessNetwork:
    """Two peers in two orgs, bootstrapped, sync mode (caller pumps)."""
    from doorchain.genesis import build_genesis

    genesis = build_genesis(doc)
    chain_config = doc.chain_config()
    policy = EndorsementPolicy(frozenset({"org1", "org2"}))
    peers = []
    for index, org in enumerate(("org1", "org2")):
        peers.append(
            Peer(
                peer_id=f"peer0.{org}",
                org_id=org,
                signing_key=SigningKey(bytes([index + 1]) * 32),
                ca_public_key=authority.verify_key(),
                policy=policy,
                chain_config=chain_config,
                block_file=block_files[index] if block_files else None,
            )
        )
    roster = {p.peer_id: (p.org_id, p.signing_key.verify_key()) for p in peers}
    for peer in peers:
        peer.set_roster(roster)
        peer.bootstrap(genesis)
    return AccessNetwork(
        peers,
        OrdererConfig(max_block_size=doc.max_block_size, batch_timeout=batch_timeout),
        policy,
    )


@pytest.fixture
def authority() -> SigningKey:
    return SigningKey(b"\x42" * 32)


@pytest.fixture
def std_doc() -> GenesisDoc:
    return make_genesis_doc()


@pytest.fixture
def network(authority, std_doc) -> AccessNetwork:
    return make_network(authority, std_doc)


@pytest.fixture
def cards(authority):
    """Holder cards for every standard participant, keyed by id."""
    return {
        p.participant_id: issue_card(p.participant_id, authority, lambda pid: True)
        for p in STANDARD_PARTICIPANTS
    }
