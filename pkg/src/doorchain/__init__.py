"""doorchain: a permissioned ledger for physical access control.

Door readers and administrators submit signed transactions through a small
execute-order-validate network. Committed blocks form a tamper-evident chain,
access decisions come from a role and rule based policy engine with a dynamic
grant overlay, and every decision lands in a queryable audit trail.
"""

from .acl import (
    AccessRequest,
    AclRule,
    Action,
    Condition,
    ConditionKind,
    Decision,
    DecisionSource,
    DynamicEntry,
    Effect,
    Operation,
    decide_effective,
    decide_static,
    load_rules,
)
from .chaincode import ChainConfig, ChainEvent, EventKind, ReadWriteSet, TxType, execute
from .config import (
    AppConfig,
    BenchSection,
    ConfigError,
    GatewaySection,
    OrdererSection,
    load_authority_key,
    load_bootstrap,
    load_config,
    save_authority_key,
)
from .crypto import SigningKey, VerifyKey
from .domain import (
    Department,
    HolderCard,
    IdentityCard,
    Participant,
    PhysicalPlace,
    Role,
    issue_card,
    verify_card,
)
from .events import EventBus, EventRecord
from .genesis import GenesisDoc, build_genesis
from .ledger import (
    Block,
    BlockFile,
    Chain,
    HistorianRecord,
    Ledger,
    TransactionEnvelope,
    Validity,
    verify_chain,
    verify_chain_bytes,
)
from .network import (
    AccessNetwork,
    CommitResult,
    Endorsement,
    EndorsementPolicy,
    Orderer,
    OrdererConfig,
    Peer,
    Proposal,
    assemble,
    make_proposal,
)
from .node import build_network, derive_peer_key
from .state import StateView, Version, VersionedStore

# The HTTP layers live in submodules so that importing the package does not
# pull in fastapi/httpx: doorchain.gateway (server), doorchain.client
# (GatewayClient), doorchain.bench (harness), doorchain.cli (commands).

__version__ = "1.0.0"

__all__ = [
    "AccessNetwork",
    "AccessRequest",
    "AclRule",
    "Action",
    "AppConfig",
    "BenchSection",
    "Block",
    "BlockFile",
    "Chain",
    "ChainConfig",
    "ChainEvent",
    "CommitResult",
    "ConfigError",
    "Condition",
    "ConditionKind",
    "Decision",
    "DecisionSource",
    "Department",
    "DynamicEntry",
    "Effect",
    "Endorsement",
    "EndorsementPolicy",
    "EventBus",
    "EventKind",
    "EventRecord",
    "GatewaySection",
    "GenesisDoc",
    "HistorianRecord",
    "HolderCard",
    "IdentityCard",
    "Ledger",
    "Operation",
    "Orderer",
    "OrdererConfig",
    "OrdererSection",
    "Participant",
    "Peer",
    "PhysicalPlace",
    "Proposal",
    "ReadWriteSet",
    "Role",
    "SigningKey",
    "StateView",
    "TransactionEnvelope",
    "TxType",
    "Validity",
    "VerifyKey",
    "Version",
    "VersionedStore",
    "assemble",
    "build_genesis",
    "build_network",
    "decide_effective",
    "decide_static",
    "derive_peer_key",
    "execute",
    "issue_card",
    "load_authority_key",
    "load_bootstrap",
    "load_config",
    "load_rules",
    "make_proposal",
    "save_authority_key",
    "verify_card",
    "verify_chain",
    "verify_chain_bytes",
    "__version__",
]
