"""Single-file TOML configuration for nodes, the gateway, and the bench.

The document has five sections: [network] (roster, endorsement policy),
[orderer] (batching), [chain] (threshold, genesis inputs), [gateway] (listen
address, data dir, webhook, retry limit), and [bench]. Relative paths resolve
against the config file's directory so a config tree can be moved as a unit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .acl import load_rules
from .codec import rfc3339_to_micros
from .crypto import SEED_LEN, SigningKey, VerifyKey
from .domain import Department, Participant, PhysicalPlace
from .genesis import GenesisDoc


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class PeerSpec:
    peer_id: str
    org_id: str


@dataclass(frozen=True)
class NetworkSection:
    name: str = "physical-access-network"
    peers: tuple[PeerSpec, ...] = (
        PeerSpec("peer0.org1", "org1"),
        PeerSpec("peer0.org2", "org2"),
    )
    endorsement_orgs: frozenset = frozenset({"org1", "org2"})


@dataclass(frozen=True)
class OrdererSection:
    max_block_size: int = 10
    batch_timeout_ms: int = 1000

    @property
    def batch_timeout(self) -> float:
        return self.batch_timeout_ms / 1000.0


@dataclass(frozen=True)
class ChainSection:
    intrusion_threshold: int = 3
    rules_file: Optional[Path] = None
    bootstrap_file: Optional[Path] = None
    authority_key_file: Optional[Path] = None


@dataclass(frozen=True)
class GatewaySection:
    host: str = "127.0.0.1"
    port: int = 8443
    data_dir: Optional[Path] = None
    webhook_url: Optional[str] = None
    mvcc_retries: int = 3
    session_ttl_s: int = 3600
    commit_timeout_s: float = 30.0


@dataclass(frozen=True)
class BenchSection:
    name: Optional[str] = None
    total_transactions: int = 500
    send_rate: float = 10.0
    client_count: int = 5
    seed: int = 42
    key_pool_size: int = 10
    conflict_preset: bool = False
    mix_check: float = 0.7
    mix_grant: float = 0.2
    mix_revoke: float = 0.1
    out_file: Optional[Path] = None


@dataclass(frozen=True)
class AppConfig:
    network: NetworkSection = field(default_factory=NetworkSection)
    orderer: OrdererSection = field(default_factory=OrdererSection)
    chain: ChainSection = field(default_factory=ChainSection)
    gateway: GatewaySection = field(default_factory=GatewaySection)
    bench: BenchSection = field(default_factory=BenchSection)

    @property
    def bench_name(self) -> str:
        return self.bench.name or self.network.name


def _resolve(base: Path, value: Optional[str]) -> Optional[Path]:
    if not value:
        return None
    path = Path(value)
    return path if path.is_absolute() else (base / path)


def _section(doc: dict, name: str) -> dict:
    section = doc.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"[{name}] must be a table")
    return section


def load_config(path) -> AppConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None
    base = path.parent

    net = _section(doc, "network")
    peers = []
    for entry in net.get("peers", []):
        if not isinstance(entry, dict) or "id" not in entry or "org" not in entry:
            raise ConfigError("[[network.peers]] entries need 'id' and 'org'")
        peers.append(PeerSpec(str(entry["id"]), str(entry["org"])))
    defaults = NetworkSection()
    orgs = net.get("endorsement_orgs")
    network = NetworkSection(
        name=str(net.get("name", defaults.name)),
        peers=tuple(peers) or defaults.peers,
        endorsement_orgs=frozenset(str(o) for o in orgs) if orgs else defaults.endorsement_orgs,
    )
    peer_orgs = {p.org_id for p in network.peers}
    if not network.endorsement_orgs <= peer_orgs:
        missing = ", ".join(sorted(network.endorsement_orgs - peer_orgs))
        raise ConfigError(f"endorsement orgs without any peer: {missing}")

    ord_ = _section(doc, "orderer")
    orderer = OrdererSection(
        max_block_size=int(ord_.get("max_block_size", 10)),
        batch_timeout_ms=int(ord_.get("batch_timeout_ms", 1000)),
    )
    if orderer.max_block_size < 1:
        raise ConfigError("orderer.max_block_size must be >= 1")
    if orderer.batch_timeout_ms < 1:
        raise ConfigError("orderer.batch_timeout_ms must be >= 1")

    ch = _section(doc, "chain")
    chain = ChainSection(
        intrusion_threshold=int(ch.get("intrusion_threshold", 3)),
        rules_file=_resolve(base, ch.get("rules_file")),
        bootstrap_file=_resolve(base, ch.get("bootstrap_file")),
        authority_key_file=_resolve(base, ch.get("authority_key_file")),
    )
    if chain.intrusion_threshold < 1:
        raise ConfigError("chain.intrusion_threshold must be >= 1")

    gw = _section(doc, "gateway")
    gateway = GatewaySection(
        host=str(gw.get("host", "127.0.0.1")),
        port=int(gw.get("port", 8443)),
        data_dir=_resolve(base, gw.get("data_dir")),
        webhook_url=str(gw["webhook_url"]) if gw.get("webhook_url") else None,
        mvcc_retries=int(gw.get("mvcc_retries", 3)),
        session_ttl_s=int(gw.get("session_ttl_s", 3600)),
        commit_timeout_s=float(gw.get("commit_timeout_s", 30.0)),
    )
    if gateway.mvcc_retries < 0:
        raise ConfigError("gateway.mvcc_retries must be >= 0")

    bn = _section(doc, "bench")
    mix = bn.get("mix", {})
    bench = BenchSection(
        name=str(bn["name"]) if bn.get("name") else None,
        total_transactions=int(bn.get("total_transactions", 500)),
        send_rate=float(bn.get("send_rate", 10.0)),
        client_count=int(bn.get("client_count", 5)),
        seed=int(bn.get("seed", 42)),
        key_pool_size=int(bn.get("key_pool_size", 10)),
        conflict_preset=bool(bn.get("conflict_preset", False)),
        mix_check=float(mix.get("check", 0.7)),
        mix_grant=float(mix.get("grant", 0.2)),
        mix_revoke=float(mix.get("revoke", 0.1)),
        out_file=_resolve(base, bn.get("out_file")),
    )
    if bench.total_transactions < 0:
        raise ConfigError("bench.total_transactions must be >= 0")
    if bench.send_rate <= 0:
        raise ConfigError("bench.send_rate must be positive")
    if bench.client_count < 1:
        raise ConfigError("bench.client_count must be >= 1")
    if abs(bench.mix_check + bench.mix_grant + bench.mix_revoke - 1.0) > 1e-9:
        raise ConfigError("bench.mix proportions must sum to 1")

    return AppConfig(network=network, orderer=orderer, chain=chain, gateway=gateway, bench=bench)


# -- key files ---------------------------------------------------------------

def save_authority_key(path: Path, key: SigningKey) -> None:
    path.write_text(key.seed().hex() + "\n", encoding="ascii")


def load_authority_key(path: Path) -> SigningKey:
    try:
        seed = bytes.fromhex(path.read_text(encoding="ascii").strip())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read authority key {path}: {exc}") from None
    if len(seed) != SEED_LEN:
        raise ConfigError(f"authority key {path} must be {SEED_LEN} bytes")
    return SigningKey(seed)


def save_authority_public(path: Path, key: VerifyKey) -> None:
    path.write_text(key.to_bytes().hex() + "\n", encoding="ascii")


def load_authority_public(path: Path) -> VerifyKey:
    try:
        raw = bytes.fromhex(path.read_text(encoding="ascii").strip())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read authority public key {path}: {exc}") from None
    return VerifyKey(raw)


# -- bootstrap document ------------------------------------------------------

def load_bootstrap(config: AppConfig) -> GenesisDoc:
    """Assemble the genesis document from the chain section's input files."""
    chain = config.chain
    if chain.bootstrap_file is None:
        raise ConfigError("chain.bootstrap_file is not configured")
    if chain.rules_file is None:
        raise ConfigError("chain.rules_file is not configured")
    try:
        with open(chain.bootstrap_file, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read bootstrap file: {exc}") from None
    rules = load_rules(chain.rules_file)
    try:
        participants = tuple(Participant.from_dict(d) for d in doc.get("participants", []))
        departments = tuple(Department.from_dict(d) for d in doc.get("departments", []))
        places = tuple(PhysicalPlace.from_dict(d) for d in doc.get("places", []))
        ts = rfc3339_to_micros(doc["genesisTimestamp"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid bootstrap document: {exc}") from None
    return GenesisDoc(
        network_name=str(doc.get("networkName", config.network.name)),
        genesis_timestamp_micros=ts,
        rules=tuple(rules),
        participants=participants,
        departments=departments,
        places=places,
        intrusion_threshold=chain.intrusion_threshold,
        max_block_size=config.orderer.max_block_size,
    )
