"""Command-line surface: node operation, card handling, admin and door tooling.

Every command prints exactly one canonical JSON document to stdout (the bench
prints its markdown table instead) and exits nonzero with a one-line error
JSON on any failure, so scripts can parse output without scraping logs.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from .bench import LocalClient, run_round
from .client import ClientError, GatewayClient
from .codec import micros_to_rfc3339, now_micros
from .config import (
    ConfigError,
    load_authority_key,
    load_config,
    save_authority_key,
)
from .crypto import SigningKey
from .domain import Department, DomainError, HolderCard, Participant, PhysicalPlace, Role, issue_card
from .gateway import GatewayCore, run_server
from .genesis import InvalidBootstrap
from .ledger import BlockFile, LedgerError
from .network import NetworkError
from .node import build_network

DEFAULT_GATEWAY = "http://127.0.0.1:8443"


def _emit(data) -> None:
    click.echo(json.dumps(data, sort_keys=True, separators=(",", ":")))


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ClientError as exc:
            _emit({"error": exc.code, "message": exc.message, "status": exc.status})
            sys.exit(1)
        except (ConfigError, DomainError, LedgerError, NetworkError, InvalidBootstrap) as exc:
            _emit({"error": type(exc).__name__, "message": str(exc)})
            sys.exit(1)
        except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
            _emit({"error": "error", "message": str(exc)})
            sys.exit(1)

    return wrapper


def _client(gateway: str, card: str) -> GatewayClient:
    holder = HolderCard.load(card)
    client = GatewayClient(gateway, holder)
    client.login()
    return client


_gateway_option = click.option(
    "--gateway",
    envvar="DOORCHAIN_GATEWAY",
    default=DEFAULT_GATEWAY,
    show_default=True,
    help="Gateway base URL.",
)
_card_option = click.option(
    "--card",
    "card_path",
    envvar="DOORCHAIN_CARD",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Path to the holder card file (includes the private key).",
)


@click.group()
def main() -> None:
    """Permissioned ledger for physical access control."""


# -- node ---------------------------------------------------------------------

@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@_handle_errors
def serve(config_path: str) -> None:
    """Run the node: peers, orderer and HTTP gateway."""
    config = load_config(config_path)
    if config.chain.authority_key_file is None:
        raise ConfigError("chain.authority_key_file is not configured")
    authority = load_authority_key(config.chain.authority_key_file)
    from .config import load_bootstrap

    doc = load_bootstrap(config)
    network = build_network(config, authority, genesis_doc=doc, data_dir=config.gateway.data_dir)
    core = GatewayCore(network, authority.verify_key(), config.gateway, doc)
    run_server(core, config.gateway.host, config.gateway.port)


_DEFAULT_RULES = [
    {
        "ruleId": "admin-everywhere",
        "roles": ["Admin"],
        "resourcePattern": "*",
        "actions": ["Create", "Read", "Update", "Delete"],
        "operation": "Allow",
        "condition": {"kind": "Always"},
    },
    {
        "ruleId": "ceo-own-department",
        "roles": ["CEO"],
        "resourcePattern": "*",
        "actions": ["Read", "Update"],
        "operation": "Allow",
        "condition": {"kind": "DepartmentMatch"},
    },
    {
        "ruleId": "staff-own-department-hours",
        "roles": ["Manager", "Employee"],
        "resourcePattern": "*",
        "actions": ["Read"],
        "operation": "Allow",
        "condition": {"kind": "TimeWindow", "startMinuteOfDay": 420, "endMinuteOfDay": 1260},
    },
]

_CONFIG_TEMPLATE = """\
[network]
name = "{name}"

[[network.peers]]
id = "peer0.org1"
org = "org1"

[[network.peers]]
id = "peer0.org2"
org = "org2"

[orderer]
max_block_size = 10
batch_timeout_ms = 1000

[chain]
intrusion_threshold = 3
rules_file = "rules.json"
bootstrap_file = "bootstrap.json"
authority_key_file = "authority.key"

[gateway]
host = "127.0.0.1"
port = 8443
data_dir = "data"

[bench]
total_transactions = 500
send_rate = 10.0
client_count = 5
seed = 42
key_pool_size = 10

[bench.mix]
check = 0.7
grant = 0.2
revoke = 0.1
"""


@main.command()
@click.option("--dir", "target_dir", required=True, type=click.Path(file_okay=False))
@click.option("--network-name", default="physical-access-network", show_default=True)
@click.option("--admin-id", default="admin", show_default=True)
@click.option("--force", is_flag=True, help="Overwrite existing files.")
@_handle_errors
def init(target_dir: str, network_name: str, admin_id: str, force: bool) -> None:
    """Scaffold a config directory: keys, rules, bootstrap, admin card."""
    root = Path(target_dir)
    root.mkdir(parents=True, exist_ok=True)
    paths = {
        name: root / name
        for name in ("config.toml", "rules.json", "bootstrap.json", "authority.key", "admin.card")
    }
    if not force:
        for p in paths.values():
            if p.exists():
                raise ConfigError(f"{p} already exists (use --force to overwrite)")

    authority = SigningKey.generate()
    save_authority_key(paths["authority.key"], authority)
    paths["rules.json"].write_text(json.dumps(_DEFAULT_RULES, indent=2) + "\n", encoding="utf-8")
    bootstrap = {
        "networkName": network_name,
        "genesisTimestamp": micros_to_rfc3339(now_micros()),
        "participants": [
            {"participantId": admin_id, "displayName": "Bootstrap admin", "role": "Admin", "departmentId": None}
        ],
        "departments": [],
        "places": [],
    }
    paths["bootstrap.json"].write_text(json.dumps(bootstrap, indent=2) + "\n", encoding="utf-8")
    paths["config.toml"].write_text(_CONFIG_TEMPLATE.format(name=network_name), encoding="utf-8")
    holder = issue_card(admin_id, authority, [admin_id])
    holder.save(paths["admin.card"])
    _emit(
        {
            "configDir": str(root),
            "config": str(paths["config.toml"]),
            "adminCard": str(paths["admin.card"]),
            "adminParticipantId": admin_id,
        }
    )


# -- cards --------------------------------------------------------------------

@main.group()
def card() -> None:
    """Issue and revoke identity cards."""


@card.command("issue")
@click.option("--participant", "participant_id", required=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--authority-key", "authority_key_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--gateway", envvar="DOORCHAIN_GATEWAY", default=None, help="Verify registration against this gateway.")
@click.option("--card", "card_path", envvar="DOORCHAIN_CARD", type=click.Path(exists=True, dir_okay=False), help="Session card for the registration check.")
@click.option("--offline", is_flag=True, help="Skip the registration check.")
@_handle_errors
def card_issue(participant_id, out_path, authority_key_path, config_path, gateway, card_path, offline) -> None:
    """Sign a new card for a registered participant (authority-side)."""
    if authority_key_path:
        authority = load_authority_key(Path(authority_key_path))
    elif config_path:
        config = load_config(config_path)
        if config.chain.authority_key_file is None:
            raise ConfigError("chain.authority_key_file is not configured")
        authority = load_authority_key(config.chain.authority_key_file)
    else:
        raise ConfigError("provide --authority-key or --config")

    if offline:
        exists = lambda pid: True
    elif gateway and card_path:
        with _client(gateway, card_path) as session:
            registered = {p["participantId"] for p in session.participants()}
        exists = registered
    else:
        raise ConfigError("provide --gateway and --card for the registration check, or --offline")

    holder = issue_card(participant_id, authority, exists)
    holder.save(out_path)
    _emit(
        {
            "cardId": holder.card.card_id,
            "participantId": participant_id,
            "out": str(out_path),
            "issuedAt": micros_to_rfc3339(holder.card.issued_at_micros),
        }
    )


@card.command("revoke")
@click.option("--card-id", required=True)
@_gateway_option
@_card_option
@_handle_errors
def card_revoke(card_id: str, gateway: str, card_path: str) -> None:
    """Revoke a card on the ledger (admin only)."""
    with _client(gateway, card_path) as client:
        _emit(client.revoke_card(card_id))


# -- registration -------------------------------------------------------------

@main.group()
def admin() -> None:
    """Registration transactions (admin only)."""


@admin.command("register-participant")
@click.option("--id", "participant_id", required=True)
@click.option("--name", required=True)
@click.option("--role", required=True, type=click.Choice([r.value for r in Role]))
@click.option("--department", default=None)
@_gateway_option
@_card_option
@_handle_errors
def register_participant(participant_id, name, role, department, gateway, card_path) -> None:
    participant = Participant(participant_id, name, Role(role), department)
    with _client(gateway, card_path) as client:
        _emit(client.register_participant(participant))


@admin.command("register-place")
@click.option("--id", "place_id", required=True)
@click.option("--name", required=True)
@click.option("--department", required=True)
@_gateway_option
@_card_option
@_handle_errors
def register_place(place_id, name, department, gateway, card_path) -> None:
    with _client(gateway, card_path) as client:
        _emit(client.register_place(PhysicalPlace(place_id, name, department)))


@admin.command("register-department")
@click.option("--id", "department_id", required=True)
@click.option("--name", required=True)
@click.option("--ceo", "ceo_id", required=True)
@_gateway_option
@_card_option
@_handle_errors
def register_department(department_id, name, ceo_id, gateway, card_path) -> None:
    with _client(gateway, card_path) as client:
        _emit(client.register_department(Department(department_id, name, ceo_id)))


# -- access -------------------------------------------------------------------

@main.group()
def access() -> None:
    """Dynamic access grants and door checks."""


@access.command("grant")
@click.option("--target", required=True, help="Participant receiving access.")
@click.option("--place", required=True)
@_gateway_option
@_card_option
@_handle_errors
def access_grant(target, place, gateway, card_path) -> None:
    with _client(gateway, card_path) as client:
        _emit(client.grant(target, place))


@access.command("revoke")
@click.option("--target", required=True)
@click.option("--place", required=True)
@_gateway_option
@_card_option
@_handle_errors
def access_revoke(target, place, gateway, card_path) -> None:
    with _client(gateway, card_path) as client:
        _emit(client.revoke(target, place))


@access.command("check")
@click.option("--place", required=True)
@_gateway_option
@_card_option
@_handle_errors
def access_check(place, gateway, card_path) -> None:
    """The door-reader operation: commit a CheckAccess for the card holder."""
    with _client(gateway, card_path) as client:
        _emit(client.check_access(place))


# -- delegation ---------------------------------------------------------------

@main.group()
def delegate() -> None:
    """Department-scoped delegation of grant/revoke authority."""


@delegate.command("grant")
@click.option("--delegate", "delegate_id", required=True)
@click.option("--department", required=True)
@_gateway_option
@_card_option
@_handle_errors
def delegate_grant(delegate_id, department, gateway, card_path) -> None:
    with _client(gateway, card_path) as client:
        _emit(client.delegate(delegate_id, department))


@delegate.command("revoke")
@click.option("--delegate", "delegate_id", required=True)
@click.option("--department", required=True)
@_gateway_option
@_card_option
@_handle_errors
def delegate_revoke(delegate_id, department, gateway, card_path) -> None:
    with _client(gateway, card_path) as client:
        _emit(client.revoke_delegation(delegate_id, department))


# -- queries ------------------------------------------------------------------

@main.command()
@click.option("--participant", default=None)
@click.option("--type", "tx_type", default=None)
@click.option("--from", "from_time", default=None, help="RFC 3339 lower bound.")
@click.option("--to", "to_time", default=None, help="RFC 3339 upper bound.")
@click.option("--limit", default=None, type=int)
@_gateway_option
@_card_option
@_handle_errors
def historian(participant, tx_type, from_time, to_time, limit, gateway, card_path) -> None:
    """Query the audit trail (scoped by the session's role)."""
    with _client(gateway, card_path) as client:
        _emit({"records": client.historian(participant, tx_type, from_time, to_time, limit)})


@main.group()
def chain() -> None:
    """Chain inspection."""


@chain.command("verify")
@click.option("--file", "file_path", type=click.Path(exists=True, dir_okay=False), help="Verify a local block file instead of a gateway.")
@click.option("--gateway", envvar="DOORCHAIN_GATEWAY", default=DEFAULT_GATEWAY, show_default=True)
@click.option("--card", "card_path", envvar="DOORCHAIN_CARD", type=click.Path(exists=True, dir_okay=False))
@_handle_errors
def chain_verify(file_path, gateway, card_path) -> None:
    """Recompute every hash and link; nonzero exit on the first failure."""
    if file_path:
        report = BlockFile(file_path).verify().to_dict()
    else:
        if not card_path:
            raise ConfigError("provide --card for gateway verification or --file for a local file")
        with _client(gateway, card_path) as client:
            report = client.verify_chain()
    _emit(report)
    if not report.get("ok"):
        sys.exit(1)


# -- bench --------------------------------------------------------------------

@main.group()
def bench() -> None:
    """Benchmark rounds."""


@bench.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--gateway", default=None, help="Target a running gateway instead of an in-process network.")
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False), help="Write the JSON report here.")
@_handle_errors
def bench_run(config_path, gateway, out_path) -> None:
    """Run one benchmark round and print the markdown report."""
    config = load_config(config_path)
    if config.chain.authority_key_file is None:
        raise ConfigError("chain.authority_key_file is not configured")
    authority = load_authority_key(config.chain.authority_key_file)
    from .config import load_bootstrap

    doc = load_bootstrap(config)
    admins = doc.admins()
    if not admins:
        raise ConfigError("bootstrap document has no admin participant")
    admin_id = admins[0].participant_id

    network = None
    try:
        if gateway:
            factory = lambda holder: GatewayClient(gateway, holder)
        else:
            network = build_network(config, authority, genesis_doc=doc)
            network.start()
            factory = lambda holder: LocalClient(network, holder)
        report = run_round(
            config.bench,
            name=config.bench_name,
            authority=authority,
            admin_participant_id=admin_id,
            client_factory=factory,
        )
    finally:
        if network is not None:
            network.stop()

    click.echo(report.markdown())
    out = Path(out_path) if out_path else config.bench.out_file
    if out is not None:
        out.write_text(report.to_json() + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
