import json

import pytest

from doorchain.acl import rules_to_json
from doorchain.config import (
    AppConfig,
    ConfigError,
    load_authority_key,
    load_authority_public,
    load_bootstrap,
    load_config,
    save_authority_key,
    save_authority_public,
)
from doorchain.crypto import SigningKey

from conftest import STANDARD_RULES

FULL_CONFIG = """
[network]
name = "office-net"
endorsement_orgs = ["org1", "org2"]

[[network.peers]]
id = "peer0.org1"
org = "org1"

[[network.peers]]
id = "peer0.org2"
org = "org2"

[orderer]
max_block_size = 8
batch_timeout_ms = 250

[chain]
intrusion_threshold = 4
rules_file = "rules.json"
bootstrap_file = "bootstrap.json"
authority_key_file = "authority.key"

[gateway]
host = "0.0.0.0"
port = 9001
data_dir = "data"
mvcc_retries = 5
commit_timeout_s = 12.5

[bench]
name = "spike"
total_transactions = 100
send_rate = 25.0
client_count = 4
seed = 9
key_pool_size = 6
conflict_preset = true
out_file = "bench.json"

[bench.mix]
check = 0.5
grant = 0.3
revoke = 0.2
"""


def write_config(tmp_path, text=FULL_CONFIG):
    path = tmp_path / "config.toml"
    path.write_text(text)
    return path


def test_load_full_config(tmp_path):
    config = load_config(write_config(tmp_path))
    assert config.network.name == "office-net"
    assert [p.peer_id for p in config.network.peers] == ["peer0.org1", "peer0.org2"]
    assert config.network.endorsement_orgs == frozenset({"org1", "org2"})
    assert config.orderer.max_block_size == 8
    assert config.orderer.batch_timeout == pytest.approx(0.25)
    assert config.chain.intrusion_threshold == 4
    assert config.chain.rules_file == tmp_path / "rules.json"
    assert config.gateway.port == 9001
    assert config.gateway.data_dir == tmp_path / "data"
    assert config.gateway.mvcc_retries == 5
    assert config.bench.conflict_preset is True
    assert config.bench.mix_grant == pytest.approx(0.3)
    assert config.bench.out_file == tmp_path / "bench.json"
    assert config.bench_name == "spike"


def test_defaults_from_empty_config(tmp_path):
    config = load_config(write_config(tmp_path, ""))
    assert config == AppConfig()
    assert config.network.peers[0].peer_id == "peer0.org1"
    assert config.bench.total_transactions == 500
    assert config.bench_name == "physical-access-network"


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.toml")


def test_invalid_toml(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, "[network\n"))


def test_peer_entries_validated(tmp_path):
    bad = "[[network.peers]]\nid = \"p\"\n"
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, bad))


def test_endorsement_orgs_must_have_peers(tmp_path):
    bad = """
[network]
endorsement_orgs = ["org1", "org9"]
"""
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, bad))


def test_mix_must_sum_to_one(tmp_path):
    bad = "[bench.mix]\ncheck = 0.5\ngrant = 0.1\nrevoke = 0.1\n"
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, bad))


def test_bounds_checked(tmp_path):
    for snippet in (
        "[orderer]\nmax_block_size = 0\n",
        "[orderer]\nbatch_timeout_ms = 0\n",
        "[chain]\nintrusion_threshold = 0\n",
        "[gateway]\nmvcc_retries = -1\n",
        "[bench]\nsend_rate = 0\n",
        "[bench]\ntotal_transactions = -1\n",
        "[bench]\nclient_count = 0\n",
    ):
        with pytest.raises(ConfigError):
            load_config(write_config(tmp_path, snippet))


def test_authority_key_round_trip(tmp_path):
    key = SigningKey(b"\x21" * 32)
    path = tmp_path / "authority.key"
    save_authority_key(path, key)
    again = load_authority_key(path)
    assert again.seed() == key.seed()

    pub_path = tmp_path / "authority.pub"
    save_authority_public(pub_path, key.verify_key())
    assert load_authority_public(pub_path).to_bytes() == key.verify_key().to_bytes()


def test_authority_key_errors(tmp_path):
    path = tmp_path / "authority.key"
    with pytest.raises(ConfigError):
        load_authority_key(path)
    path.write_text("zznothex\n")
    with pytest.raises(ConfigError):
        load_authority_key(path)
    path.write_text("ab" * 8 + "\n")  # wrong length
    with pytest.raises(ConfigError):
        load_authority_key(path)


def test_load_bootstrap(tmp_path):
    (tmp_path / "rules.json").write_text(json.dumps(rules_to_json(STANDARD_RULES)))
    (tmp_path / "bootstrap.json").write_text(
        json.dumps(
            {
                "networkName": "boot-net",
                "genesisTimestamp": "2024-01-01T00:00:00Z",
                "participants": [
                    {"participantId": "root", "displayName": "Root", "role": "Admin", "departmentId": None}
                ],
                "departments": [],
                "places": [],
            }
        )
    )
    config = load_config(write_config(tmp_path))
    doc = load_bootstrap(config)
    assert doc.network_name == "boot-net"
    assert doc.intrusion_threshold == 4  # comes from [chain]
    assert doc.max_block_size == 8  # comes from [orderer]
    assert [r.rule_id for r in doc.rules] == [r.rule_id for r in STANDARD_RULES]
    assert doc.participants[0].participant_id == "root"


def test_load_bootstrap_requires_files(tmp_path):
    config = load_config(write_config(tmp_path, ""))
    with pytest.raises(ConfigError):
        load_bootstrap(config)


def test_load_bootstrap_invalid_document(tmp_path):
    (tmp_path / "rules.json").write_text("[]")
    (tmp_path / "bootstrap.json").write_text(json.dumps({"participants": []}))
    config = load_config(write_config(tmp_path))
    with pytest.raises(ConfigError):
        load_bootstrap(config)  # missing genesisTimestamp


def test_package_exports_resolve():
    import doorchain

    missing = [name for name in doorchain.__all__ if not hasattr(doorchain, name)]
    assert missing == []
