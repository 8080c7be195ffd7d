import random
import time

import pytest

from doorchain.chaincode import (
    ReadWriteSet,
    check_access_payload,
    dyn_key,
    grant_access_payload,
    revoke_access_payload,
    revoke_card_payload,
)
from doorchain.crypto import SigningKey
from doorchain.domain import IdentityCard
from doorchain.ledger import Block, TransactionEnvelope, Validity, replay_blocks
from doorchain.network import (
    EndorsementMismatch,
    EndorsementPolicy,
    EndorseRejected,
    NetworkError,
    Orderer,
    OrdererConfig,
    PolicyUnsatisfied,
    assemble,
    make_proposal,
)

from conftest import make_genesis_doc, make_network
from oracles import oracle_replay, oracle_state_hash


def prop(cards, pid, payload):
    return make_proposal(cards[pid], payload)


def submit(network, cards, pid, payload):
    return network.submit_proposal(prop(cards, pid, payload))


# ---------------------------------------------------------------------------
# Happy path


def test_grant_commits_and_converges(network, cards):
    env = submit(network, cards, "root", grant_access_payload("dan", "vault"))
    assert network.flush() == 1
    result = network.commits.get(env.tx_id)
    assert result is not None and result.valid
    assert (result.height, result.offset) == (1, 0)
    stored = network.exposed_peer.ledger.state.get(dyn_key("dan", "vault"))
    assert stored is not None
    assert stored[0] == b'{"effect":"Grant","grantedBy":"root"}'
    assert network.converged()


def test_check_access_sees_committed_grant(network, cards):
    submit(network, cards, "root", grant_access_payload("dan", "vault"))
    network.flush()
    env = submit(network, cards, "dan", check_access_payload("vault"))
    network.flush()
    result = network.commits.get(env.tx_id)
    assert result.valid
    decision = result.response["decision"]
    # the grant landed at (1, 0) and maxBlockSize is 10
    assert decision == {"outcome": "Allow", "source": {"kind": "dynamic", "seq": 10}}


def test_app_error_still_commits(network, cards):
    env = submit(network, cards, "bob", grant_access_payload("dan", "vault"))
    network.flush()
    result = network.commits.get(env.tx_id)
    assert result.valid  # endorsed and ordered; the handler refused it
    assert result.response["code"] == "unauthorized"
    assert network.exposed_peer.ledger.state.get(dyn_key("dan", "vault")) is None


# ---------------------------------------------------------------------------
# MVCC conflicts


def test_same_block_read_write_conflict(network, cards):
    grant = submit(network, cards, "root", grant_access_payload("dan", "vault"))
    check = submit(network, cards, "dan", check_access_payload("vault"))
    assert network.flush() == 1
    assert network.commits.get(grant.tx_id).validity == Validity.VALID
    assert network.commits.get(check.tx_id).validity == Validity.INVALID_MVCC


def test_same_block_write_write_conflict(network, cards):
    first = submit(network, cards, "root", grant_access_payload("dan", "vault"))
    second = submit(network, cards, "root", revoke_access_payload("dan", "vault"))
    network.flush()
    assert network.commits.get(first.tx_id).validity == Validity.VALID
    assert network.commits.get(second.tx_id).validity == Validity.INVALID_MVCC
    # and the surviving write is the first one
    stored = network.exposed_peer.ledger.state.get(dyn_key("dan", "vault"))
    assert b"Grant" in stored[0]


def test_non_conflicting_txs_all_valid(network, cards):
    envs = [
        submit(network, cards, "root", grant_access_payload(pid, place))
        for pid, place in (("bob", "vault"), ("dan", "door-1"), ("mia", "vault"))
    ]
    network.flush()
    for env in envs:
        assert network.commits.get(env.tx_id).validity == Validity.VALID


def test_workload_matches_serial_oracle(authority, cards):
    """Random conflicting workloads; flags and final state must equal the
    serial-execution-with-skip reference."""
    rng = random.Random(77)
    for _ in range(4):
        network = make_network(authority, make_genesis_doc())
        base = {
            k: (v, (ver.height, ver.offset))
            for k, (v, ver) in network.exposed_peer.ledger.state.snapshot().items()
        }
        start_height = network.exposed_peer.ledger.chain.height + 1
        users = ["bob", "dan"]
        places = ["door-1", "vault"]
        blocks = []
        for _ in range(6):  # 6 blocks of 10
            batch = []
            for _ in range(10):
                kind = rng.random()
                user = rng.choice(users)
                place = rng.choice(places)
                if kind < 0.5:
                    payload = check_access_payload(place)
                    env = submit(network, cards, user, payload)
                elif kind < 0.8:
                    env = submit(network, cards, "root", grant_access_payload(user, place))
                else:
                    env = submit(network, cards, "root", revoke_access_payload(user, place))
                batch.append(env)
            assert network.flush() == 1
            blocks.append(batch)

        expected_flags, expected_state = oracle_replay(blocks, base, start_height)
        got_flags = [
            [f.value for f in network.exposed_peer.ledger.chain.block(start_height + i).validity]
            for i in range(len(blocks))
        ]
        assert got_flags == expected_flags
        assert network.exposed_peer.world_state_hash() == oracle_state_hash(expected_state)
        assert network.converged()


# ---------------------------------------------------------------------------
# Endorsement policy and mismatches


def test_policy_requires_both_orgs(network, cards):
    proposal = prop(cards, "root", grant_access_payload("dan", "vault"))
    only_org1 = [network.peers[0].endorse(proposal)]
    with pytest.raises(PolicyUnsatisfied):
        assemble(proposal, only_org1, network.policy)
    with pytest.raises(PolicyUnsatisfied):
        assemble(proposal, [], network.policy)


def test_single_org_policy_accepts_one_endorsement(network, cards):
    proposal = prop(cards, "root", grant_access_payload("dan", "vault"))
    endorsement = network.peers[0].endorse(proposal)
    env = assemble(proposal, [endorsement], EndorsementPolicy(frozenset({"org1"})))
    assert env.endorsements == [(network.peers[0].peer_id, endorsement.signature)]


def test_diverging_endorsements_rejected(network, cards):
    proposal = prop(cards, "root", grant_access_payload("dan", "vault"))
    a, b = network.endorse_all(proposal)
    b.response = dict(b.response, extra=1)
    with pytest.raises(EndorsementMismatch):
        assemble(proposal, [a, b], network.policy)

    a, b = network.endorse_all(proposal)
    b.rwset = ReadWriteSet(reads=list(b.rwset.reads) + [("sneaky", None)], writes=b.rwset.writes)
    with pytest.raises(EndorsementMismatch):
        assemble(proposal, [a, b], network.policy)


# ---------------------------------------------------------------------------
# Endorsement rejections


def test_bad_client_signature_rejected(network, cards):
    good = prop(cards, "root", grant_access_payload("dan", "vault"))
    tampered = type(good)(
        card=good.card,
        payload=grant_access_payload("dan", "door-1"),  # signature no longer covers this
        client_signature=good.client_signature,
        proposed_at_micros=good.proposed_at_micros,
        nonce=good.nonce,
    )
    with pytest.raises(EndorseRejected) as err:
        network.peers[0].endorse(tampered)
    assert err.value.code == "bad-signature"


def test_forged_card_rejected(network, cards):
    rogue_key = SigningKey(b"\x99" * 32)
    rogue_card = IdentityCard("card-x", "root", rogue_key.verify_key().to_bytes(), b"\x00" * 64, 0)
    proposal = prop(cards, "root", grant_access_payload("dan", "vault"))
    forged = type(proposal)(
        card=rogue_card,
        payload=proposal.payload,
        client_signature=rogue_key.sign(proposal.payload_bytes()),
        proposed_at_micros=proposal.proposed_at_micros,
        nonce=proposal.nonce,
    )
    with pytest.raises(EndorseRejected) as err:
        network.peers[0].endorse(forged)
    assert err.value.code == "bad-card"


def test_revoked_card_rejected_at_endorsement(network, cards):
    submit(network, cards, "root", revoke_card_payload(cards["dan"].card.card_id))
    network.flush()
    with pytest.raises(EndorseRejected) as err:
        network.peers[0].endorse(prop(cards, "dan", check_access_payload("vault")))
    assert err.value.code == "revoked-card"


# ---------------------------------------------------------------------------
# Validation marks bad envelopes instead of dropping blocks


def test_tampered_payload_marked_invalid_endorsement(network, cards):
    proposal = prop(cards, "root", grant_access_payload("dan", "vault"))
    env = assemble(proposal, network.endorse_all(proposal), network.policy)
    env.payload = grant_access_payload("dan", "door-1")
    network.orderer.submit(env)
    network.flush()
    assert network.commits.get(env.tx_id).validity == Validity.INVALID_ENDORSEMENT
    assert network.converged()


def test_forged_endorsement_signature_marked_invalid(network, cards):
    proposal = prop(cards, "root", grant_access_payload("dan", "vault"))
    env = assemble(proposal, network.endorse_all(proposal), network.policy)
    env.endorsements = [(pid, b"\x00" * 64) for pid, _ in env.endorsements]
    network.orderer.submit(env)
    network.flush()
    assert network.commits.get(env.tx_id).validity == Validity.INVALID_ENDORSEMENT


def test_unknown_endorsing_peer_marked_invalid(network, cards):
    proposal = prop(cards, "root", grant_access_payload("dan", "vault"))
    env = assemble(proposal, network.endorse_all(proposal), network.policy)
    env.endorsements = [("peer9.orgX", sig) for _, sig in env.endorsements]
    network.orderer.submit(env)
    network.flush()
    assert network.commits.get(env.tx_id).validity == Validity.INVALID_ENDORSEMENT


def test_cardless_envelope_marked_invalid(network, cards):
    proposal = prop(cards, "root", grant_access_payload("dan", "vault"))
    env = assemble(proposal, network.endorse_all(proposal), network.policy)
    env.card = None
    network.orderer.submit(env)
    network.flush()
    result = network.commits.get(env.tx_id)
    assert result.validity == Validity.INVALID_ENDORSEMENT
    assert network.exposed_peer.ledger.state.get(dyn_key("dan", "vault")) is None


def test_underendorsed_envelope_marked_invalid(network, cards):
    proposal = prop(cards, "root", grant_access_payload("dan", "vault"))
    env = assemble(proposal, network.endorse_all(proposal), network.policy)
    env.endorsements = env.endorsements[:1]  # drop org2
    network.orderer.submit(env)
    network.flush()
    assert network.commits.get(env.tx_id).validity == Validity.INVALID_ENDORSEMENT


# ---------------------------------------------------------------------------
# Orderer


def dummy_env(seed: int) -> TransactionEnvelope:
    env = TransactionEnvelope(
        tx_id=bytes([seed % 256]) * 32,
        card=None,
        payload={"type": "CheckAccess", "placeId": "p"},
        response={"status": "ok"},
        rwset=ReadWriteSet(),
        events=[],
        client_signature=b"",
        proposed_at_micros=seed,
        nonce=seed.to_bytes(4, "big"),
    )
    return env


def test_orderer_cuts_by_size():
    orderer = Orderer(OrdererConfig(max_block_size=5, batch_timeout=60.0), 1, b"\xaa" * 32)
    for i in range(12):
        orderer.submit(dummy_env(i))
    blocks = orderer.try_cut()
    assert [len(b.transactions) for b in blocks] == [5, 5]
    assert [b.header.height for b in blocks] == [1, 2]
    assert blocks[1].header.prev_hash == blocks[0].header.block_hash
    assert orderer.pending_count == 2


def test_orderer_cuts_by_timeout():
    orderer = Orderer(OrdererConfig(max_block_size=10, batch_timeout=1.0), 0, b"\x00" * 32)
    orderer.submit(dummy_env(0))
    orderer.submit(dummy_env(1))
    now = time.monotonic()
    assert orderer.try_cut(now) == []
    remaining = orderer.seconds_until_timeout(now)
    assert remaining is not None and 0 < remaining <= 1.0
    blocks = orderer.try_cut(now + 1.01)
    assert [len(b.transactions) for b in blocks] == [2]
    assert orderer.pending_count == 0
    assert orderer.seconds_until_timeout() is None


def test_orderer_force_cut():
    orderer = Orderer(OrdererConfig(), 0, b"\x00" * 32)
    assert orderer.force_cut() is None
    orderer.submit(dummy_env(0))
    block = orderer.force_cut()
    assert block is not None and len(block.transactions) == 1


# ---------------------------------------------------------------------------
# Delivery ordering


def test_out_of_order_delivery_buffers(network, cards):
    submit(network, cards, "root", grant_access_payload("dan", "vault"))
    b1 = network.orderer.force_cut()
    submit(network, cards, "root", grant_access_payload("bob", "vault"))
    b2 = network.orderer.force_cut()

    peer = network.peers[1]
    assert peer.receive_block(b2) is None  # buffered, not committed
    assert peer.ledger.chain.height == 0
    flags = peer.receive_block(b1)
    assert flags == [Validity.VALID]
    assert peer.ledger.chain.height == 2  # cascade drained the buffer

    network.peers[0].receive_block(b1)
    network.peers[0].receive_block(b2)
    assert network.converged()


def test_duplicate_delivery_ignored(network, cards):
    submit(network, cards, "root", grant_access_payload("dan", "vault"))
    block = network.orderer.force_cut()
    network.deliver(block)
    before = network.exposed_peer.world_state_hash()
    assert network.exposed_peer.receive_block(block) is None
    assert network.exposed_peer.world_state_hash() == before
    assert network.exposed_peer.ledger.chain.height == 1


def test_delivery_beyond_reorder_window_rejected(network):
    far = Block.build(99, b"\x01" * 32, [], 0)
    far.validity = []
    with pytest.raises(NetworkError):
        network.exposed_peer.receive_block(far)


# ---------------------------------------------------------------------------
# Threaded mode and persistence


def test_threaded_cutter_commits_by_timeout(authority, cards):
    network = make_network(authority, make_genesis_doc(), batch_timeout=0.1)
    network.start()
    try:
        result = network.submit_and_wait(
            prop(cards, "root", grant_access_payload("dan", "vault")), timeout=10.0
        )
        assert result.valid
    finally:
        network.stop()
    assert network.converged()


def test_block_file_replay_bit_identical(authority, cards, tmp_path):
    from doorchain.ledger import BlockFile

    files = [BlockFile(tmp_path / "peer1.blocks"), BlockFile(tmp_path / "peer2.blocks")]
    network = make_network(authority, make_genesis_doc(), block_files=files)
    submit(network, cards, "root", grant_access_payload("dan", "vault"))
    submit(network, cards, "dan", check_access_payload("vault"))
    network.flush()
    submit(network, cards, "dan", check_access_payload("vault"))
    network.flush()

    live = network.exposed_peer.ledger
    assert files[0].verify().ok
    assert files[0].path.read_bytes() == files[1].path.read_bytes()
    assert files[0].path.read_bytes() == live.chain.to_bytes()

    replayed = replay_blocks(files[0].read_blocks())
    assert replayed.world_state_hash() == live.world_state_hash()
    assert replayed.chain.to_bytes() == live.chain.to_bytes()
