import json
import random

import pytest

from doorchain.bench import (
    MARKDOWN_HEADER,
    BenchError,
    BenchReport,
    BenchSample,
    LocalClient,
    nearest_rank_percentile,
    run_round,
)
from doorchain.config import BenchSection

from conftest import make_genesis_doc, make_network
from oracles import oracle_percentile


def test_markdown_header_exact():
    assert MARKDOWN_HEADER == (
        "| Name | Succ | Fail | Send Rate | Max Latency | Min Latency "
        "| Avg Latency | 75%ile Latency | Throughput |"
    )


def test_percentile_nearest_rank():
    assert nearest_rank_percentile([1, 2, 3, 4], 75) == 3
    assert nearest_rank_percentile([1, 2, 3, 4], 50) == 2
    assert nearest_rank_percentile([1, 2, 3, 4], 100) == 4
    assert nearest_rank_percentile([1, 2, 3, 4], 1) == 1
    assert nearest_rank_percentile([7], 75) == 7
    with pytest.raises(ValueError):
        nearest_rank_percentile([], 75)


def test_percentile_matches_oracle():
    rng = random.Random(5)
    for _ in range(200):
        values = sorted(rng.random() for _ in range(rng.randrange(1, 40)))
        pct = rng.choice([1, 25, 50, 75, 90, 99, 100])
        assert nearest_rank_percentile(values, pct) == oracle_percentile(values, pct)


def sample(k, sent, committed, valid=True):
    return BenchSample(kind="check", scheduled=k / 10.0, sent=sent, committed=committed, valid=valid)


def test_sample_latency_and_round_trip():
    s = sample(0, 1.0, 1.25)
    assert s.latency == pytest.approx(0.25)
    assert BenchSample.from_dict(s.to_dict()) == s


def test_aggregate_math():
    samples = [
        sample(0, 0.0, 0.10),  # 100ms
        sample(1, 0.1, 0.50),  # 400ms
        sample(2, 0.2, 0.40),  # 200ms
        sample(3, 0.3, 0.60),  # 300ms
        sample(4, 0.4, 9.99, valid=False),
    ]
    report = BenchReport.aggregate("round", 10.0, samples)
    assert (report.succ, report.fail) == (4, 1)
    assert report.min_latency == pytest.approx(0.1)
    assert report.max_latency == pytest.approx(0.4)
    assert report.avg_latency == pytest.approx(0.25)
    assert report.p75_latency == pytest.approx(0.3)  # 3rd of 4 sorted latencies
    assert report.min_latency <= report.avg_latency <= report.p75_latency <= report.max_latency
    # 4 successes between first send (0.0) and last successful commit (0.6)
    assert report.throughput == pytest.approx(4 / 0.6)


def test_aggregate_empty_and_all_failed():
    empty = BenchReport.aggregate("r", 10.0, [])
    assert (empty.succ, empty.fail, empty.throughput) == (0, 0, 0.0)
    assert empty.max_latency is None

    failed = BenchReport.aggregate("r", 10.0, [sample(0, 0.0, 1.0, valid=False)])
    assert (failed.succ, failed.fail) == (0, 1)
    assert failed.avg_latency is None
    assert failed.throughput == 0.0


def test_markdown_layout():
    report = BenchReport.aggregate("demo", 10.0, [sample(0, 0.0, 0.25)])
    lines = report.markdown().splitlines()
    assert lines[0] == MARKDOWN_HEADER
    assert lines[1] == "| --- | --- | --- | --- | --- | --- | --- | --- | --- |"
    cells = [c.strip() for c in lines[2].strip("|").split("|")]
    assert cells[0] == "demo"
    assert cells[1] == "1" and cells[2] == "0"
    assert cells[3] == "10 tps"
    assert cells[4] == "0.25s"
    assert cells[8].endswith("tps")


def test_markdown_handles_empty_round():
    lines = BenchReport.aggregate("empty", 5.0, []).markdown().splitlines()
    cells = [c.strip() for c in lines[2].strip("|").split("|")]
    assert cells[1] == "0" and cells[4] == "n/a" and cells[8] == "0.00 tps"


def test_report_json_round_trip():
    report = BenchReport.aggregate("demo", 10.0, [sample(0, 0.0, 0.25), sample(1, 0.1, 0.2, valid=False)])
    parsed = BenchReport.from_dict(json.loads(report.to_json()))
    assert parsed.to_json() == report.to_json()
    assert parsed.succ == 1 and parsed.fail == 1


def bench_section(**kw) -> BenchSection:
    # 12 key slots: longer than the largest possible block, so the cycling
    # dispatcher never reuses a slot inside one block.
    base = dict(
        name="unit-round",
        total_transactions=30,
        send_rate=40.0,
        client_count=3,
        seed=7,
        key_pool_size=4,
        conflict_preset=False,
    )
    base.update(kw)
    return BenchSection(**base)


def run_local(authority, section):
    network = make_network(authority, make_genesis_doc(), batch_timeout=0.1)
    network.start()
    try:
        return run_round(
            section,
            name=section.name,
            authority=authority,
            admin_participant_id="root",
            client_factory=lambda holder: LocalClient(network, holder),
        )
    finally:
        network.stop()


def test_run_round_non_conflicting(authority):
    section = bench_section()
    report = run_local(authority, section)
    assert (report.succ, report.fail) == (30, 0)
    assert report.succ + report.fail == 30
    assert 0 < report.throughput <= section.send_rate * 1.05
    assert report.min_latency <= report.avg_latency <= report.p75_latency <= report.max_latency
    # dispatch accuracy: every send within 50ms of its schedule
    deviations = [abs(s.sent - s.scheduled) for s in report.samples]
    assert max(deviations) < 0.05


def test_run_round_conflict_preset_fails_some(authority):
    report = run_local(
        authority,
        bench_section(name="conflict", total_transactions=40, send_rate=200.0, conflict_preset=True),
    )
    assert report.succ + report.fail == 40
    assert report.fail > 0  # single hot key, no retries: conflicts must surface


def test_run_round_empty(authority):
    report = run_local(authority, bench_section(total_transactions=0))
    assert (report.succ, report.fail) == (0, 0)


def test_run_round_validates_rate(authority):
    with pytest.raises(BenchError):
        run_round(
            bench_section(send_rate=0.0),
            name="x",
            authority=authority,
            admin_participant_id="root",
            client_factory=lambda holder: None,
        )
