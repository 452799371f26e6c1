import csv

import pytest
from hypothesis import given, strategies as st

from vndnsim.link import ContentName
from vndnsim.metrics import (Collector, NotEnoughSeeds, SatisfactionRecord, SimulationReport,
                             aggregate, aggregate_rows, arrival_pairs, compute_avg_latency,
                             compute_isr, compute_jitter, compute_jitter_smoothed, mean_ci95,
                             write_aggregate_csv, write_run_csv, RUN_COLUMNS)


def rec(seg, sent, got=None, tx=1):
    return SatisfactionRecord(ContentName(("c",), seg), sent, got, tx)


def brute_jitter(pairs):
    """D(i, j) for consecutive receptions, written out longhand."""
    if len(pairs) < 2:
        return None
    total = 0.0
    for k in range(len(pairs) - 1):
        s_i, r_i = pairs[k]
        s_j, r_j = pairs[k + 1]
        total += abs((r_j - r_i) - (s_j - s_i))
    return total / (len(pairs) - 1)


# ------------------------------------------------------------ ISR

def test_isr_all_and_none():
    assert compute_isr([rec(i, 0, 1) for i in range(10)]) == 1.0
    assert compute_isr([rec(i, 0) for i in range(10)]) == 0.0
    assert compute_isr([]) == 0.0


def test_isr_counts_retransmissions():
    records = [rec(i, 0, 1) for i in range(8)] + [rec(8, 4000, None, 2), rec(9, 4000, None, 2)]
    assert compute_isr(records) == pytest.approx(8 / 12)


@given(st.lists(st.tuples(st.booleans(), st.integers(1, 5)), max_size=30))
def test_isr_bounds(items):
    records = [rec(i, 0, 1 if ok else None, tx) for i, (ok, tx) in enumerate(items)]
    rep = SimulationReport.from_records(records)
    assert 0.0 <= rep.isr <= 1.0
    assert rep.datas_received <= rep.interests_sent


# ------------------------------------------------------------ latency

def test_latency_examples():
    assert compute_avg_latency([rec(0, 0, 2), rec(1, 10, 14)]) == 3.0
    assert compute_avg_latency([rec(0, 0), rec(1, 10)]) is None


def test_latency_from_retransmission():
    c = Collector()
    n = ContentName(("c",), 7)
    c.interest_sent(n, 0.0, False)
    c.interest_sent(n, 4000.0, True)
    c.data_received(n, 4005.0)
    assert c.records[0].transmissions == 2
    assert compute_avg_latency(c.records) == 5.0


@given(st.lists(st.tuples(st.floats(0, 1e4), st.floats(0, 100)), min_size=1, max_size=20),
       st.floats(-1e4, 1e4))
def test_latency_translation_invariant(items, c):
    a = [rec(i, s, s + d) for i, (s, d) in enumerate(items)]
    b = [rec(i, s + c, s + d + c) for i, (s, d) in enumerate(items)]
    assert compute_avg_latency(a) == pytest.approx(compute_avg_latency(b), abs=1e-6)


def test_collector_counts_duplicates():
    c = Collector()
    n = ContentName(("c",), 0)
    c.interest_sent(n, 0.0, False)
    c.data_received(n, 1.0)
    c.data_received(n, 2.0)
    assert c.duplicates == 1 and c.records[0].received_at_ms == 1.0


# ------------------------------------------------------------ jitter

def test_jitter_examples():
    assert compute_jitter([(0, 2), (100, 102)]) == 0.0
    # D = (103 - 2) - 100 = 1, then (202 - 103) - 100 = -1
    assert compute_jitter([(0, 2), (100, 103), (200, 202)]) == pytest.approx(1.0)
    assert compute_jitter([(0, 2), (100, 103), (200, 205)]) == pytest.approx(1.5)
    assert compute_jitter([(0, 2)]) is None


def test_arrival_pairs_sorted_by_receive():
    pairs = arrival_pairs([rec(0, 0, 50), rec(1, 10, 20), rec(2, 5)])
    assert pairs == [(10, 20), (0, 50)]


pair_lists = st.lists(st.tuples(st.floats(0, 1e5), st.floats(0, 1e5)), max_size=40)


@given(pair_lists)
def test_jitter_matches_longhand(pairs):
    pairs = sorted(pairs, key=lambda p: p[1])
    got, want = compute_jitter(pairs), brute_jitter(pairs)
    assert (got is None) == (want is None)
    if got is not None:
        assert abs(got - want) <= 1e-9 * max(1.0, want)


@given(pair_lists, st.floats(-100, 100))
def test_jitter_shift_invariant(pairs, c):
    base = compute_jitter(pairs)
    shifted = compute_jitter([(s, r + c) for s, r in pairs])
    if base is None:
        assert shifted is None
    else:
        assert shifted == pytest.approx(base, abs=1e-6)


def test_smoothed_jitter():
    assert compute_jitter_smoothed([(0, 2), (100, 118)]) == pytest.approx(1.0)
    assert compute_jitter_smoothed([(0, 2)]) is None


# ------------------------------------------------------------ aggregation

def test_ci_student_t():
    s = mean_ci95([0.9, 1.0])
    assert s.mean == pytest.approx(0.95)
    assert s.ci95 == pytest.approx(12.706 * 0.0707107 / 1.414214, rel=1e-4)
    assert s.ci95 == pytest.approx(0.635, abs=5e-4)


def test_ci_identical_is_zero():
    reps = [SimulationReport(isr=0.5, interests_sent=3) for _ in range(4)]
    assert aggregate(reps)["isr"].ci95 == 0.0


def test_aggregate_needs_two():
    with pytest.raises(NotEnoughSeeds):
        aggregate([SimulationReport()])


def test_ci_skips_absent_values():
    s = mean_ci95([None, 2.0, 4.0])
    assert s.n == 2 and s.mean == 3.0
    assert mean_ci95([None]).mean is None


def test_csv_outputs(tmp_path):
    reps = [SimulationReport("immm", 3, 4000, 20, seed, 10, 9, 0.9, 2.5, None, 100, 0)
            for seed in (1, 2)]
    write_run_csv(reps, tmp_path / "runs.csv")
    rows = list(csv.DictReader(open(tmp_path / "runs.csv")))
    assert list(rows[0]) == RUN_COLUMNS
    assert rows[0]["avg_jitter_ms"] == "" and rows[1]["seed"] == "2"
    agg = aggregate_rows(reps)
    assert len(agg) == 1 and agg[0]["runs"] == 2 and agg[0]["isr_mean"] == 0.9
    write_aggregate_csv(agg, tmp_path / "aggregate.csv")
    header = open(tmp_path / "aggregate.csv").readline().strip().split(",")
    assert "isr_mean" in header and "isr_ci95" in header
