import pytest

from fanetsim.logsync import (
    GpsTimeFix,
    LogRecord,
    NodeClock,
    NoFixAvailable,
    correct,
    local_time,
    merge_logs,
)
from fanetsim.simcore import seconds


def make_fix(node, clock, true_s):
    true_us = seconds(true_s)
    return GpsTimeFix(node, true_us, local_time(clock, true_us))


def test_identity_clock():
    clock = NodeClock()
    assert local_time(clock, seconds(123.0)) == seconds(123.0)


def test_pure_offset():
    clock = NodeClock(offset_s=3.0)
    assert local_time(clock, seconds(10.0)) == seconds(13.0)


def test_drift_ppm_accumulation():
    clock = NodeClock(drift_ppm=100.0)
    assert local_time(clock, seconds(10_000.0)) == seconds(10_001.0)


def test_drift_sanity_bound():
    with pytest.raises(ValueError):
        NodeClock(drift_ppm=1500.0)


def test_single_fix_recovers_pure_offset():
    clock = NodeClock(offset_s=-2.5)
    fixes = [make_fix("n1", clock, 100.0)]
    rec = LogRecord("n1", local_time(clock, seconds(250.0)), "ev")
    assert correct(rec, fixes) == seconds(250.0)


def test_two_fixes_recover_offset_and_drift():
    clock = NodeClock(offset_s=3.0, drift_ppm=200.0)
    fixes = [make_fix("n1", clock, 10.0), make_fix("n1", clock, 500.0)]
    for true_s in (0.0, 123.456, 599.9, 600.0):
        rec = LogRecord("n1", local_time(clock, seconds(true_s)), "ev")
        assert abs(correct(rec, fixes) - seconds(true_s)) <= 1000  # 1 ms


def test_linear_recovery_over_an_hour():
    clock = NodeClock(offset_s=-7.0, drift_ppm=850.0)
    fixes = [make_fix("n1", clock, 60.0), make_fix("n1", clock, 1800.0),
             make_fix("n1", clock, 3500.0)]
    for true_s in (0.0, 900.0, 1234.5, 3599.0):
        rec = LogRecord("n1", local_time(clock, seconds(true_s)), "ev")
        assert abs(correct(rec, fixes) - seconds(true_s)) <= 1000


def test_no_fix_raises():
    rec = LogRecord("n1", 0, "ev")
    with pytest.raises(NoFixAvailable):
        correct(rec, [GpsTimeFix("other", 0, 0)])


def test_merge_restores_ground_truth_order():
    clock_a = NodeClock(offset_s=3.0)
    clock_b = NodeClock(offset_s=-2.0, drift_ppm=50.0)
    fixes = [make_fix("a", clock_a, 5.0), make_fix("a", clock_a, 500.0),
             make_fix("b", clock_b, 5.0), make_fix("b", clock_b, 500.0)]
    # Interleaved ground-truth events >= 10 ms apart.
    truth = []
    logs = {"a": [], "b": []}
    for i in range(200):
        true_s = 1.0 + i * 0.5
        node = "a" if i % 2 == 0 else "b"
        clock = clock_a if node == "a" else clock_b
        truth.append((node, i))
        logs[node].append(LogRecord(node, local_time(clock, seconds(true_s)), "ev", payload=i))
    merged = merge_logs(logs, fixes)
    assert [(r.node_id, r.payload) for _, r in merged.records] == truth


def test_merge_single_node():
    clock = NodeClock(offset_s=1.0)
    fixes = [make_fix("a", clock, 10.0)]
    logs = {"a": [LogRecord("a", local_time(clock, seconds(t)), "ev") for t in (1.0, 2.0, 3.0)]}
    merged = merge_logs(logs, fixes)
    assert [t for t, _ in merged.records] == [seconds(1.0), seconds(2.0), seconds(3.0)]


def test_merge_missing_fix_names_node():
    logs = {"a": [LogRecord("a", 0, "ev")], "b": [LogRecord("b", 0, "ev")]}
    fixes = [GpsTimeFix("a", 0, 0)]
    with pytest.raises(NoFixAvailable) as exc:
        merge_logs(logs, fixes)
    assert exc.value.node_id == "b"


def test_merge_is_permutation_of_inputs():
    clock = NodeClock(offset_s=0.5, drift_ppm=10.0)
    fixes = [make_fix("a", clock, 1.0), make_fix("a", clock, 100.0),
             GpsTimeFix("b", 0, 0), GpsTimeFix("b", seconds(100.0), seconds(100.0))]
    logs = {
        "a": [LogRecord("a", local_time(clock, seconds(t)), "x", payload=f"a{t}") for t in range(10)],
        "b": [LogRecord("b", seconds(float(t)), "y", payload=f"b{t}") for t in range(10)],
    }
    merged = merge_logs(logs, fixes)
    got = sorted(str(r.payload) for _, r in merged.records)
    want = sorted(str(r.payload) for recs in logs.values() for r in recs)
    assert got == want
