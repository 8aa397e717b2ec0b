import math
import warnings

import numpy as np
import pytest

from rulewatch import (
    HitMatrix,
    InsufficientSamplesError,
    MissingFeatureError,
    MomentAccumulator,
    SlidingHitWindow,
    StreamMonitor,
    StreamStateError,
    WindowSizeMismatchWarning,
    detect_split,
    parse_ruleset,
    single_split_baseline,
    stream_detect,
)
from rulewatch.data import DataTable
from rulewatch.histogram import Split, hit_histogram
from tests.conftest import random_histogram

RULES = parse_ruleset(
    "if x1 <= 0.5 then a\n"
    "if x1 > 0.5 and x2 <= 0.5 then b\n"
    "if x2 > 0.25 then c\n"
)


def _record(rng):
    return {"x1": float(rng.random()), "x2": float(rng.random())}


def _batch_histogram(samples):
    X = np.array([[s["x1"], s["x2"]] for s in samples])
    return hit_histogram(RULES, Split(DataTable(("x1", "x2"), X)))


# -- sliding window -----------------------------------------------------------

def test_push_identical_samples_fills_with_mask():
    w = SlidingHitWindow(RULES, capacity=4)
    sample = {"x1": 0.2, "x2": 0.9}
    for _ in range(4):
        h = w.push(sample)
    assert h.counts == (4, 0, 4)
    assert h.split_size == 4


def test_window_matches_batch_recount_every_push(rng):
    w = SlidingHitWindow(RULES, capacity=16)
    history = []
    for _ in range(200):
        s = _record(rng)
        history.append(s)
        h = w.push(s)
        expected = _batch_histogram(history[-16:])
        assert h.counts == expected.counts
        assert h.split_size == expected.split_size


def test_eviction_removes_exactly_oldest(rng):
    w = SlidingHitWindow(RULES, capacity=8)
    samples = [_record(rng) for _ in range(9)]
    for s in samples[:8]:
        w.push(s)
    before = w.histogram().counts
    w.push(samples[8])
    after = w.histogram().counts
    from rulewatch import ruleset_hits

    oldest = np.array(ruleset_hits(RULES, samples[0]), dtype=int)
    newest = np.array(ruleset_hits(RULES, samples[8]), dtype=int)
    assert tuple(np.array(before) - oldest + newest) == after


def test_push_error_leaves_window_unchanged(rng):
    w = SlidingHitWindow(RULES, capacity=4)
    w.push(_record(rng))
    snapshot = (w.fill, w.histogram().counts)
    with pytest.raises(MissingFeatureError):
        w.push({"x1": 0.5})
    assert (w.fill, w.histogram().counts) == snapshot


def test_push_cost_independent_of_capacity(rng):
    costs = set()
    for capacity in (8, 64, 1024):
        w = SlidingHitWindow(RULES, capacity=capacity)
        for _ in range(capacity):
            w.push(_record(rng))
        w.push(_record(rng))  # steady-state push incl. eviction
        costs.add(w.last_push_ops)
        assert w.last_push_ops <= 4 * RULES.n_rules + 8
    assert len(costs) == 1  # same cost at every capacity


def test_empty_window_has_no_histogram():
    w = SlidingHitWindow(RULES, capacity=4)
    with pytest.raises(StreamStateError):
        w.histogram()


def test_retained_samples_audit(rng):
    w = SlidingHitWindow(RULES, capacity=3, retain_samples=True)
    samples = [_record(rng) for _ in range(5)]
    for s in samples:
        w.push(s)
    assert w.retained_samples() == samples[-3:]
    w2 = SlidingHitWindow(RULES, capacity=3)
    w2.push(_record(rng))
    with pytest.raises(StreamStateError):
        w2.retained_samples()


# -- stream detection ----------------------------------------------------------

def _training_setup(rng, n_tr=5, n_s=32):
    splits = []
    for i in range(n_tr):
        X = rng.random((n_s, 2))
        splits.append(Split(DataTable(("x1", "x2"), X), index=i))
    matrix = HitMatrix(tuple(hit_histogram(RULES, s) for s in splits))
    base = single_split_baseline(matrix, config={"n_s": n_s})
    return matrix, base


def test_stream_detect_requires_full_window(rng):
    matrix, base = _training_setup(rng)
    w = SlidingHitWindow(RULES, capacity=32)
    w.push(_record(rng))
    with pytest.raises(StreamStateError):
        stream_detect(w, base, matrix)


def test_stream_detect_equals_batch_detection(rng):
    matrix, base = _training_setup(rng)
    w = SlidingHitWindow(RULES, capacity=32, retain_samples=True)
    history = []
    ticks = 0
    for i in range(120):
        s = _record(rng)
        history.append(s)
        w.push(s)
        if not w.is_full:
            continue
        tick = stream_detect(w, base, matrix, sample_index=i)
        batch = detect_split(matrix, _batch_histogram(history[-32:]), base)
        assert tick.verdict == batch.verdict
        assert tick.flags == {n: m.flag for n, m in batch.per_metric.items()}
        assert tick.metric_values == {
            n: m.representative for n, m in batch.per_metric.items()
        }
        ticks += 1
    assert ticks == 120 - 31


def test_monitor_warns_on_window_size_mismatch(rng):
    matrix, base = _training_setup(rng, n_s=32)
    with pytest.warns(WindowSizeMismatchWarning):
        StreamMonitor(RULES, base, matrix, capacity=16)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        StreamMonitor(RULES, base, matrix)  # capacity from baseline: no warning


def test_monitor_tick_cadence_and_stride(rng):
    matrix, base = _training_setup(rng, n_s=8)
    monitor = StreamMonitor(RULES, base, matrix, capacity=8, detect_stride=3)
    ticks = [i for i in range(40) if monitor.push(_record(rng)) is not None]
    # first tick when the window fills (push index 7), then every 3rd push
    assert ticks == [7, 10, 13, 16, 19, 22, 25, 28, 31, 34, 37]


def test_monitor_group_mode_snapshots(rng):
    n_s = 12
    cols = tuple(random_histogram(rng, RULES.n_rules, n_s) for _ in range(8))
    from rulewatch import group_baseline

    base = group_baseline(cols[:4], cols[4:], config={"n_s": n_s, "n_op": 3, "k": 4})
    matrix = HitMatrix(cols)
    monitor = StreamMonitor(
        RULES, base, matrix, mode="group", capacity=n_s, n_op=3, snapshot_stride=4
    )
    first_tick = None
    for i in range(60):
        tick = monitor.push(_record(rng))
        if tick is not None:
            first_tick = tick
            break
    assert first_tick is not None
    # snapshots at pushes 12 (first full), 16, 20 -> 3rd snapshot on push 20
    assert first_tick.sample_index == 19
    assert "rbi" in first_tick.metric_values


def test_tick_record_csv_rows(rng):
    matrix, base = _training_setup(rng, n_s=8)
    monitor = StreamMonitor(RULES, base, matrix, capacity=8)
    tick = None
    i = 0
    while tick is None:
        tick = monitor.push(_record(rng))
        i += 1
    rows = tick.to_csv_rows()
    assert len(rows) == 3  # wmi, l1, l2
    for row in rows:
        assert len(row) == len(tick.CSV_HEADER)
        assert row[0] == tick.sample_index


# -- moments -------------------------------------------------------------------

def test_moments_constant_stream():
    acc = MomentAccumulator()
    for _ in range(10):
        acc.push(3.25)
    assert acc.mean() == 3.25
    assert acc.variance() == 0.0
    assert acc.skewness() == 0.0
    assert acc.kurtosis() == 0.0


def test_moments_hand_example():
    acc = MomentAccumulator()
    for v in (1, 2, 3, 4):
        acc.push(v)
    assert acc.mean() == pytest.approx(2.5)
    assert acc.variance() == pytest.approx(1.25)


def test_moments_requirements_ladder():
    acc = MomentAccumulator()
    with pytest.raises(InsufficientSamplesError):
        acc.mean()
    acc.push(1.0)
    assert acc.mean() == 1.0
    with pytest.raises(InsufficientSamplesError):
        acc.variance()
    acc.push(2.0)
    acc.variance()
    with pytest.raises(InsufficientSamplesError):
        acc.skewness()
    acc.push(3.0)
    acc.skewness()
    with pytest.raises(InsufficientSamplesError):
        acc.kurtosis()
    acc.push(4.0)
    assert len(acc.query()) == 4


def _batch_moments(values):
    arr = np.asarray(values, dtype=float)
    mean = arr.mean()
    d = arr - mean
    var = (d**2).mean()
    if var == 0:
        return mean, 0.0, 0.0, 0.0
    return (
        float(mean),
        float(var),
        float((d**3).mean() / var**1.5),
        float((d**4).mean() / var**2),
    )


def test_moments_match_batch_on_random_window(rng):
    acc = MomentAccumulator(capacity=50)
    window = []
    for i in range(3000):
        x = float(rng.normal(3.0, 2.0))
        acc.push(x)
        window.append(x)
        window = window[-50:]
        if acc.count >= 4:
            expected = _batch_moments(window)
            got = acc.query()
            for g, e in zip(got, expected):
                assert g == pytest.approx(e, rel=1e-9, abs=1e-9)


def test_moments_explicit_evictions_match_batch(rng):
    acc = MomentAccumulator()
    window = []
    for _ in range(2000):
        if window and rng.random() < 0.4:
            evicted = acc.evict()
            assert evicted == window.pop(0)
        else:
            x = float(rng.random() * 10 - 5)
            acc.push(x)
            window.append(x)
        if len(window) >= 4:
            for g, e in zip(acc.query(), _batch_moments(window)):
                assert g == pytest.approx(e, rel=1e-9, abs=1e-9)


def test_moments_never_nan(rng):
    acc = MomentAccumulator(capacity=6)
    for _ in range(100):
        acc.push(float(rng.random()))
        if acc.count >= 4:
            assert all(not math.isnan(v) for v in acc.query())


def test_evict_empty_accumulator():
    with pytest.raises(InsufficientSamplesError):
        MomentAccumulator().evict()
