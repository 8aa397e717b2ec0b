"""Incremental groupwise operation over sample streams.

The window stores one hit mask per retained sample, not the sample itself,
so evicting the oldest sample and admitting a new one both cost O(n_rules)
regardless of window length; the running counts are integer-exact equal to
a batch recount of the retained samples at every tick. On top of that sits
a monitor that reruns detection every push (or every ``detect_stride``
pushes) and, in group mode, keeps the last ``n_op`` stride-spaced window
snapshots as the operational group.

A separate accumulator provides rolling mean/variance/skewness/kurtosis for
time-series feature extraction.
"""
from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .detection import (
    GROUP,
    GROUP_METRICS,
    SINGLE_METRICS,
    SINGLE_SPLIT,
    Baselines,
    DetectionError,
    DetectionReport,
    detect_group,
    detect_split,
)
from .histogram import HitHistogram, HitMatrix, OPERATIONAL
from .rules import Ruleset, ruleset_hits


class StreamStateError(RuntimeError):
    """Stream operation attempted in an invalid window state."""


class InsufficientSamplesError(ValueError):
    """A moment was queried with fewer samples than it needs."""


class WindowSizeMismatchWarning(UserWarning):
    """Stream window length differs from the baseline's split size."""


class SlidingHitWindow:
    """Ring buffer of per-sample hit masks with exact running counts."""

    def __init__(self, ruleset: Ruleset, capacity: int, retain_samples: bool = False):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self._ruleset = ruleset
        self._capacity = capacity
        self._n_rules = ruleset.n_rules
        self._masks = np.zeros((capacity, self._n_rules), dtype=bool)
        self._counts = np.zeros(self._n_rules, dtype=np.int64)
        self._head = 0
        self._fill = 0
        self._samples: deque | None = deque(maxlen=capacity) if retain_samples else None
        # Instrumentation: per-rule elementary updates in the last push,
        # for asserting the O(n_rules) per-push contract without clocks.
        self.last_push_ops = 0

    @property
    def capacity(self) -> int:
        return self._capacity

    @property
    def fill(self) -> int:
        return self._fill

    @property
    def is_full(self) -> bool:
        return self._fill == self._capacity

    @property
    def n_rules(self) -> int:
        return self._n_rules

    def push(self, sample: Mapping[str, float]) -> HitHistogram:
        """Admit one sample, evicting the oldest when full.

        Evaluation happens before any mutation, so an evaluation error
        leaves the window unchanged.
        """
        mask = np.asarray(ruleset_hits(self._ruleset, sample), dtype=bool)
        ops = self._n_rules  # rule evaluations
        if self._fill == self._capacity:
            self._counts -= self._masks[self._head]
            ops += self._n_rules
        else:
            self._fill += 1
        self._masks[self._head] = mask
        self._counts += mask
        ops += self._n_rules
        self._head = (self._head + 1) % self._capacity
        if self._samples is not None:
            self._samples.append(dict(sample))
        self.last_push_ops = ops
        return self.histogram()

    def histogram(self) -> HitHistogram:
        if self._fill == 0:
            raise StreamStateError("window is empty; no histogram yet")
        return HitHistogram(
            tuple(int(c) for c in self._counts), self._fill, origin=OPERATIONAL
        )

    def retained_samples(self) -> list[dict[str, float]]:
        """Oldest-first copies of the retained samples (audit aid)."""
        if self._samples is None:
            raise StreamStateError("window was created with retain_samples=False")
        return list(self._samples)


@dataclass(frozen=True)
class TickRecord:
    """One detection outcome of the stream, keyed by the pushed sample."""

    sample_index: int
    mode: str
    metric_values: dict[str, float]
    flags: dict[str, bool]
    verdict: str
    baseline_bounds: dict[str, tuple[float, float]]

    CSV_HEADER = ("sample_index", "metric", "value", "base_min", "base_max", "flag", "verdict")

    def to_csv_rows(self) -> list[tuple]:
        rows = []
        for name, value in self.metric_values.items():
            lo, hi = self.baseline_bounds[name]
            rows.append(
                (self.sample_index, name, value, lo, hi,
                 int(self.flags[name]), self.verdict)
            )
        return rows


def _tick_from_report(report: DetectionReport, sample_index: int) -> TickRecord:
    return TickRecord(
        sample_index=sample_index,
        mode=report.mode,
        metric_values={n: m.representative for n, m in report.per_metric.items()},
        flags={n: m.flag for n, m in report.per_metric.items()},
        verdict=report.verdict,
        baseline_bounds={n: m.baseline for n, m in report.per_metric.items()},
    )


def stream_detect(
    window: SlidingHitWindow,
    base: Baselines,
    training: HitMatrix,
    mode: str = SINGLE_SPLIT,
    op_snapshots: Sequence[HitHistogram] | None = None,
    metrics: Sequence[str] | None = None,
    sample_index: int = 0,
) -> TickRecord:
    """Run one detection tick on the current window state."""
    if not window.is_full:
        raise StreamStateError(
            f"window holds {window.fill} of {window.capacity} samples; detection needs a full window"
        )
    if mode == SINGLE_SPLIT:
        report = detect_split(
            training, window.histogram(), base, metrics=metrics or SINGLE_METRICS
        )
    elif mode == GROUP:
        if not op_snapshots or len(op_snapshots) < 2:
            raise StreamStateError("group mode needs at least 2 window snapshots")
        k = base.config.get("k")
        if k is None:
            raise DetectionError("baseline carries no reference partition for group mode")
        tr1 = training.training_columns[: int(k)]
        report = detect_group(
            tr1, list(op_snapshots), base, training, metrics=metrics or GROUP_METRICS
        )
    else:
        raise DetectionError(f"unknown stream mode {mode!r}")
    return _tick_from_report(report, sample_index)


class StreamMonitor:
    """Feed samples, get a TickRecord per detection tick.

    Single-writer object: one stream pushes; reads happen between pushes.
    In group mode the operational group is the window state captured every
    ``snapshot_stride`` pushes (default capacity // n_op), and ticks start
    once ``n_op`` snapshots exist.
    """

    def __init__(
        self,
        ruleset: Ruleset,
        base: Baselines,
        training: HitMatrix,
        mode: str = SINGLE_SPLIT,
        capacity: int | None = None,
        detect_stride: int = 1,
        snapshot_stride: int | None = None,
        n_op: int | None = None,
        metrics: Sequence[str] | None = None,
        retain_samples: bool = False,
    ):
        if detect_stride < 1:
            raise ValueError("detect_stride must be >= 1")
        base_ns = base.config.get("n_s")
        if capacity is None:
            if base_ns is None:
                raise DetectionError(
                    "window capacity not given and baseline does not record n_s"
                )
            capacity = int(base_ns)
        if base_ns is not None and capacity != int(base_ns):
            warnings.warn(
                f"stream window of {capacity} samples differs from the baseline split "
                f"size {base_ns}; envelope calibration assumes matching sizes",
                WindowSizeMismatchWarning,
                stacklevel=2,
            )
        self.window = SlidingHitWindow(ruleset, capacity, retain_samples=retain_samples)
        self.base = base
        self.training = training
        self.mode = mode
        self.metrics = metrics
        self.detect_stride = detect_stride
        self._pushes = 0
        if mode == GROUP:
            self.n_op = int(n_op or base.config.get("n_op") or 0)
            if self.n_op < 2:
                raise DetectionError("group streaming needs n_op >= 2")
            self.snapshot_stride = snapshot_stride or max(capacity // self.n_op, 1)
            self._snapshots: deque[HitHistogram] = deque(maxlen=self.n_op)
        else:
            self.n_op = 1
            self.snapshot_stride = 0
            self._snapshots = deque()

    @property
    def pushes(self) -> int:
        return self._pushes

    def push(self, sample: Mapping[str, float]) -> TickRecord | None:
        """Push one sample; returns a TickRecord when a detection tick fires."""
        self.window.push(sample)
        index = self._pushes
        self._pushes += 1
        if not self.window.is_full:
            return None
        if self.mode == GROUP and self._pushes % self.snapshot_stride == 0:
            self._snapshots.append(self.window.histogram())
        if (self._pushes - self.window.capacity) % self.detect_stride != 0:
            return None
        if self.mode == GROUP and len(self._snapshots) < self.n_op:
            return None
        return stream_detect(
            self.window,
            self.base,
            self.training,
            mode=self.mode,
            op_snapshots=list(self._snapshots) if self.mode == GROUP else None,
            metrics=self.metrics,
            sample_index=index,
        )


# ---------------------------------------------------------------------------
# Incremental moments
# ---------------------------------------------------------------------------

class MomentAccumulator:
    """Rolling mean/variance/skewness/kurtosis over a value window.

    Keeps power sums of values centered on the window's first retained
    value, re-anchoring (full recompute) every ``REANCHOR_INTERVAL``
    updates so floating drift from long add/subtract chains stays far below
    the 1e-9 agreement target against batch recomputation. Variance is the
    population (divide-by-n) variant; skewness and kurtosis are the usual
    standardized third and fourth moments, defined as 0 for a zero-variance
    window.
    """

    REANCHOR_INTERVAL = 2048

    def __init__(self, capacity: int | None = None):
        if capacity is not None and capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self._capacity = capacity
        self._values: deque[float] = deque()
        self._center = 0.0
        self._s1 = self._s2 = self._s3 = self._s4 = 0.0
        self._updates = 0

    @property
    def count(self) -> int:
        return len(self._values)

    @property
    def capacity(self) -> int | None:
        return self._capacity

    def push(self, x: float) -> None:
        """Add a value; at capacity, the oldest value is evicted first."""
        if self._capacity is not None and len(self._values) == self._capacity:
            self.evict()
        x = float(x)
        if not self._values:
            self._center = x
            self._s1 = self._s2 = self._s3 = self._s4 = 0.0
        self._values.append(x)
        self._accumulate(x, +1.0)

    def evict(self) -> float:
        """Remove and return the oldest value."""
        if not self._values:
            raise InsufficientSamplesError("cannot evict from an empty accumulator")
        x = self._values.popleft()
        self._accumulate(x, -1.0)
        return x

    def _accumulate(self, x: float, sign: float) -> None:
        d = x - self._center
        d2 = d * d
        self._s1 += sign * d
        self._s2 += sign * d2
        self._s3 += sign * d2 * d
        self._s4 += sign * d2 * d2
        self._updates += 1
        if self._updates >= self.REANCHOR_INTERVAL:
            self._reanchor()

    def _reanchor(self) -> None:
        self._updates = 0
        if not self._values:
            return
        self._center = self._values[0]
        c = self._center
        ds = [v - c for v in self._values]
        self._s1 = math.fsum(ds)
        self._s2 = math.fsum(d * d for d in ds)
        self._s3 = math.fsum(d * d * d for d in ds)
        self._s4 = math.fsum(d * d * d * d for d in ds)

    def _require(self, n: int, what: str) -> None:
        if len(self._values) < n:
            raise InsufficientSamplesError(
                f"{what} needs at least {n} samples, have {len(self._values)}"
            )

    def mean(self) -> float:
        self._require(1, "mean")
        return self._center + self._s1 / len(self._values)

    def _central_sums(self) -> tuple[int, float, float, float]:
        n = len(self._values)
        m1, m2, m3, m4 = self._s1, self._s2, self._s3, self._s4
        d = m1 / n
        c2 = m2 - n * d * d
        c3 = m3 - 3.0 * d * m2 + 2.0 * n * d**3
        c4 = m4 - 4.0 * d * m3 + 6.0 * d * d * m2 - 3.0 * n * d**4
        return n, max(c2, 0.0), c3, c4

    def variance(self) -> float:
        self._require(2, "variance")
        n, c2, _, _ = self._central_sums()
        return c2 / n

    def skewness(self) -> float:
        self._require(3, "skewness")
        n, c2, c3, _ = self._central_sums()
        var = c2 / n
        if var == 0.0:
            return 0.0
        return (c3 / n) / var**1.5

    def kurtosis(self) -> float:
        self._require(4, "kurtosis")
        n, c2, _, c4 = self._central_sums()
        var = c2 / n
        if var == 0.0:
            return 0.0
        return (c4 / n) / (var * var)

    def query(self) -> tuple[float, float, float, float]:
        """(mean, variance, skewness, kurtosis) of the retained values."""
        self._require(4, "full moment query")
        return self.mean(), self.variance(), self.skewness(), self.kurtosis()
