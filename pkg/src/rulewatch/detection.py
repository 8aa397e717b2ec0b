"""Baseline envelopes and out-of-distribution verdicts.

Training-time metric values between split pairs define closed [min, max]
intervals per metric (the baseline). At detection time the same metrics are
computed between training columns and operational data; a metric flags when
a strict majority of its values falls outside its interval, and the final
verdict is OoD as soon as ANY metric flags (minority voting: one alarming
metric is enough, minimizing missed detections at some false-positive cost).

Two modes:

* single-split: weighted mutual information + l1/l2 norms against one
  operational histogram;
* group: rule-based information over a group of operational histograms
  (leave-one-out calibrated) + l1/l2 norms over all column pairs.
"""
from __future__ import annotations

import hashlib
import json
import math
import statistics
import sys
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .histogram import HitHistogram, HitMatrix
from .metrics import (
    SIGMA_FLOOR_DEFAULT,
    MetricError,
    fit_bank,
    lp_norm,
    rule_based_information,
    weighted_mutual_information,
)
from .rules import Ruleset, format_ruleset

IN_DISTRIBUTION = "in-distribution"
OUT_OF_DISTRIBUTION = "OoD"

SINGLE_SPLIT = "single-split"
GROUP = "group"

SINGLE_METRICS = ("wmi", "l1", "l2")
GROUP_METRICS = ("rbi", "l1", "l2")

# Version tag for the recorded tie-break / interval / logarithm conventions;
# part of the fingerprint so baselines never silently cross conventions.
DECISIONS_TAG = "closed-intervals.strict-majority.natural-log.value-frequency.v1"


class DetectionError(ValueError):
    """Detection-stage failures other than fingerprint mismatches."""


class FingerprintMismatchError(DetectionError):
    """Baseline was built under a different ruleset or configuration."""


def strict_majority(flags: Sequence[bool]) -> bool:
    """True iff strictly more than half the flags are set; ties read false."""
    if len(flags) == 0:
        raise DetectionError("majority of an empty flag list is undefined")
    return 2 * sum(bool(f) for f in flags) > len(flags)


def interval_contains(interval: tuple[float, float], value: float) -> bool:
    """Closed-interval membership; boundary values are in-distribution."""
    lo, hi = interval
    return lo <= value <= hi


def normalized_distance(interval: tuple[float, float], value: float) -> float:
    """0 inside the interval, else gap over interval width (width floored).

    Non-normative severity commentary: larger means further outside the
    training envelope, in units of envelope width.
    """
    lo, hi = interval
    if lo <= value <= hi:
        return 0.0
    if math.isinf(value):
        return math.inf
    gap = lo - value if value < lo else value - hi
    return gap / max(hi - lo, sys.float_info.epsilon)


@dataclass(frozen=True)
class Baselines:
    """Per-metric closed [min, max] training envelopes.

    ``wmi`` is present for single-split baselines, ``rbi`` for group
    baselines; the norm intervals exist in both. ``config`` echoes the
    build parameters and ``config_fingerprint`` binds the baseline to the
    exact ruleset and conventions it was built under.
    """

    l1: tuple[float, float]
    l2: tuple[float, float]
    wmi: tuple[float, float] | None = None
    rbi: tuple[float, float] | None = None
    config_fingerprint: str = ""
    config: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("l1", "l2", "wmi", "rbi"):
            iv = getattr(self, name)
            if iv is not None and not (iv[0] <= iv[1]):
                raise DetectionError(f"{name} interval has min > max: {iv}")

    def interval(self, metric: str) -> tuple[float, float]:
        iv = getattr(self, metric, None)
        if iv is None:
            raise DetectionError(f"baseline has no interval for metric {metric!r}")
        return iv


@dataclass(frozen=True)
class MetricReport:
    """Votes and envelope position of one metric at detection time."""

    name: str
    values: tuple[float, ...]
    flag: bool
    votes_out: int
    votes_total: int
    normalized_distance: float
    baseline: tuple[float, float]

    @property
    def representative(self) -> float:
        """Median value; the plottable per-tick summary of this metric."""
        return statistics.median(self.values)


@dataclass(frozen=True)
class DetectionReport:
    """Per-metric outcomes plus the final verdict for one detection."""

    mode: str
    per_metric: dict[str, MetricReport]
    verdict: str = field(init=False)

    def __post_init__(self) -> None:
        any_flag = any(m.flag for m in self.per_metric.values())
        object.__setattr__(
            self, "verdict", OUT_OF_DISTRIBUTION if any_flag else IN_DISTRIBUTION
        )

    @property
    def is_ood(self) -> bool:
        return self.verdict == OUT_OF_DISTRIBUTION

    def to_document(self) -> str:
        doc = {
            "mode": self.mode,
            "verdict": self.verdict,
            "metrics": {
                name: {
                    "values": [_json_float(v) for v in m.values],
                    "flag": m.flag,
                    "votes_out": m.votes_out,
                    "votes_total": m.votes_total,
                    "normalized_distance": _json_float(m.normalized_distance),
                    "baseline": [m.baseline[0], m.baseline[1]],
                }
                for name, m in self.per_metric.items()
            },
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _json_float(v: float) -> float | str:
    return "inf" if math.isinf(v) else v


def _metric_report(
    name: str, values: Sequence[float], interval: tuple[float, float]
) -> MetricReport:
    votes_out = sum(0 if interval_contains(interval, v) else 1 for v in values)
    distances = sorted(normalized_distance(interval, v) for v in values)
    return MetricReport(
        name=name,
        values=tuple(values),
        flag=2 * votes_out > len(values),
        votes_out=votes_out,
        votes_total=len(values),
        normalized_distance=statistics.median(distances),
        baseline=interval,
    )


# ---------------------------------------------------------------------------
# Fingerprinting
# ---------------------------------------------------------------------------

def compute_fingerprint(ruleset: Ruleset, config: Mapping[str, object]) -> str:
    """Hash binding a baseline to its ruleset, parameters and conventions."""
    payload = {
        "ruleset": format_ruleset(ruleset),
        "config": {k: config[k] for k in sorted(config)},
        "decisions": DECISIONS_TAG,
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def check_compatible(base: Baselines, training: HitMatrix) -> None:
    """Structural fingerprint checks a detector can perform on its inputs."""
    cfg = base.config
    if "n_rules" in cfg and cfg["n_rules"] != training.n_rules:
        raise FingerprintMismatchError(
            f"baseline built for {cfg['n_rules']} rules, matrix has {training.n_rules}"
        )
    if "n_tr" in cfg and cfg["n_tr"] != training.n_training:
        raise FingerprintMismatchError(
            f"baseline built from {cfg['n_tr']} training splits, matrix has {training.n_training}"
        )


# ---------------------------------------------------------------------------
# Single-split mode
# ---------------------------------------------------------------------------

_PAIR_METRICS: dict[str, Callable[[HitHistogram, HitHistogram], float]] = {
    "wmi": weighted_mutual_information,
    "l1": lambda a, b: lp_norm(a, b, 1),
    "l2": lambda a, b: lp_norm(a, b, 2),
}


def _pair_intervals(
    columns: Sequence[HitHistogram], names: Sequence[str]
) -> dict[str, tuple[float, float]]:
    # All pair metrics are symmetric, so unordered pairs give the same
    # min/max envelope as ordered ones.
    intervals = {}
    for name in names:
        fn = _PAIR_METRICS[name]
        values = [
            fn(columns[i], columns[j])
            for i in range(len(columns))
            for j in range(i + 1, len(columns))
        ]
        intervals[name] = (min(values), max(values))
    return intervals


def single_split_baseline(
    training: HitMatrix,
    config: Mapping[str, object] | None = None,
    fingerprint: str = "",
) -> Baselines:
    """Envelope of weighted mutual information and norms over training pairs."""
    if training.n_training < 2:
        raise DetectionError(
            f"baseline needs at least 2 training splits, got {training.n_training}"
        )
    iv = _pair_intervals(training.training_columns, ("wmi", "l1", "l2"))
    cfg = dict(config or {})
    cfg.setdefault("n_rules", training.n_rules)
    cfg.setdefault("n_tr", training.n_training)
    return Baselines(
        l1=iv["l1"], l2=iv["l2"], wmi=iv["wmi"],
        config_fingerprint=fingerprint, config=cfg,
    )


def detect_split(
    training: HitMatrix,
    op: HitHistogram,
    base: Baselines,
    metrics: Sequence[str] = SINGLE_METRICS,
) -> DetectionReport:
    """Compare one operational histogram against every training column.

    Each metric votes once per training column; a strict majority of
    out-of-envelope votes raises that metric's flag.
    """
    check_compatible(base, training)
    if op.n_rules != training.n_rules:
        raise MetricError(
            f"operational histogram has {op.n_rules} rules, training {training.n_rules}"
        )
    reports = {}
    for name in metrics:
        if name not in _PAIR_METRICS:
            raise DetectionError(f"unknown single-split metric {name!r}")
        fn = _PAIR_METRICS[name]
        values = [fn(tr, op) for tr in training.training_columns]
        reports[name] = _metric_report(name, values, base.interval(name))
    return DetectionReport(mode=SINGLE_SPLIT, per_metric=reports)


# ---------------------------------------------------------------------------
# Group mode
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupConfig:
    """Split bookkeeping for group mode: k = n_tr - n_op - 1."""

    n_tr: int
    n_op: int
    n_s: int
    seed: int

    def __post_init__(self) -> None:
        if self.n_op < 2:
            raise DetectionError(f"group mode needs n_op >= 2, got {self.n_op}")
        if self.k < 2:
            raise DetectionError(
                f"group mode needs k = n_tr - n_op - 1 >= 2, got {self.k}"
            )

    @property
    def k(self) -> int:
        return self.n_tr - self.n_op - 1


def group_baseline(
    tr1: Sequence[HitHistogram],
    tr2: Sequence[HitHistogram],
    sigma_floor: float = SIGMA_FLOOR_DEFAULT,
    config: Mapping[str, object] | None = None,
    fingerprint: str = "",
) -> Baselines:
    """Leave-one-out rule-based-information envelope plus norm envelopes.

    For every held-out member of ``tr2``, the remaining fold is scored
    against the ``tr1`` reference; the fold scores' [min, max] is the
    envelope. Norm envelopes use all training columns (``tr1 + tr2``).
    """
    k = len(tr1)
    if k < 2:
        raise DetectionError(f"reference part needs >= 2 splits, got {k}")
    if len(tr2) < 3:
        raise DetectionError(
            f"calibration part needs >= 3 splits (each fold keeps >= 2), got {len(tr2)}"
        )
    ref_bank = fit_bank(tr1, sigma_floor, source="TR1")
    fold_scores = []
    for m in range(len(tr2)):
        fold = list(tr2[:m]) + list(tr2[m + 1 :])
        fold_bank = fit_bank(fold, sigma_floor, source=f"TR2_{m}")
        fold_scores.append(rule_based_information(fold, fold_bank, ref_bank))
    all_columns = list(tr1) + list(tr2)
    iv = _pair_intervals(all_columns, ("l1", "l2"))
    cfg = dict(config or {})
    cfg.setdefault("n_rules", tr1[0].n_rules)
    cfg.setdefault("n_tr", len(all_columns))
    cfg.setdefault("k", k)
    cfg.setdefault("sigma_floor", sigma_floor)
    return Baselines(
        l1=iv["l1"], l2=iv["l2"],
        rbi=(min(fold_scores), max(fold_scores)),
        config_fingerprint=fingerprint, config=cfg,
    )


def detect_group(
    tr1: Sequence[HitHistogram],
    op_group: Sequence[HitHistogram],
    base: Baselines,
    training: HitMatrix,
    metrics: Sequence[str] = GROUP_METRICS,
) -> DetectionReport:
    """Score an operational group against the reference part of training.

    Rule-based information casts a single vote; the norms vote once per
    (training column, group member) pair. Norm votes run over ALL training
    columns, matching the envelopes built by ``group_baseline``.
    """
    check_compatible(base, training)
    if len(op_group) < 2:
        raise DetectionError(
            f"group detection needs at least 2 operational histograms, got {len(op_group)}"
        )
    sigma_floor = float(base.config.get("sigma_floor", SIGMA_FLOOR_DEFAULT))
    reports = {}
    for name in metrics:
        if name == "rbi":
            ref_bank = fit_bank(tr1, sigma_floor, source="TR1")
            op_bank = fit_bank(op_group, sigma_floor, source="OP")
            value = rule_based_information(op_group, op_bank, ref_bank)
            reports[name] = _metric_report(name, [value], base.interval(name))
        elif name in ("l1", "l2"):
            p = 1 if name == "l1" else 2
            values = [
                lp_norm(tr, op, p)
                for tr in training.training_columns
                for op in op_group
            ]
            reports[name] = _metric_report(name, values, base.interval(name))
        else:
            raise DetectionError(f"unknown group metric {name!r}")
    return DetectionReport(mode=GROUP, per_metric=reports)


# ---------------------------------------------------------------------------
# Persistence: baseline bundle = baselines + training hit matrix
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BaselineBundle:
    """Everything detection needs later: envelopes plus training histograms.

    Detection recomputes metrics against the training columns, so the
    persisted artifact carries them alongside the intervals.
    """

    baselines: Baselines
    training: HitMatrix

    def to_document(self) -> str:
        base = self.baselines
        doc = {
            "fingerprint": base.config_fingerprint,
            "config": {k: base.config[k] for k in sorted(base.config)},
            "intervals": {
                name: (list(iv) if (iv := getattr(base, name)) is not None else None)
                for name in ("wmi", "rbi", "l1", "l2")
            },
            "training_hits": {
                "split_size": self.training.training_columns[0].split_size,
                "columns": [list(c.counts) for c in self.training.training_columns],
            },
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_document(cls, text: str) -> "BaselineBundle":
        try:
            doc = json.loads(text)
            intervals = doc["intervals"]
            hits = doc["training_hits"]
            columns = tuple(
                HitHistogram(tuple(int(c) for c in counts), int(hits["split_size"]))
                for counts in hits["columns"]
            )
            base = Baselines(
                l1=tuple(intervals["l1"]),
                l2=tuple(intervals["l2"]),
                wmi=tuple(intervals["wmi"]) if intervals.get("wmi") else None,
                rbi=tuple(intervals["rbi"]) if intervals.get("rbi") else None,
                config_fingerprint=doc.get("fingerprint", ""),
                config=doc.get("config", {}),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DetectionError(f"malformed baseline document: {exc}") from exc
        return cls(baselines=base, training=HitMatrix(columns))

    @property
    def tr1_columns(self) -> tuple[HitHistogram, ...]:
        k = self.baselines.config.get("k")
        if k is None:
            raise DetectionError("baseline bundle has no reference partition (single-split mode?)")
        return self.training.training_columns[: int(k)]
