"""Repeated baseline+detect experiments measuring FPR and FNR.

Each repetition draws fresh training data, induces a ruleset, builds the
baseline, then scores one held-out in-distribution unit (false positive if
flagged) and one out-of-distribution unit (false negative if not flagged).
Held-out units never enter baseline construction. All randomness descends
from the single master seed; repetitions are independent and aggregation
is deterministic.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
import numpy as np

from .config import RunConfig
from .data import DataTable
from .detection import (
    DetectionReport,
    detect_group,
    detect_split,
    group_baseline,
    single_split_baseline,
)
from .histogram import OPERATIONAL, Split, hit_histogram, hit_matrix, make_splits
from .inducer import induce_ruleset
from .rules import Ruleset


@dataclass(frozen=True)
class EvalSummary:
    """Aggregated error rates of a repeated detection experiment."""

    scenario: str
    mode: str
    repetitions: int
    fpr: float
    fnr: float
    per_metric_fp_rates: dict[str, float]
    per_metric_detect_rates: dict[str, float]
    config: dict = field(default_factory=dict)

    def to_document(self) -> str:
        doc = {
            "scenario": self.scenario,
            "mode": self.mode,
            "repetitions": self.repetitions,
            "fpr": self.fpr,
            "fnr": self.fnr,
            "per_metric_fp_rates": self.per_metric_fp_rates,
            "per_metric_detect_rates": self.per_metric_detect_rates,
            "config": self.config,
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _operational_splits(table: DataTable, n_s: int, count: int) -> list[Split]:
    return [
        Split(table.take(np.arange(i * n_s, (i + 1) * n_s)), origin=OPERATIONAL, index=i)
        for i in range(count)
    ]


def _induce(in_source, cfg: RunConfig, rng: np.random.Generator) -> Ruleset:
    # Dedicated inducer sample: keeps tree adaptation noise out of the
    # baseline splits' hit statistics.
    inducer_table = in_source.sample(max(4 * cfg.n_s, 4000), rng)
    return induce_ruleset(
        inducer_table, max_depth=cfg.max_depth, min_leaf=cfg.min_leaf, warn=False
    )


def _run_repetition_single(
    in_source, ood_source, cfg: RunConfig, rng: np.random.Generator
) -> tuple[DetectionReport, DetectionReport]:
    ruleset = _induce(in_source, cfg, rng)
    train_table = in_source.sample(cfg.n_tr * cfg.n_s, rng)
    splits = make_splits(train_table, cfg.n_s, cfg.n_tr, seed=int(rng.integers(2**31)))
    training = hit_matrix(ruleset, splits)
    base = single_split_baseline(training, config={"n_s": cfg.n_s})
    fresh = _operational_splits(in_source.sample(cfg.n_s, rng), cfg.n_s, 1)[0]
    ood = _operational_splits(ood_source.sample(cfg.n_s, rng), cfg.n_s, 1)[0]
    fp_report = detect_split(training, hit_histogram(ruleset, fresh), base)
    fn_report = detect_split(training, hit_histogram(ruleset, ood), base)
    return fp_report, fn_report


def _run_repetition_group(
    in_source, ood_source, cfg: RunConfig, rng: np.random.Generator
) -> tuple[DetectionReport, DetectionReport]:
    n_op = cfg.resolved_n_op
    k = cfg.n_tr - n_op - 1
    ruleset = _induce(in_source, cfg, rng)
    train_table = in_source.sample(cfg.n_tr * cfg.n_s, rng)
    splits = make_splits(train_table, cfg.n_s, cfg.n_tr, seed=int(rng.integers(2**31)))
    training = hit_matrix(ruleset, splits)
    columns = training.training_columns
    tr1, tr2 = columns[:k], columns[k:]
    base = group_baseline(
        tr1, tr2, sigma_floor=cfg.sigma_floor,
        config={"n_s": cfg.n_s, "n_op": n_op},
    )
    fresh_group = [
        hit_histogram(ruleset, s)
        for s in _operational_splits(in_source.sample(n_op * cfg.n_s, rng), cfg.n_s, n_op)
    ]
    ood_group = [
        hit_histogram(ruleset, s)
        for s in _operational_splits(ood_source.sample(n_op * cfg.n_s, rng), cfg.n_s, n_op)
    ]
    fp_report = detect_group(tr1, fresh_group, base, training)
    fn_report = detect_group(tr1, ood_group, base, training)
    return fp_report, fn_report


def run_eval(
    in_source,
    ood_source,
    cfg: RunConfig,
    scenario: str = "synthetic",
) -> EvalSummary:
    """Measure FPR/FNR over ``cfg.repetitions`` independent repetitions."""
    runner = _run_repetition_single if cfg.mode == "single" else _run_repetition_group
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.repetitions)
    fp = fn = 0
    metric_fp: dict[str, int] = {}
    metric_detect: dict[str, int] = {}
    for child in seeds:
        rng = np.random.default_rng(child)
        fp_report, fn_report = runner(in_source, ood_source, cfg, rng)
        fp += int(fp_report.is_ood)
        fn += int(not fn_report.is_ood)
        for name, m in fp_report.per_metric.items():
            metric_fp[name] = metric_fp.get(name, 0) + int(m.flag)
        for name, m in fn_report.per_metric.items():
            metric_detect[name] = metric_detect.get(name, 0) + int(m.flag)
    reps = cfg.repetitions
    return EvalSummary(
        scenario=scenario,
        mode=cfg.mode,
        repetitions=reps,
        fpr=fp / reps,
        fnr=fn / reps,
        per_metric_fp_rates={k: v / reps for k, v in sorted(metric_fp.items())},
        per_metric_detect_rates={k: v / reps for k, v in sorted(metric_detect.items())},
        config=cfg.echo(),
    )
