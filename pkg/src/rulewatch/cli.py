"""Command-line surface: induce, baseline, detect, stream, eval, featurize.

Exit codes are a stable contract: 0 in-distribution / success, 1 usage or
data error, 2 baseline fingerprint mismatch, 3 out-of-distribution verdict.
"""
from __future__ import annotations

import argparse
import csv
import sys
import warnings
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .config import RunConfig, build_config, load_config_file
from .data import DataError, DataTable
from .detection import (
    BaselineBundle,
    DetectionError,
    FingerprintMismatchError,
    GroupConfig,
    compute_fingerprint,
    detect_group,
    detect_split,
    group_baseline,
    single_split_baseline,
)
from .eval import run_eval
from .histogram import OPERATIONAL, Split, hit_histogram, hit_matrix, make_splits
from .inducer import InducerError, induce_ruleset
from .metrics import MetricError
from .rules import RuleError, Ruleset, format_ruleset, parse_ruleset
from .streaming import MomentAccumulator, StreamMonitor, StreamStateError, TickRecord
from .synth import make_source

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FINGERPRINT = 2
EXIT_OOD = 3


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file; flags override it")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--ns", type=int, default=None, help="samples per split")
    p.add_argument("--ntr", type=int, default=None, help="number of training splits")
    p.add_argument("--nop", type=int, default=None, help="number of operational splits")
    p.add_argument("--mode", choices=("single", "group"), default=None)
    p.add_argument("--stride", type=int, default=None, help="detection tick stride")
    p.add_argument("--sigma-floor", type=float, default=None)
    p.add_argument("--label-column", default=None)
    p.add_argument("--metrics", default=None, help="comma list, e.g. wmi,l1,l2")
    p.add_argument("--repetitions", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-leaf", type=int, default=None)
    p.add_argument("--full-scale", action="store_true", default=None,
                   help="full-scale experiment defaults (2500 repetitions)")


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    file_values = load_config_file(args.config) if args.config else None
    metrics = None
    if getattr(args, "metrics", None):
        metrics = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    return build_config(
        file_values,
        seed=args.seed,
        n_s=args.ns,
        n_tr=args.ntr,
        n_op=args.nop,
        mode=args.mode,
        stride=args.stride,
        sigma_floor=getattr(args, "sigma_floor", None),
        label_column=getattr(args, "label_column", None),
        metrics=metrics,
        repetitions=getattr(args, "repetitions", None),
        max_depth=getattr(args, "max_depth", None),
        min_leaf=getattr(args, "min_leaf", None),
        full_scale=getattr(args, "full_scale", None),
    )


def _load_features(path: str, label_column: str | None) -> DataTable:
    """Load a CSV, tolerating the absence of the configured label column."""
    if label_column:
        with open(path, newline="") as fh:
            header = next(csv.reader(fh), [])
        if label_column in [h.strip() for h in header]:
            return DataTable.from_csv(path, label_column=label_column)
    return DataTable.from_csv(path)


def _fingerprint_config(cfg: RunConfig) -> dict:
    return {
        "n_s": cfg.n_s,
        "n_tr": cfg.n_tr,
        "n_op": cfg.resolved_n_op,
        "seed": cfg.seed,
        "sigma_floor": cfg.sigma_floor,
        "mode": cfg.mode,
    }


def _check_bundle_fingerprint(bundle: BaselineBundle, ruleset: Ruleset) -> None:
    cfg = bundle.baselines.config
    fp_cfg = {k: cfg[k] for k in ("n_s", "n_tr", "n_op", "seed", "sigma_floor", "mode") if k in cfg}
    expected = compute_fingerprint(ruleset, fp_cfg)
    if expected != bundle.baselines.config_fingerprint:
        raise FingerprintMismatchError(
            "baseline fingerprint does not match the supplied ruleset/configuration; "
            "rebuild the baseline or supply the original rules"
        )


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_induce(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    table = DataTable.from_csv(args.data, label_column=cfg.label_column)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ruleset = induce_ruleset(
            table, max_depth=cfg.max_depth, min_leaf=cfg.min_leaf, seed=cfg.seed
        )
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _write_text(args.output, format_ruleset(ruleset))
    print(f"induced {ruleset.n_rules} rules from {table.n_rows} samples", file=sys.stderr)
    return EXIT_OK


def _print_intervals(bundle: BaselineBundle) -> None:
    base = bundle.baselines
    print(f"{'metric':<8}{'min':>14}{'max':>14}")
    for name in ("wmi", "rbi", "l1", "l2"):
        iv = getattr(base, name)
        if iv is not None:
            print(f"{name:<8}{iv[0]:>14.6g}{iv[1]:>14.6g}")
    print(f"fingerprint {base.config_fingerprint[:16]}", file=sys.stderr)


def cmd_baseline(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    ruleset = parse_ruleset(Path(args.rules).read_text())
    table = _load_features(args.data, cfg.label_column)
    splits = make_splits(table, cfg.n_s, cfg.n_tr, seed=cfg.seed)
    training = hit_matrix(ruleset, splits)
    fp_cfg = _fingerprint_config(cfg)
    fingerprint = compute_fingerprint(ruleset, fp_cfg)
    echo = dict(fp_cfg)
    if cfg.mode == "group":
        gc = GroupConfig(n_tr=cfg.n_tr, n_op=cfg.resolved_n_op, n_s=cfg.n_s, seed=cfg.seed)
        columns = training.training_columns
        echo["k"] = gc.k
        base = group_baseline(
            columns[: gc.k], columns[gc.k :],
            sigma_floor=cfg.sigma_floor, config=echo, fingerprint=fingerprint,
        )
    else:
        base = single_split_baseline(training, config=echo, fingerprint=fingerprint)
    bundle = BaselineBundle(base, training)
    _write_text(args.output, bundle.to_document())
    _print_intervals(bundle)
    return EXIT_OK


def _operational_splits(table: DataTable, n_s: int, count: int) -> list[Split]:
    from .data import InsufficientDataError

    if table.n_rows < n_s * count:
        raise InsufficientDataError(
            f"operational data has {table.n_rows} rows; "
            f"need {n_s * count} ({count} splits of {n_s})"
        )
    return [
        Split(table.take(np.arange(i * n_s, (i + 1) * n_s)), origin=OPERATIONAL, index=i)
        for i in range(count)
    ]


def cmd_detect(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    ruleset = parse_ruleset(Path(args.rules).read_text())
    bundle = BaselineBundle.from_document(Path(args.baseline).read_text())
    _check_bundle_fingerprint(bundle, ruleset)
    bcfg = bundle.baselines.config
    n_s = int(bcfg.get("n_s", cfg.n_s))
    mode = bcfg.get("mode", cfg.mode)
    table = _load_features(args.op_data, cfg.label_column)
    if mode == "group":
        n_op = int(bcfg.get("n_op", cfg.resolved_n_op))
        op_splits = _operational_splits(table, n_s, n_op)
        op_group = [hit_histogram(ruleset, s) for s in op_splits]
        report = detect_group(
            list(bundle.tr1_columns), op_group, bundle.baselines, bundle.training,
            metrics=cfg.metrics or ("rbi", "l1", "l2"),
        )
    else:
        op_split = _operational_splits(table, n_s, 1)[0]
        report = detect_split(
            bundle.training, hit_histogram(ruleset, op_split), bundle.baselines,
            metrics=cfg.metrics or ("wmi", "l1", "l2"),
        )
    if args.format == "csv":
        writer = csv.writer(sys.stdout)
        writer.writerow(("metric", "value", "base_min", "base_max", "flag", "verdict"))
        for name, m in report.per_metric.items():
            writer.writerow(
                (name, m.representative, m.baseline[0], m.baseline[1],
                 int(m.flag), report.verdict)
            )
    else:
        sys.stdout.write(report.to_document())
    return EXIT_OOD if report.is_ood else EXIT_OK


def _iter_stream_records(source: str) -> Iterator[dict[str, float]]:
    fh = sys.stdin if source == "-" else open(source, newline="")
    try:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if not header:
            raise DataError("stream source has no header row")
        for cells in reader:
            if not cells:
                continue
            record: dict[str, float] = {}
            for name, cell in zip(header, cells):
                try:
                    record[name] = float(cell)
                except ValueError:
                    record[name] = cell  # label-ish columns ride along untouched
            yield record
    finally:
        if fh is not sys.stdin:
            fh.close()


def cmd_stream(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    ruleset = parse_ruleset(Path(args.rules).read_text())
    bundle = BaselineBundle.from_document(Path(args.baseline).read_text())
    _check_bundle_fingerprint(bundle, ruleset)
    mode_name = bundle.baselines.config.get("mode", cfg.mode)
    stream_mode = "group" if mode_name == "group" else "single-split"
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        monitor = StreamMonitor(
            ruleset,
            bundle.baselines,
            bundle.training,
            mode=stream_mode,
            capacity=args.ns,
            detect_stride=cfg.stride,
            snapshot_stride=cfg.snapshot_stride,
            metrics=cfg.metrics,
            n_op=bundle.baselines.config.get("n_op"),
        )
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = sys.stdout if args.output in (None, "-") else open(args.output, "w", newline="")
    try:
        writer = csv.writer(out)
        writer.writerow(TickRecord.CSV_HEADER)
        for record in _iter_stream_records(args.source):
            tick = monitor.push(record)
            if tick is not None:
                writer.writerows(tick.to_csv_rows())
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


class _TableSource:
    """Serve rows of a fixed table as if it were a generator (with reuse)."""

    def __init__(self, table: DataTable):
        self.table = table

    def sample(self, n: int, rng: np.random.Generator) -> DataTable:
        replace = n > self.table.n_rows
        idx = rng.choice(self.table.n_rows, size=n, replace=replace)
        return self.table.take(idx)


def _parse_shift(spec: str | None) -> dict[int, float]:
    # "2:1.5,3:1.5" shifts features x2 and x3 by 1.5 (1-based positions).
    out: dict[int, float] = {}
    if not spec:
        return out
    for part in spec.split(","):
        pos, _, delta = part.partition(":")
        try:
            out[int(pos.strip()) - 1] = float(delta)
        except ValueError:
            raise DataError(f"bad --shift entry {part!r}; expected POS:DELTA") from None
    return out


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    if args.in_csv and args.op_csv:
        in_source = _TableSource(DataTable.from_csv(args.in_csv, label_column=cfg.label_column))
        ood_source = _TableSource(_load_features(args.op_csv, cfg.label_column))
        scenario = f"csv:{args.in_csv}|{args.op_csv}"
    else:
        kind = args.synthetic or "gaussian"
        base_source = make_source(kind)
        shift = _parse_shift(args.shift)
        if not shift:
            raise DataError("synthetic eval needs --shift POS:DELTA[,POS:DELTA...]")
        in_source = base_source
        ood_source = base_source.shifted(shift)
        scenario = f"synthetic:{kind}:shift={args.shift}"
    summary = run_eval(in_source, ood_source, cfg, scenario=scenario)
    if args.format == "csv":
        lines = ["key,value"]
        lines += [f"fpr,{summary.fpr}", f"fnr,{summary.fnr}",
                  f"repetitions,{summary.repetitions}", f"mode,{summary.mode}"]
        lines += [f"fp_rate_{k},{v}" for k, v in summary.per_metric_fp_rates.items()]
        lines += [f"detect_rate_{k},{v}" for k, v in summary.per_metric_detect_rates.items()]
        _write_text(args.output, "\n".join(lines) + "\n")
    else:
        _write_text(args.output, summary.to_document())
    if args.output not in (None, "-"):
        print(f"FPR {summary.fpr:.4f}  FNR {summary.fnr:.4f}  ({summary.repetitions} repetitions)")
    return EXIT_OK


def cmd_featurize(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    table = _load_features(args.data, cfg.label_column)
    names = args.columns.split(",") if args.columns else list(table.columns)
    for name in names:
        if name not in table.column_index:
            raise DataError(f"column {name!r} not in {list(table.columns)}")
    window = args.window
    accs = {name: MomentAccumulator(capacity=window) for name in names}
    out = sys.stdout if args.output in (None, "-") else open(args.output, "w", newline="")
    try:
        writer = csv.writer(out)
        header = ["sample_index"]
        for name in names:
            header += [f"{name}_mean", f"{name}_variance", f"{name}_skewness", f"{name}_kurtosis"]
        writer.writerow(header)
        for i in range(table.n_rows):
            row_out = [i]
            ready = True
            for name in names:
                acc = accs[name]
                acc.push(float(table.X[i, table.column_index[name]]))
                if acc.count < window:
                    ready = False
            if ready:
                for name in names:
                    row_out += list(accs[name].query())
                writer.writerow(row_out)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rulewatch",
        description="Rule-hit histogram monitoring: baselines and out-of-distribution detection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("induce", help="induce a ruleset from labeled CSV data")
    p.add_argument("data", help="training CSV with a label column")
    p.add_argument("-o", "--output", default=None, help="rules file (default stdout)")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_induce)

    p = sub.add_parser("baseline", help="build training baselines from data + rules")
    p.add_argument("data", help="training CSV")
    p.add_argument("--rules", required=True)
    p.add_argument("-o", "--output", default="baseline.json")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_baseline)

    p = sub.add_parser("detect", help="score operational data against a baseline")
    p.add_argument("op_data", help="operational CSV")
    p.add_argument("--rules", required=True)
    p.add_argument("--baseline", required=True)
    p.add_argument("--format", choices=("json-document", "csv"), default="json-document")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_detect)

    p = sub.add_parser("stream", help="incremental detection over a sample stream")
    p.add_argument("source", help="CSV file or '-' for stdin")
    p.add_argument("--rules", required=True)
    p.add_argument("--baseline", required=True)
    p.add_argument("-o", "--output", default=None, help="tick CSV (default stdout)")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_stream)

    p = sub.add_parser("eval", help="measure FPR/FNR over repeated runs")
    p.add_argument("--in-csv", default=None, help="in-distribution CSV (labeled)")
    p.add_argument("--op-csv", default=None, help="candidate out-of-distribution CSV")
    p.add_argument("--synthetic", choices=("gaussian", "rule-aligned"), default=None)
    p.add_argument("--shift", default=None, help="feature shifts POS:DELTA[,POS:DELTA...]")
    p.add_argument("--format", choices=("json-document", "csv"), default="json-document")
    p.add_argument("-o", "--output", default=None, help="summary (default stdout)")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("featurize", help="rolling moment features over CSV columns")
    p.add_argument("data", help="input CSV")
    p.add_argument("--window", type=int, required=True)
    p.add_argument("--columns", default=None, help="comma list (default all features)")
    p.add_argument("-o", "--output", default=None)
    _add_config_flags(p)
    p.set_defaults(fn=cmd_featurize)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except FingerprintMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FINGERPRINT
    except (DataError, RuleError, DetectionError, InducerError, MetricError,
            StreamStateError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
