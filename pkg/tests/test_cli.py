import csv
import json

import numpy as np
import pytest

from rulewatch.cli import main
from rulewatch.synth import RuleAlignedSource


@pytest.fixture
def source():
    return RuleAlignedSource(n_features=3)


@pytest.fixture
def workdir(tmp_path, source):
    rng = np.random.default_rng(99)
    source.sample(4000, rng).to_csv(tmp_path / "train.csv")
    source.sample(400, rng).to_csv(tmp_path / "op_in.csv")
    source.shifted({1: 0.8, 2: 0.8}).sample(400, rng).to_csv(tmp_path / "op_out.csv")
    (tmp_path / "rules.txt").write_text(
        "if x1 <= 0.5 and x2 <= 0.5 then 1\n"
        "if x1 <= 0.5 and x2 > 0.5 then 0\n"
        "if x1 > 0.5 then 0\n"
        "if x3 > 0.25 then 0\n"
    )
    return tmp_path


def _baseline_args(workdir, out="base.json", extra=()):
    return [
        "baseline", str(workdir / "train.csv"),
        "--rules", str(workdir / "rules.txt"),
        "-o", str(workdir / out),
        "--ns", "250", "--ntr", "12", "--seed", "5",
        *extra,
    ]


def test_induce_roundtrip(workdir, capsys):
    rc = main([
        "induce", str(workdir / "train.csv"),
        "-o", str(workdir / "induced.txt"),
        "--max-depth", "2", "--min-leaf", "20",
    ])
    assert rc == 0
    from rulewatch import parse_ruleset, format_ruleset

    rs = parse_ruleset((workdir / "induced.txt").read_text())
    assert rs.n_rules >= 2
    assert parse_ruleset(format_ruleset(rs)) == rs


def test_induce_missing_label_column(workdir):
    rc = main([
        "induce", str(workdir / "train.csv"),
        "--label-column", "nope",
    ])
    assert rc == 1


def test_baseline_writes_bundle_and_prints_table(workdir, capsys):
    rc = main(_baseline_args(workdir))
    assert rc == 0
    out = capsys.readouterr().out
    assert "wmi" in out and "l1" in out and "l2" in out
    doc = json.loads((workdir / "base.json").read_text())
    assert doc["intervals"]["wmi"] is not None
    assert doc["intervals"]["rbi"] is None
    assert len(doc["training_hits"]["columns"]) == 12


def test_baseline_determinism_byte_identical(workdir):
    assert main(_baseline_args(workdir, out="b1.json")) == 0
    assert main(_baseline_args(workdir, out="b2.json")) == 0
    assert (workdir / "b1.json").read_bytes() == (workdir / "b2.json").read_bytes()


def test_baseline_group_mode_and_k(workdir):
    rc = main(_baseline_args(workdir, out="group.json", extra=("--mode", "group", "--nop", "4")))
    assert rc == 0
    doc = json.loads((workdir / "group.json").read_text())
    assert doc["config"]["k"] == 12 - 4 - 1
    assert doc["intervals"]["rbi"] is not None


def test_baseline_group_mode_rejects_nop_1(workdir):
    rc = main(_baseline_args(workdir, out="bad.json", extra=("--mode", "group", "--nop", "1")))
    assert rc == 1


def test_baseline_insufficient_data(workdir):
    rc = main([
        "baseline", str(workdir / "op_in.csv"),
        "--rules", str(workdir / "rules.txt"),
        "-o", str(workdir / "never.json"),
        "--ns", "200", "--ntr", "10",
    ])
    assert rc == 1


def test_detect_in_distribution_exit_0(workdir, capsys):
    main(_baseline_args(workdir))
    capsys.readouterr()
    rc = main([
        "detect", str(workdir / "op_in.csv"),
        "--rules", str(workdir / "rules.txt"),
        "--baseline", str(workdir / "base.json"),
    ])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["verdict"] == "in-distribution"


def test_detect_shifted_exit_3(workdir, capsys):
    main(_baseline_args(workdir))
    capsys.readouterr()
    rc = main([
        "detect", str(workdir / "op_out.csv"),
        "--rules", str(workdir / "rules.txt"),
        "--baseline", str(workdir / "base.json"),
    ])
    assert rc == 3
    doc = json.loads(capsys.readouterr().out)
    assert doc["verdict"] == "OoD"
    assert any(m["flag"] for m in doc["metrics"].values())


def test_detect_fingerprint_mismatch_exit_2(workdir, capsys):
    main(_baseline_args(workdir))
    (workdir / "other_rules.txt").write_text("if x1 <= 0.9 then 1\n")
    rc = main([
        "detect", str(workdir / "op_out.csv"),
        "--rules", str(workdir / "other_rules.txt"),
        "--baseline", str(workdir / "base.json"),
    ])
    assert rc == 2


def test_detect_csv_format(workdir, capsys):
    main(_baseline_args(workdir))
    capsys.readouterr()
    rc = main([
        "detect", str(workdir / "op_in.csv"),
        "--rules", str(workdir / "rules.txt"),
        "--baseline", str(workdir / "base.json"),
        "--format", "csv",
    ])
    assert rc == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["metric", "value", "base_min", "base_max", "flag", "verdict"]
    assert len(rows) == 4


def test_stream_emits_tick_csv(workdir, tmp_path):
    main(_baseline_args(workdir))
    rc = main([
        "stream", str(workdir / "op_in.csv"),
        "--rules", str(workdir / "rules.txt"),
        "--baseline", str(workdir / "base.json"),
        "-o", str(tmp_path / "ticks.csv"),
    ])
    assert rc == 0
    rows = list(csv.reader((tmp_path / "ticks.csv").read_text().splitlines()))
    assert rows[0] == list(
        ("sample_index", "metric", "value", "base_min", "base_max", "flag", "verdict")
    )
    # 400 rows, window 250 -> 151 ticks x 3 metrics
    assert len(rows) - 1 == 151 * 3


def test_stream_drift_raises_flags_at_finite_tick(workdir, tmp_path):
    main(_baseline_args(workdir))
    rc = main([
        "stream", str(workdir / "op_out.csv"),
        "--rules", str(workdir / "rules.txt"),
        "--baseline", str(workdir / "base.json"),
        "-o", str(tmp_path / "ticks.csv"),
    ])
    assert rc == 0
    rows = list(csv.reader((tmp_path / "ticks.csv").read_text().splitlines()))[1:]
    flagged_ticks = [int(r[0]) for r in rows if r[5] == "1"]
    assert flagged_ticks  # shifted stream must trip a flag at some finite tick


def test_stream_window_override_warns(workdir, tmp_path, capsys):
    main(_baseline_args(workdir))
    capsys.readouterr()
    rc = main([
        "stream", str(workdir / "op_in.csv"),
        "--rules", str(workdir / "rules.txt"),
        "--baseline", str(workdir / "base.json"),
        "--ns", "100",
        "-o", str(tmp_path / "ticks.csv"),
    ])
    assert rc == 0
    assert "differs from the baseline" in capsys.readouterr().err


def test_config_file_with_flag_override(workdir, capsys):
    cfg = workdir / "run.cfg"
    cfg.write_text("n_s = 100\nn_tr = 10\nseed = 5\n# comment\n")
    rc = main([
        "baseline", str(workdir / "train.csv"),
        "--rules", str(workdir / "rules.txt"),
        "-o", str(workdir / "cfged.json"),
        "--config", str(cfg),
        "--ns", "150",  # flag overrides file
    ])
    assert rc == 0
    doc = json.loads((workdir / "cfged.json").read_text())
    assert doc["config"]["n_s"] == 150
    assert doc["config"]["n_tr"] == 10


def test_unknown_config_key_rejected(workdir):
    cfg = workdir / "bad.cfg"
    cfg.write_text("bogus = 1\n")
    rc = main(_baseline_args(workdir, extra=("--config", str(cfg))))
    assert rc == 1


def test_eval_synthetic_smoke(capsys):
    rc = main([
        "eval", "--synthetic", "rule-aligned", "--shift", "1:0.8,2:0.8",
        "--ns", "150", "--ntr", "6", "--repetitions", "3",
        "--max-depth", "2", "--min-leaf", "10", "--seed", "3",
    ])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["repetitions"] == 3
    assert doc["fnr"] == 0.0
    assert 0.0 <= doc["fpr"] <= 1.0


def test_eval_csv_pair_smoke(tmp_path, capsys):
    rng = np.random.default_rng(17)
    src = RuleAlignedSource(n_features=3)
    src.sample(3000, rng).to_csv(tmp_path / "in.csv")
    src.shifted({1: 0.8}).sample(1500, rng).to_csv(tmp_path / "out.csv")
    rc = main([
        "eval", "--in-csv", str(tmp_path / "in.csv"), "--op-csv", str(tmp_path / "out.csv"),
        "--ns", "100", "--ntr", "5", "--repetitions", "2",
        "--max-depth", "2", "--min-leaf", "10", "--seed", "3",
    ])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["repetitions"] == 2


def test_featurize_rolling_moments(workdir, tmp_path, capsys):
    rc = main([
        "featurize", str(workdir / "op_in.csv"),
        "--window", "50", "--columns", "x1,x2",
        "-o", str(tmp_path / "features.csv"),
    ])
    assert rc == 0
    rows = list(csv.reader((tmp_path / "features.csv").read_text().splitlines()))
    assert rows[0][:5] == ["sample_index", "x1_mean", "x1_variance", "x1_skewness", "x1_kurtosis"]
    assert len(rows) - 1 == 400 - 50 + 1
    first = [float(v) for v in rows[1]]
    assert 0.3 < first[1] < 0.7  # uniform [0,1] mean


def test_featurize_unknown_column(workdir):
    rc = main([
        "featurize", str(workdir / "op_in.csv"),
        "--window", "10", "--columns", "zz",
    ])
    assert rc == 1
