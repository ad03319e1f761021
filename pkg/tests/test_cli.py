import csv
import json
import subprocess
import sys

import pytest

from infotransfer.cli import DEFAULTS, main, parse_duration, parse_widths


def run(*argv):
    try:
        return main([str(a) for a in argv])
    except SystemExit as exc:  # argparse usage errors
        return exc.code


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim") / "nested" / "run"
    assert run("simulate", "--n", 6, "--mean-degree", 2, "--gamma-over-mu", 2, "--days", 60, "--seed", 7,
               "--cascade-labels", "--out", out) == 0
    return out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_parse_duration_units():
    assert parse_duration("10min") == 600
    assert parse_duration("2h") == 7200
    assert parse_duration("1.5d") == 1.5 * 86400
    assert parse_duration("30") == 30
    assert parse_widths("1s,1h,2h") == [1, 3600, 7200]


def test_simulate_writes_files_and_manifest(sim_dir):
    assert {p.name for p in sim_dir.iterdir()} >= {"events.csv", "truth.csv", "manifest.json"}
    manifest = json.loads((sim_dir / "manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert set(manifest["config"]) == set(DEFAULTS["simulate"])
    assert manifest["config"]["seed"] == 7 and manifest["config"]["prune_days"] == 7.0
    assert manifest["edges"] == len(read_csv(sim_dir / "truth.csv"))
    rows = read_csv(sim_dir / "events.csv")
    assert len(rows) == manifest["events"] and all(r["item_id"] for r in rows)


def test_simulate_rerun_is_byte_identical(sim_dir, tmp_path):
    out = tmp_path / "again"
    assert run("simulate", "--n", 6, "--mean-degree", 2, "--gamma-over-mu", 2, "--days", 60, "--seed", 7,
               "--cascade-labels", "--out", out) == 0
    for name in ("events.csv", "truth.csv"):
        assert (out / name).read_bytes() == (sim_dir / name).read_bytes()
    a = json.loads((out / "manifest.json").read_text())
    b = json.loads((sim_dir / "manifest.json").read_text())
    a["config"].pop("out"), b["config"].pop("out")
    assert a == b


def test_negative_days_is_config_error(tmp_path, capsys):
    assert run("simulate", "--days", -5, "--out", tmp_path) == 2
    assert "--days" in capsys.readouterr().err


def test_missing_out_is_config_error():
    assert run("simulate", "--days", 5) == 2


def test_seed_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("TE_NET_SEED", "11")
    assert run("simulate", "--n", 3, "--mean-degree", 1, "--days", 5, "--out", tmp_path / "a") == 0
    assert json.loads((tmp_path / "a" / "manifest.json").read_text())["config"]["seed"] == 11
    assert run("simulate", "--n", 3, "--mean-degree", 1, "--days", 5, "--seed", 11, "--out", tmp_path / "b") == 0
    assert (tmp_path / "a" / "events.csv").read_bytes() == (tmp_path / "b" / "events.csv").read_bytes()


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 4, "mean-degree": 1, "days": 3, "seed": 5}))
    # "days" is the flag name; the config key is the option's own name
    assert run("simulate", "--config", cfg, "--out", tmp_path / "x") == 2
    cfg.write_text(json.dumps({"n": 4, "mean_degree": 1, "horizon_days": 3, "seed": 5}))
    assert run("simulate", "--config", cfg, "--seed", 6, "--out", tmp_path / "x") == 0
    resolved = json.loads((tmp_path / "x" / "manifest.json").read_text())["config"]
    assert (resolved["N"], resolved["mean_degree"], resolved["horizon_days"], resolved["seed"]) == (4, 1, 3, 6)


def test_te_preset_equals_explicit_widths(sim_dir, tmp_path):
    common = ["te", "--events", sim_dir / "events.csv", "--pair", "0", "1", "--pair", "1", "0", "--stride", "60"]
    assert run(*common, "--preset", "synthetic", "--out", tmp_path / "p") == 0
    assert run(*common, "--widths", "1s,1h,2h", "--out", tmp_path / "w") == 0
    assert (tmp_path / "p" / "te.csv").read_bytes() == (tmp_path / "w" / "te.csv").read_bytes()
    rows = read_csv(tmp_path / "p" / "te.csv")
    assert [(r["source"], r["target"]) for r in rows] == [("0", "1"), ("1", "0")]
    assert json.loads((tmp_path / "p" / "te.json").read_text())[0]["te_raw"] == float(rows[0]["te_raw"])


@pytest.mark.parametrize("name,expected", [
    ("digg", {"kind": "uniform", "now_width": 14400.0, "history_widths": [14400.0] * 7, "k": 7, "l": 7}),
    ("twitter", {"now_width": 1.0, "history_widths": [600.0, 7200.0, 86400.0], "k": 3, "l": 3}),
])
def test_te_presets_recorded_in_manifest(sim_dir, tmp_path, name, expected):
    assert run("te", "--events", sim_dir / "events.csv", "--pair", "0", "1", "--preset", name,
               "--out", tmp_path) == 0
    scheme = json.loads((tmp_path / "manifest.json").read_text())["scheme"]
    for key, value in expected.items():
        assert scheme[key] == value


def test_te_conflicting_scheme_flags(sim_dir, tmp_path):
    assert run("te", "--events", sim_dir / "events.csv", "--pair", "0", "1", "--preset", "digg",
               "--widths", "1s,1h", "--out", tmp_path) == 2


def test_te_unknown_node(sim_dir, tmp_path):
    assert run("te", "--events", sim_dir / "events.csv", "--pair", "0", "nobody", "--out", tmp_path) == 2


@pytest.fixture(scope="module")
def infer_dir(sim_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("infer")
    assert run("infer", "--events", sim_dir / "events.csv", "--stride", "60", "--min-events", 0,
               "--f-measure", "--truth", sim_dir / "truth.csv", "--jobs", 1, "--out", out) == 0
    return out


def test_infer_outputs(infer_dir, sim_dir):
    scores = read_csv(infer_dir / "scores.csv")
    assert len(scores) == 6 * 5
    summary = json.loads((infer_dir / "summary.json").read_text())
    assert {"threshold", "edges", "outgoing_influence", "precision", "recall", "f1"} <= set(summary)
    edges = read_csv(infer_dir / "edges.csv")
    assert len(edges) == summary["edges"]
    assert all(float(e["te_corrected"]) > summary["threshold"] for e in edges)


def test_infer_jobs_do_not_change_results(infer_dir, sim_dir, tmp_path):
    assert run("infer", "--events", sim_dir / "events.csv", "--stride", "60", "--min-events", 0,
               "--f-measure", "--truth", sim_dir / "truth.csv", "--jobs", 2, "--out", tmp_path) == 0
    for name in ("scores.csv", "edges.csv", "summary.json"):
        assert (tmp_path / name).read_bytes() == (infer_dir / name).read_bytes()


def test_infer_f_measure_needs_truth(sim_dir, tmp_path):
    assert run("infer", "--events", sim_dir / "events.csv", "--f-measure", "--out", tmp_path) == 2


def test_infer_large_run_guard(tmp_path):
    events = tmp_path / "ev.csv"
    with open(events, "w") as fh:
        fh.write("node_id,timestamp\n")
        for v in range(50):
            for t in range(10):
                fh.write(f"n{v},{1000 * t + v + 1}\n")
    assert run("infer", "--events", events, "--out", tmp_path / "o") == 2
    assert not (tmp_path / "o" / "scores.csv").exists()


def test_eval_and_validate(infer_dir, sim_dir, tmp_path):
    assert run("eval", "--scores", infer_dir / "scores.csv", "--truth", sim_dir / "truth.csv", "--f-measure",
               "--events", sim_dir / "events.csv", "--out", tmp_path / "e") == 0
    metrics = json.loads((tmp_path / "e" / "metrics.json").read_text())
    assert {"auc", "f1", "precision", "recall", "pearson_r"} <= set(metrics)
    assert metrics["auc"] == pytest.approx(metrics["auc_mann_whitney"], abs=1e-12)
    roc_rows = read_csv(tmp_path / "e" / "roc.csv")
    assert list(roc_rows[0]) == ["threshold", "fpr", "tpr"]
    assert (float(roc_rows[-1]["fpr"]), float(roc_rows[-1]["tpr"])) == (1.0, 1.0)

    assert run("validate", "--events", sim_dir / "events.csv", "--scores", infer_dir / "scores.csv",
               "--out", tmp_path / "v") == 0
    v = json.loads((tmp_path / "v" / "metrics.json").read_text())
    assert v["pearson_r"] == pytest.approx(metrics["pearson_r"])
    assert v["shuffles"] == 100
    rows = read_csv(tmp_path / "v" / "validation.csv")
    assert list(rows[0]) == ["source", "target", "cascade_count", "te_corrected"] and len(rows) == 30


def test_eval_without_truth_is_config_error(infer_dir, tmp_path):
    assert run("eval", "--scores", infer_dir / "scores.csv", "--f-measure", "--out", tmp_path) == 2


def test_runtime_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "ev.csv"
    bad.write_text("a,1\na,oops\n")
    assert run("te", "--events", bad, "--pair", "a", "a", "--out", tmp_path / "o") == 1
    assert "line 2" in capsys.readouterr().err


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "infotransfer", "simulate", "--days", "-1", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    proc = subprocess.run([sys.executable, "-m", "infotransfer", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
