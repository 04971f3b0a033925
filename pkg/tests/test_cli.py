import csv
import io
import json
import subprocess
import sys

import pytest

from outerloop import cli, runner
from outerloop.runner import CSV_COLUMNS, ConfigError, RunConfig, expand_matrix

RECORD_KEYS = {"seed", "iter", "x", "y", "best", "acq"}


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def parse_jsonl(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def check_record(rec):
    assert RECORD_KEYS <= set(rec)
    assert isinstance(rec["seed"], int) and isinstance(rec["iter"], int)
    assert all(isinstance(v, float) for v in rec["x"] + rec["y"])
    assert isinstance(rec["best"], float)
    assert rec["acq"] is None or isinstance(rec["acq"], float)


@pytest.mark.parametrize("backend", ["gp", "blr"])
def test_run_emits_one_record_per_iteration(capsys, backend):
    code, out, _ = run_cli(capsys, "run", "--task", "branin", "--method", "bo", "--backend", backend,
                           "--acquisition", "ei", "--iters", "20", "--seed", "7", "--out", "-")
    assert code == 0
    lines = parse_jsonl(out)
    records, summary = lines[:-1], lines[-1]
    assert len(records) == 20
    for k, rec in enumerate(records, start=1):
        check_record(rec)
        assert rec["iter"] == k and rec["seed"] == 7
    bests = [r["best"] for r in records]
    assert bests == sorted(bests, reverse=True)
    assert summary["summary"]["runs"][0]["evaluations"] == 25


def test_repeated_seeds_and_random_acquisition(capsys):
    code, out, _ = run_cli(capsys, "run", "--task", "quadratic", "--acquisition", "random", "--iters", "3",
                           "--seed", "1", "--seed", "2", "--out", "-")
    assert code == 0
    records = parse_jsonl(out)[:-1]
    assert [r["seed"] for r in records] == [1, 1, 1, 2, 2, 2]
    assert all(r["acq"] is None for r in records)


def test_seir_bq_summary(capsys):
    code, out, _ = run_cli(capsys, "run", "--task", "seir-peak", "--method", "bq", "--iters", "15", "--seed", "1",
                           "--out", "-")
    assert code == 0
    lines = parse_jsonl(out)
    summary = lines[-1]["summary"]["runs"][0]
    for key in ("height", "time"):
        assert summary[key]["std"] > 0
    assert {r["target"] for r in lines[:-1]} == {"height", "time"}
    assert len(lines) == 31


def test_bq_with_blr_is_rejected_before_any_evaluation(capsys, monkeypatch):
    def boom(*a, **k):
        raise AssertionError("evaluated despite a capability mismatch")

    monkeypatch.setattr(runner, "run_single", boom)
    code, out, err = run_cli(capsys, "run", "--task", "forrester", "--method", "bq", "--backend", "blr",
                             "--seed", "0", "--out", "-")
    assert code == 3 and out == "" and "capability" in err


@pytest.mark.parametrize("argv", [
    ["run", "--task", "nope"],
    ["run", "--task", "branin", "--method", "bo", "--acquisition", "ivr"],
    ["run", "--task", "branin", "--iters", "-1"],
    ["run", "--task", "branin", "--backend", "forest"],
    ["run", "--task", "branin", "--method", "sorcery"],
    ["run", "--task", "branin", "--iters", "three"],
    ["run", "--task", "branin", "--method", "ed", "--task", "seir-peak"],
    ["frobnicate"],
    ["sensitivity", "--task", "bogus"],
    ["sensitivity", "--task", "ishigami", "--n-base", "1"],
    ["benchmark", "--task", "branin", "--seed", "0", "--seed", "1"],
    ["benchmark", "--task", "branin", "--acquisition", "ei", "--acquisition", "random", "--seed", "0"],
])
def test_config_errors_exit_2(capsys, argv):
    code, out, err = run_cli(capsys, *argv, "--out", "-") if argv != ["frobnicate"] else run_cli(capsys, *argv)
    assert code == 2
    assert out == ""


def test_evaluation_failure_exits_4(capsys, monkeypatch):
    from outerloop import tasks

    catalog = tasks.standard_objectives()
    bad = tasks.Objective("bad", lambda X: X[:, 0] / 0.0 * 0.0, ((0.0, 1.0),))
    monkeypatch.setattr(runner, "standard_objectives", lambda: {**catalog, "bad": bad})
    monkeypatch.setattr(runner, "task_names", lambda: sorted({**catalog, "bad": bad}) + ["seir-peak"])
    with pytest.warns(RuntimeWarning):
        code, out, err = run_cli(capsys, "run", "--task", "bad", "--iters", "2", "--seed", "0", "--out", "-")
    assert code == 4 and "evaluation failure" in err


def test_degenerate_sensitivity_exits_4(capsys, monkeypatch):
    from outerloop import tasks

    catalog = tasks.standard_objectives()
    flat = tasks.Objective("flat", lambda X: 0.0 * X[:, 0] + 1.0, ((0.0, 1.0), (0.0, 1.0)))
    monkeypatch.setattr(runner, "standard_objectives", lambda: {**catalog, "flat": flat})
    monkeypatch.setattr(runner, "task_names", lambda: sorted({**catalog, "flat": flat}))
    code, _, err = run_cli(capsys, "sensitivity", "--task", "flat", "--n-base", "64", "--out", "-")
    assert code == 4


def test_sensitivity_report(capsys):
    code, out, _ = run_cli(capsys, "sensitivity", "--task", "first-input", "--n-base", "4096", "--seed", "0",
                           "--out", "-")
    assert code == 0
    report = json.loads(out)
    assert report["total"][1] <= 0.05 and report["first_order"][1] <= 0.05
    for key in ("first_order", "total", "first_order_err", "total_err"):
        assert len(report[key]) == 2
    assert report["sample_count"] == 4096 * 4


def test_benchmark_cross_product(capsys):
    code, out, _ = run_cli(capsys, "benchmark", "--task", "quadratic", "--acquisition", "ei", "--acquisition",
                           "random", "--iters", "3", "--seed", "0", "--seed", "1", "--seed", "2", "--out", "-")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 6
    assert sorted((r["acquisition"], r["seed"]) for r in rows) == [(a, s) for a in ("ei", "random")
                                                                   for s in "012"]
    for r in rows:
        float(r["best"]), float(r["wall_ms"]), int(r["iters"])


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"task": "quadratic", "method": "bo", "iters": 2, "seed": [3],
                               "seir": {"population": 100}}))
    code, out, _ = run_cli(capsys, "run", "--config", str(cfg), "--iters", "4", "--out", "-")
    assert code == 0
    records = parse_jsonl(out)[:-1]
    assert len(records) == 4 and records[0]["seed"] == 3
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"tsak": "branin"}))
    assert run_cli(capsys, "run", "--config", str(bad))[0] == 2
    bad.write_text("{not json")
    assert run_cli(capsys, "run", "--config", str(bad))[0] == 2


def test_default_output_name_from_config_hash(capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    argv = ["run", "--task", "quadratic", "--iters", "2", "--seed", "0"]
    assert run_cli(capsys, *argv)[0] == 0
    files = list((tmp_path / "results").iterdir())
    assert len(files) == 1 and files[0].suffix == ".jsonl"
    assert RunConfig(task="quadratic", iters=2, seeds=(0,)).digest() in files[0].name
    first = files[0].read_bytes()
    assert run_cli(capsys, *argv)[0] == 0
    assert files[0].read_bytes() == first
    run_cli(capsys, "run", "--task", "quadratic", "--iters", "2", "--seed", "1")
    assert len(list((tmp_path / "results").iterdir())) == 2


def test_expand_matrix():
    configs = expand_matrix({"task": ["branin", "quadratic"], "acquisition": ["ei", "pi"], "seed": [0, 1]})
    assert len(configs) == 4
    assert all(c.seeds == (0, 1) for c in configs)
    with pytest.raises(ConfigError):
        expand_matrix({"task": "branin", "colour": "red"})


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "outerloop", "run", "--task", "nope"], capture_output=True,
                          text=True)
    assert proc.returncode == 2
