"""Tests for the command-line entry point"""

import json

import numpy as np

from src.cli import main
from src.lab.runner import EXIT_CONFIG, EXIT_OK, EXIT_VIOLATIONS
from src.storage.path_store import load_path_dump


def _write(tmp_path, data, name="exp.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def _still(**overrides):
    data = {
        "name": "still",
        "seed": 4,
        "process": {"family": "zero", "dim": 2},
        "H": 0.5,
        "sets": [{"kind": "cell", "level": 3, "index": 1, "label": "cell"}],
        "ladder": [2.0 ** -k for k in range(1, 9)],
        "n_paths": 2,
        "n_steps": 256,
    }
    data.update(overrides)
    return data


def test_dim_writes_a_passing_report(tmp_path):
    out = tmp_path / "out"
    assert main(["--config", _write(tmp_path, _still()), "--out", str(out), "dim"]) == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert report["passed"] is True
    assert report["dimensions"][0]["label"] == "00-cell"


def test_failed_prediction_exits_with_violations(tmp_path):
    config = _write(tmp_path, _still(sets=[{"kind": "interval"}]))
    assert main(["--config", config, "--out", str(tmp_path / "out"), "dim"]) == EXIT_VIOLATIONS


def test_seed_override(tmp_path):
    out = tmp_path / "out"
    main(["--config", _write(tmp_path, _still()), "--seed", "99", "--out", str(out), "dim"])
    assert json.loads((out / "report.json").read_text())["seed"] == 99


def test_config_error_exit_code(tmp_path):
    config = _write(tmp_path, {"seed": 1, "process": {"family": "stable", "alpha": 2.5}})
    assert main(["--config", config, "--out", str(tmp_path / "out"), "dim"]) == EXIT_CONFIG


def test_missing_seed_is_a_config_error(tmp_path):
    assert main(["--out", str(tmp_path), "dim"]) == EXIT_CONFIG


def test_simulate_dumps_paths(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["--seed", "3", "--out", str(out), "simulate", "--process", '{"family": "brownian", "dim": 2}',
                 "--n-steps", "64", "--n-paths", "2"])
    assert code == EXIT_OK
    paths = load_path_dump(out / "paths.bin")
    assert len(paths) == 2
    assert paths[0].values.shape == (65, 2)
    summary = json.loads(capsys.readouterr().out)
    assert summary["n_paths"] == 2
    np.testing.assert_allclose(summary["endpoints"][1], paths[1].values[-1])


def test_check_filters_blocks(tmp_path):
    data = {"seed": 1, "process": {"family": "brownian"}, "checks": [
        {"check": "a1", "gamma": [0.3], "n_mc": 200, "t": [0.0625, 0.03125, 0.015625], "n_steps": 16},
        {"check": "growth", "alpha": 2.0, "zeta_prime": 0.1, "K5": 2.0},
    ]}
    out = tmp_path / "out"
    assert main(["--config", _write(tmp_path, data), "--out", str(out), "check", "--growth"]) == EXIT_OK
    assert (out / "checks" / "00-growth.csv").is_file()
    assert not list((out / "checks").glob("*-a1.csv"))


def test_cover_overrides_the_study(tmp_path, capsys):
    out = tmp_path / "out"
    config = _write(tmp_path, _still(sets=[]))
    assert main(["--config", config, "--out", str(out), "cover", "--ns", "2", "3"]) == EXIT_OK
    assert (out / "covering.csv").is_file()
    assert "covering n=3" in capsys.readouterr().out
