"""End-to-end tests for the experiment runner"""

import json

import pytest

from src.lab.config import parse_config
from src.lab.errors import ConfigError
from src.lab.runner import EXIT_OK, EXIT_VIOLATIONS, run_checks, run_dimension_sets, run_experiment, write_report

LADDER = [2.0 ** -k for k in range(1, 9)]


def _zero_config(**overrides):
    data = {
        "name": "still",
        "seed": 11,
        "process": {"family": "zero", "dim": 2},
        "H": 0.5,
        "sets": [{"kind": "cell", "level": 4, "index": 3, "label": "cell"}],
        "ladder": LADDER,
        "n_paths": 3,
        "n_steps": 1024,
    }
    data.update(overrides)
    return parse_config(data)


def _brownian_line_config(seed=2024):
    return parse_config({
        "name": "line",
        "seed": seed,
        "process": {"family": "brownian", "dim": 1},
        "sets": [{"kind": "interval", "label": "unit"}],
        "ladder": LADDER,
        "n_paths": 8,
        "n_steps": 2 ** 16,
    })


class TestDimensionSets:
    @pytest.mark.slow
    def test_brownian_range_is_one_dimensional(self):
        report = run_dimension_sets(_brownian_line_config(), threads=2)
        (row,) = report.rows
        assert row.predicted == pytest.approx(1.0)
        assert row.passed
        assert abs(row.measured - 1.0) <= 0.15
        assert row.ci_lo <= row.measured <= row.ci_hi
        assert "regime:Hd<1" in row.flags
        assert len(report.curves[row.label]) == 8

    def test_constant_process_on_a_single_cell(self):
        report = run_dimension_sets(_zero_config())
        (row,) = report.rows
        assert row.label == "00-cell"
        assert row.predicted == 0.0
        assert row.measured == 0.0
        assert row.passed
        assert "saturated" in row.flags
        assert report.exit_code == EXIT_OK

    def test_constant_process_fails_the_interval_prediction(self):
        report = run_dimension_sets(_zero_config(sets=[{"kind": "interval", "label": "unit"}]))
        (row,) = report.rows
        assert row.predicted == 2.0
        assert row.passed is False
        assert report.exit_code == EXIT_VIOLATIONS

    def test_empty_set_is_reported_without_a_verdict(self):
        report = run_dimension_sets(_zero_config(sets=[{"kind": "cells", "level": 3, "cells": []}]))
        (row,) = report.rows
        assert row.passed is None
        assert "empty-set" in row.flags

    @pytest.mark.slow
    def test_runs_are_reproducible(self):
        first = run_dimension_sets(_brownian_line_config(seed=5), threads=1)
        second = run_dimension_sets(_brownian_line_config(seed=5), threads=3)
        assert first.rows[0].per_path == second.rows[0].per_path

    def test_unresolved_cell_is_a_config_error(self):
        with pytest.raises(ConfigError) as info:
            run_dimension_sets(_zero_config(sets=[{"kind": "cell", "level": 12}]))
        assert info.value.location == "sets[0]"

    def test_short_ladder_is_a_config_error(self):
        with pytest.raises(ConfigError) as info:
            run_dimension_sets(_zero_config(ladder=[0.5, 0.25, 0.125]))
        assert info.value.location == "ladder"

    def test_missing_index(self):
        config = parse_config({"seed": 1, "process": {"family": "zero"}, "sets": [{"kind": "interval"}],
                               "ladder": LADDER, "n_steps": 256})
        with pytest.raises(ConfigError) as info:
            run_dimension_sets(config)
        assert info.value.location == "H"


class TestChecks:
    def test_no_checks(self):
        assert run_checks(_zero_config(), threads=1) == []

    def test_unknown_parameter_is_located(self):
        config = parse_config({"seed": 1, "process": {"family": "brownian"}, "checks": [
            {"check": "growth", "alpha": 2.0, "zeta_prime": 0.1, "K5": 2.0, "bogus": 1}]})
        with pytest.raises(ConfigError) as info:
            run_checks(config, threads=1)
        assert info.value.location == "checks[0].bogus"

    def test_growth_check(self):
        config = parse_config({"seed": 1, "process": {"family": "brownian"}, "checks": [
            {"check": "growth", "alpha": 2.0, "zeta_prime": 0.1, "K5": 2.0}]})
        (report,) = run_checks(config, threads=1)
        assert report.check == "growth"
        assert report.passed

    def test_moment_check_on_a_stable_like_process(self):
        config = parse_config({"seed": 1, "process": {"family": "stable_like", "alpha": 1.5}, "checks": [
            {"check": "moment", "p": 0.8, "T": [0.25, 1.0], "n_mc": 200, "n_steps": 16}]})
        (report,) = run_checks(config, threads=1)
        assert report.check == "moment"
        assert report.passed

    def test_moment_check_needs_a_stable_like_process(self):
        config = parse_config({"seed": 1, "process": {"family": "brownian"}, "checks": [
            {"check": "moment", "p": 0.8}]})
        with pytest.raises(ConfigError) as info:
            run_checks(config, threads=1)
        assert info.value.location == "checks[0].process"

    def test_preconditions_become_config_errors(self):
        config = parse_config({"seed": 1, "process": {"family": "brownian"}, "checks": [
            {"check": "a1", "gamma": [0.7], "n_mc": 200}]})
        with pytest.raises(ConfigError) as info:
            run_checks(config, threads=1)
        assert info.value.location == "checks[0]"

    def test_block_process_overrides_the_top_level_one(self):
        config = parse_config({"seed": 1, "process": {"family": "brownian"}, "checks": [
            {"check": "growth", "alpha": 2.0, "zeta_prime": 0.1, "K5": 2.0,
             "process": {"family": "brownian", "dim": 2}}]})
        (report,) = run_checks(config, threads=1)
        assert report.spec["dim"] == 2

    def test_ottaviani_pairs_are_merged(self):
        config = parse_config({"seed": 1, "process": {"family": "brownian"}, "checks": [
            {"check": "ottaviani", "pairs": [[0.1, 0.5], [0.25, 1.0]], "n_mc": 1000, "n_steps": 32}]})
        (report,) = run_checks(config, threads=1)
        assert len(report.grid) == 2
        assert report.passed


class TestExperiment:
    def test_artifacts(self, tmp_path):
        config = _zero_config(
            checks=[{"check": "growth", "alpha": 2.0, "zeta_prime": 0.1, "K5": 2.0, "process": {"family": "brownian"}}],
            covering={"mode": "image", "ns": [2, 3], "n_paths": 2, "n_steps": 256})
        report = run_experiment(config, threads=1, out_dir=tmp_path)
        assert report.passed
        assert [row.max_count for row in report.covering] == [1, 1]
        for name in ("report.json", "manifest.json", "covering.csv", "curves/00-cell.csv", "checks/00-growth.csv"):
            assert (tmp_path / name).is_file(), name
        payload = json.loads((tmp_path / "report.json").read_text())
        assert payload["passed"] is True
        assert payload["seed"] == 11
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert "report.json" in manifest["files"]
        assert manifest["config_sha256"] == payload["config_sha256"]

    def test_path_dumps_are_listed(self, tmp_path):
        config = _zero_config(dump_paths=True, n_paths=2)
        run_experiment(config, threads=1, out_dir=tmp_path)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert "paths/path_00000.bin" in manifest["files"]
        assert "paths/path_00001.bin" in manifest["files"]

    def test_write_report_returns_every_file(self, tmp_path):
        report = run_dimension_sets(_zero_config())
        written = write_report(report, tmp_path, {"seed": 11})
        names = {p.name for p in written}
        assert {"report.json", "00-cell.csv", "manifest.json"} <= names
