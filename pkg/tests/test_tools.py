"""Tests for the MCP tool functions"""

import asyncio

from src.tools.checks_tool import run_condition_checks_tool
from src.tools.experiment_tool import run_dimension_experiment_tool
from src.tools.simulation_tool import MAX_TOOL_STEPS, estimate_image_dimension_tool, simulate_process_path_tool

BROWNIAN = {"family": "brownian", "dim": 2}
GROWTH = {"check": "growth", "alpha": 2.0, "zeta_prime": 0.1, "K5": 2.0}


def test_simulate_process_path():
    result = asyncio.run(simulate_process_path_tool(BROWNIAN, seed=3, n_steps=64, n_paths=2))
    assert result.startswith("<process_path")
    assert 'n_paths="2"' in result
    assert result.count("<endpoint ") == 2


def test_simulation_is_capped():
    result = asyncio.run(simulate_process_path_tool(BROWNIAN, seed=3, n_steps=2 * MAX_TOOL_STEPS))
    assert '<process_path error="true">' in result
    assert "capped" in result


def test_simulation_rejects_unknown_family():
    result = asyncio.run(simulate_process_path_tool({"family": "fractional"}, seed=3))
    assert 'error="true"' in result
    assert "process.family" in result


def test_segment_dimension():
    points = [[i / 4096.0] for i in range(4096)]
    result = asyncio.run(estimate_image_dimension_tool(points, predicted=1.0))
    assert result.startswith("<image_dimension")
    assert '<central slope="1.0000"' in result
    assert "<predicted>1.0000</predicted>" in result
    assert result.count("<point ") == 8


def test_dimension_of_empty_cloud():
    result = asyncio.run(estimate_image_dimension_tool([]))
    assert '<image_dimension error="true">' in result


def test_condition_checks():
    result = asyncio.run(run_condition_checks_tool([GROWTH], seed=1, process={"family": "brownian"}))
    assert '<condition_checks' in result
    assert 'passed="true"' in result
    assert '<check name="growth"' in result


def test_condition_checks_with_unknown_check():
    result = asyncio.run(run_condition_checks_tool([{"check": "a9"}], seed=1, process={"family": "brownian"}))
    assert '<condition_checks error="true">' in result
    assert "Valid checks are" in result


def test_dimension_experiment(tmp_path):
    config = {
        "name": "still",
        "seed": 4,
        "process": {"family": "zero", "dim": 2},
        "H": 0.5,
        "sets": [{"kind": "cell", "level": 3, "index": 1, "label": "cell"}],
        "ladder": [2.0 ** -k for k in range(1, 9)],
        "n_paths": 2,
        "n_steps": 256,
    }
    result = asyncio.run(run_dimension_experiment_tool(config, output_dir=str(tmp_path)))
    assert result.startswith("<dimension_experiment")
    assert 'passed="true"' in result
    assert (tmp_path / "report.json").is_file()


def test_dimension_experiment_without_seed():
    result = asyncio.run(run_dimension_experiment_tool({"process": BROWNIAN}))
    assert '<dimension_experiment error="true">' in result
    assert "seed" in result
