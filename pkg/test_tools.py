#!/usr/bin/env python
"""Smoke script for the Markov Image-Dimension Lab MCP tools"""

import asyncio
import json
import sys
from datetime import datetime

# Add src to path
sys.path.insert(0, '.')

from src.tools.checks_tool import run_condition_checks_tool
from src.tools.experiment_tool import run_dimension_experiment_tool
from src.tools.simulation_tool import estimate_image_dimension_tool, simulate_process_path_tool


async def test_simulate_path():
    """Simulate two planar Brownian paths"""
    print("\n=== Testing Simulate Process Path ===")

    process = {"family": "brownian", "dim": 2}
    print(f"Process: {json.dumps(process)}")

    result = await simulate_process_path_tool(process, seed=7, n_steps=4096, n_paths=2)
    print("\nResult:")
    print(result[:1000] + "..." if len(result) > 1000 else result)


async def test_estimate_dimension():
    """Box dimension of a filled unit square"""
    print("\n=== Testing Estimate Image Dimension ===")

    points = [[i / 128.0, j / 128.0] for i in range(128) for j in range(128)]
    print(f"Point cloud: {len(points)} grid points of the unit square")

    result = await estimate_image_dimension_tool(points, coarse=1, fine=8, predicted=2.0)
    print("\nResult:")
    print(result)


async def test_condition_checks():
    """a1 and growth checks for one-dimensional Brownian motion"""
    print("\n=== Testing Condition Checks ===")

    checks = [
        {"check": "a1", "gamma": [0.3], "n_mc": 1000},
        {"check": "growth", "alpha": 2.0, "zeta_prime": 0.1, "K5": 2.0},
    ]
    print(f"Checks: {json.dumps(checks, indent=2)}")

    result = await run_condition_checks_tool(checks, seed=5, process={"family": "brownian", "dim": 1})
    print("\nResult:")
    print(result)


async def test_dimension_experiment():
    """Planar Brownian motion over the unit interval and one dyadic cell"""
    print("\n=== Testing Dimension Experiment ===")

    config = {
        "name": "smoke",
        "seed": 20240601,
        "process": {"family": "brownian", "dim": 2},
        "sets": [{"kind": "interval", "label": "unit-interval"},
                 {"kind": "cell", "level": 12, "index": 3, "label": "single-cell"}],
        "ladder": [2.0 ** -k for k in range(1, 9)],
        "n_paths": 4,
        "n_steps": 2 ** 18,
    }
    result = await run_dimension_experiment_tool(config)
    print("\nResult:")
    print(result)


async def main():
    """Run all smoke checks"""
    print("MCP Markov Image-Dimension Lab - Smoke Run")
    print(f"Started at: {datetime.now()}")

    try:
        await test_simulate_path()
        await test_estimate_dimension()
        await test_condition_checks()
        await test_dimension_experiment()

    except Exception as e:
        print(f"\nError during smoke run: {e}")
        import traceback
        traceback.print_exc()

    print(f"\nCompleted at: {datetime.now()}")


if __name__ == "__main__":
    asyncio.run(main())
