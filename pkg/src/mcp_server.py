"""MCP Markov Image-Dimension Lab Server - Main entry point"""

from fastmcp import FastMCP
import os
import sys
import logging
from pathlib import Path
from typing import Dict, Any, List, Optional

# Add project root to Python path for absolute imports
project_root = Path(__file__).parent.parent
if str(project_root) not in sys.path:
    sys.path.insert(0, str(project_root))

from src.settings import configure_logging, default_threads, validate_covers_enabled

# Configure logging (stderr only; stdout carries the MCP protocol)
configure_logging()
logger = logging.getLogger(__name__)

# Import tool implementations
from src.tools.experiment_tool import run_dimension_experiment_tool
from src.tools.checks_tool import run_condition_checks_tool
from src.tools.simulation_tool import estimate_image_dimension_tool, simulate_process_path_tool

# Create MCP server instance
mcp = FastMCP("markov-image-dimension-lab")


@mcp.tool()
async def run_dimension_experiment(config: Dict[str, Any], output_dir: Optional[str] = None) -> str:
    """
    Run an image-dimension experiment.

    Simulates the configured process, estimates the box dimension of its image
    over each time set and compares it with min(d, dim E / H). Condition checks
    and the covering study run too when the config has them.

    Args:
        config: Experiment configuration, for example
            {
                "seed": 7,
                "process": {"family": "brownian", "dim": 2},
                "sets": [{"kind": "interval"}],
                "n_paths": 8,
                "n_steps": 1048576
            }
        output_dir: Where to write report.json, CSV curves and manifest.json (optional)

    Returns:
        XML-formatted experiment report
    """
    try:
        return await run_dimension_experiment_tool(config, output_dir)
    except Exception as e:
        logger.error(f"Error running dimension experiment: {e}")
        return f"""<dimension_experiment error="true">
    <error_message>{str(e)}</error_message>
    <suggestion>Please check the experiment configuration and try again</suggestion>
</dimension_experiment>"""


@mcp.tool()
async def run_condition_checks(checks: List[Dict[str, Any]], seed: int,
                               process: Optional[Dict[str, Any]] = None, H: Optional[float] = None) -> str:
    """
    Verify regularity conditions of a process by Monte Carlo.

    Check names: a1, a2, a3, mclass, ottaviani, pruitt, hitting, moment, selfsim, growth.

    Example:
        checks = [{"check": "a1", "gamma": [0.3, 0.4], "n_mc": 2000}]
        process = {"family": "brownian", "dim": 1}

    Returns:
        XML-formatted verdicts with fitted constants and violating cells
    """
    try:
        return await run_condition_checks_tool(checks, seed, process, H)
    except Exception as e:
        logger.error(f"Error running condition checks: {e}")
        return f"""<condition_checks error="true">
    <error_message>{str(e)}</error_message>
    <suggestion>Please check the check blocks and try again</suggestion>
</condition_checks>"""


@mcp.tool()
async def simulate_process_path(process: Dict[str, Any], seed: int, T: float = 1.0, n_steps: int = 1024,
                                n_paths: int = 1, x0: Optional[List[float]] = None) -> str:
    """
    Simulate sample paths of a Markov process on a uniform grid.

    Families: brownian, stable, subordinator, subordinated, stable_like, jump_diffusion, zero.

    Returns:
        XML-formatted endpoints, maximal displacements and a thinned copy of the first path
    """
    try:
        return await simulate_process_path_tool(process, seed, T, n_steps, n_paths, x0)
    except Exception as e:
        logger.error(f"Error simulating process path: {e}")
        return f"""<process_path error="true">
    <error_message>{str(e)}</error_message>
    <suggestion>Please check the process block</suggestion>
</process_path>"""


@mcp.tool()
async def estimate_image_dimension(points: List[List[float]], coarse: int = 1, fine: int = 8,
                                   predicted: Optional[float] = None) -> str:
    """
    Estimate lower, central and upper box-counting dimensions of a point cloud.

    Args:
        points: Point cloud, one coordinate list per point
        coarse: Coarsest level of the dyadic epsilon ladder
        fine: Finest level of the dyadic epsilon ladder
        predicted: Optional predicted dimension to report alongside

    Returns:
        XML-formatted estimates and box-count curve
    """
    try:
        return await estimate_image_dimension_tool(points, coarse, fine, predicted)
    except Exception as e:
        logger.error(f"Error estimating image dimension: {e}")
        return f"""<image_dimension error="true">
    <error_message>{str(e)}</error_message>
</image_dimension>"""


@mcp.tool()
async def lab_health_check() -> str:
    """
    Check that the numerical stack is importable and the samplers behave.

    Draws 20000 standard Gaussian increments from a fixed stream and checks
    their variance.

    Returns:
        XML-formatted health status
    """
    try:
        import numpy as np
        import scipy

        from src.lab.paths import sample_stable_increment

        draws = sample_stable_increment(2.0, 1.0, 0, size=20000)
        variance = float(np.var(draws))
        healthy = abs(variance - 2.0) < 0.1
        status = "healthy" if healthy else "unhealthy"
        return f"""<lab_health status="{status}">
    <versions>
        <numpy>{np.__version__}</numpy>
        <scipy>{scipy.__version__}</scipy>
    </versions>
    <settings>
        <threads>{default_threads()}</threads>
        <validate_covers>{str(validate_covers_enabled()).lower()}</validate_covers>
        <log_level>{os.getenv('LOG_LEVEL', 'INFO')}</log_level>
    </settings>
    <sampler_check>
        <gaussian_variance expected="2.0">{variance:.4f}</gaussian_variance>
    </sampler_check>
</lab_health>"""

    except Exception as e:
        logger.error(f"Error performing health check: {e}")
        return f"""<lab_health status="error">
    <error_message>{str(e)}</error_message>
    <suggestions>
        <suggestion>Install required dependencies: pip install numpy scipy fastmcp nest-asyncio</suggestion>
    </suggestions>
</lab_health>"""


def main():
    """Main entry point"""
    logger.info("Starting MCP Markov Image-Dimension Lab Server")
    logger.info(f"Worker threads: {default_threads()}")

    # Run the server
    try:
        mcp.run()
    except KeyboardInterrupt:
        logger.info("Server stopped by user")
    except Exception as e:
        logger.error(f"Server error: {str(e)}")
        sys.exit(1)


if __name__ == "__main__":
    main()
