"""Path simulation and point-cloud dimension tools for MCP"""

import asyncio
import logging
from typing import Any, Dict, List, Optional
import nest_asyncio

# Enable nested event loops
nest_asyncio.apply()

import numpy as np

from src.formatters.context_builder import LabContextBuilder
from src.formatters.xml_formatter import LabMCPFormatter
from src.lab.boxdim import box_count, dyadic_ladder, estimate_box_dimensions
from src.lab.config import parse_process
from src.lab.errors import ConfigError, LabError
from src.lab.paths import simulate
from src.lab.rng import RngStream
from src.tools.experiment_tool import build_error_response

logger = logging.getLogger(__name__)

MAX_TOOL_STEPS = 2 ** 20
MAX_TOOL_PATHS = 64


async def simulate_process_path_tool(process: Dict[str, Any], seed: int, T: float = 1.0, n_steps: int = 1024,
                                     n_paths: int = 1, x0: Optional[List[float]] = None) -> str:
    """
    Simulate paths of a process and return endpoint summaries plus a thinned path

    Args:
        process: Process block (family and parameters)
        seed: Seed of the run
        T: Horizon
        n_steps: Grid steps per path
        n_paths: Number of paths
        x0: Start point (defaults to the origin)

    Returns:
        XML-formatted path summary
    """
    try:
        if n_steps > MAX_TOOL_STEPS or n_paths > MAX_TOOL_PATHS:
            raise ConfigError(f"tool runs are capped at {MAX_TOOL_STEPS} steps and {MAX_TOOL_PATHS} paths")
        spec = parse_process(process)
        stream = RngStream(seed).spawn("simulate")
        loop = asyncio.get_running_loop()
        paths = await loop.run_in_executor(
            None, lambda: [simulate(spec, x0, T, n_steps, stream.spawn("path", p)) for p in range(n_paths)])
        context = LabContextBuilder().build_path_context(spec, paths, seed)
        return LabMCPFormatter().format_path(context)

    except LabError as e:
        logger.error(f"Error simulating process path: {e}")
        return build_error_response("process_path", str(e), "Check the process block and the grid size")


async def estimate_image_dimension_tool(points: List[List[float]], coarse: int = 1, fine: int = 8,
                                        predicted: Optional[float] = None) -> str:
    """
    Box-counting dimension estimates of a point cloud

    Args:
        points: Point cloud, one list of coordinates per point
        coarse: Coarsest ladder level (epsilon = 2^-coarse)
        fine: Finest ladder level (epsilon = 2^-fine)
        predicted: Optional value to echo next to the estimates

    Returns:
        XML-formatted lower, central and upper estimates with the box-count curve
    """
    try:
        cloud = np.asarray(points, dtype=float)
        if cloud.ndim != 2 or cloud.shape[0] == 0:
            raise ConfigError("points must be a nonempty list of equal-length coordinate lists", "points")
        curve = box_count(cloud, dyadic_ladder(coarse, fine))
        dims = estimate_box_dimensions(curve)
        context = LabContextBuilder().build_dimension_context(curve, dims, predicted)
        return LabMCPFormatter().format_dimension(context)

    except (LabError, ValueError) as e:
        logger.error(f"Error estimating image dimension: {e}")
        return build_error_response("image_dimension", str(e),
                                    "Use a finite point cloud and at least 8 ladder levels (fine - coarse >= 7)")
