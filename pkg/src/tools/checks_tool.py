"""Condition-check tool for MCP"""

import asyncio
import logging
from typing import Any, Dict, List, Optional
import nest_asyncio

# Enable nested event loops
nest_asyncio.apply()

from src.formatters.context_builder import LabContextBuilder
from src.formatters.xml_formatter import LabMCPFormatter
from src.lab.config import CHECK_NAMES, parse_config
from src.lab.errors import ConfigError, LabError
from src.lab.runner import run_checks
from src.tools.experiment_tool import build_error_response

logger = logging.getLogger(__name__)


async def run_condition_checks_tool(checks: List[Dict[str, Any]], seed: int,
                                    process: Optional[Dict[str, Any]] = None, H: Optional[float] = None) -> str:
    """
    Run condition-check blocks against a process

    Args:
        checks: Check blocks, each with a "check" name and its parameters
        seed: Seed of the run
        process: Process block shared by blocks that do not carry their own
        H: Index used by checks that need one (defaults to the family's natural index)

    Returns:
        XML-formatted check verdicts
    """
    try:
        document: Dict[str, Any] = {"seed": seed, "checks": checks}
        if process is not None:
            document["process"] = process
        if H is not None:
            document["H"] = H
        config = parse_config(document)
        loop = asyncio.get_running_loop()
        reports = await loop.run_in_executor(None, lambda: run_checks(config))
        context = LabContextBuilder().build_checks_context(reports)
        return LabMCPFormatter().format_checks(context)

    except ConfigError as e:
        logger.error(f"Invalid check configuration: {e}")
        return build_error_response("condition_checks", str(e),
                                    f"Valid checks are: {', '.join(CHECK_NAMES)}")
    except LabError as e:
        logger.error(f"Condition checks failed: {e}")
        return build_error_response("condition_checks", str(e), "Adjust the grids or Monte Carlo sizes")
