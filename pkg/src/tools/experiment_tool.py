"""Dimension-experiment tool for MCP"""

import asyncio
import logging
from typing import Any, Dict, Optional
import nest_asyncio

# Enable nested event loops
nest_asyncio.apply()

from src.formatters.context_builder import LabContextBuilder
from src.formatters.xml_formatter import LabMCPFormatter
from src.lab.config import parse_config
from src.lab.errors import ConfigError, LabError
from src.lab.runner import run_experiment

logger = logging.getLogger(__name__)

EXPERIMENT_TIMEOUT = 600.0


async def run_dimension_experiment_tool(config: Dict[str, Any], output_dir: Optional[str] = None,
                                        timeout: float = EXPERIMENT_TIMEOUT) -> str:
    """
    Run a configured image-dimension experiment (sets, checks and covering study)

    Args:
        config: Experiment configuration in the JSON schema documented in README
        output_dir: Directory for report.json and CSV artifacts; nothing is written when omitted
        timeout: Seconds before the call is abandoned

    Returns:
        XML-formatted experiment report
    """
    try:
        experiment = parse_config(config)
        loop = asyncio.get_running_loop()
        try:
            report = await asyncio.wait_for(
                loop.run_in_executor(None, lambda: run_experiment(experiment, out_dir=output_dir)),
                timeout=timeout
            )
        except asyncio.TimeoutError:
            return build_error_response("dimension_experiment",
                                        f"Experiment exceeded {timeout:.0f}s",
                                        "Reduce n_paths or n_steps, or run the experiment from the CLI")
        context = LabContextBuilder().build_experiment_context(report)
        return LabMCPFormatter().format_experiment(context)

    except ConfigError as e:
        logger.error(f"Invalid experiment configuration: {e}")
        return build_error_response("dimension_experiment", str(e),
                                    "Fix the field named in the message; see the config schema in README")
    except LabError as e:
        logger.error(f"Experiment failed: {e}")
        return build_error_response("dimension_experiment", str(e),
                                    "Check the process parameters and grid sizes")


def build_error_response(tag: str, error_message: str, suggestion: str) -> str:
    """Build error response in MCP format"""
    return LabMCPFormatter().format_error(tag, error_message, suggestion)
