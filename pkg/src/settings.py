"""Environment defaults and logging setup shared by the CLI and the MCP server"""

import os
import sys
import logging

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

_TRUTHY = {"1", "true", "yes", "on"}


def configure_logging(level: str = None) -> None:
    """Configure root logging to stderr; FastMCP loggers are kept quiet."""
    level_name = (level or os.getenv("LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler(sys.stderr)]
    )
    logging.getLogger("FastMCP").setLevel(logging.ERROR)
    logging.getLogger("fastmcp").setLevel(logging.ERROR)


def default_threads() -> int:
    """Worker-pool size when neither --threads nor the config sets one."""
    try:
        return max(1, int(os.getenv("LAB_THREADS", "1")))
    except ValueError:
        return 1


def default_output_dir() -> str:
    return os.getenv("LAB_OUTPUT_DIR", "./lab_output")


def validate_covers_enabled() -> bool:
    """Whether the covering engines assert cover validity on every call."""
    return os.getenv("LAB_VALIDATE_COVERS", "").strip().lower() in _TRUTHY


def horizon_multiplier() -> float:
    """Subordinator overflow guard: tau_T may not exceed this multiple of T^(1/rho)."""
    try:
        return float(os.getenv("LAB_HORIZON_MULTIPLIER", "1e6"))
    except ValueError:
        return 1e6
