#!/usr/bin/env python3
"""Start the Markov Image-Dimension Lab MCP server from a source checkout"""

import os
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))


if __name__ == "__main__":
    # MCP clients start us from arbitrary working directories
    os.environ.setdefault("LAB_OUTPUT_DIR", str(ROOT / "lab_output"))

    from src.mcp_server import main
    main()
