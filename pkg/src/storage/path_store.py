"""Binary dumps of simulated sample paths

Each path is one record: a 32-byte header of ``d`` and ``n`` (little-endian
int64) and ``t0`` and ``dt`` (little-endian float64), followed by the ``n x d``
values as row-major little-endian float64. ``n`` counts grid points, so a path
of ``n_steps`` steps has ``n = n_steps + 1``. A file holds one or more records
back to back.
"""

import logging
from pathlib import Path
from typing import List, Union

import numpy as np

from src.lab.errors import LabError
from src.lab.paths import SamplePath

logger = logging.getLogger(__name__)

DUMP_SUFFIX = ".bin"
HEADER_BYTES = 32


def _record(path: SamplePath) -> bytes:
    rows, d = path.values.shape
    header = np.array([d, rows], dtype="<i8").tobytes() + np.array([path.t0, path.dt], dtype="<f8").tobytes()
    return header + np.ascontiguousarray(path.values, dtype="<f8").tobytes()


def write_path_dump(target: Union[str, Path], paths: List[SamplePath]) -> Path:
    """Write ``paths`` to ``target``, one record per path."""
    if not paths:
        raise LabError("nothing to dump: no paths given")
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("wb") as fh:
        for path in paths:
            fh.write(_record(path))
    logger.debug(f"dumped {len(paths)} paths to {target}")
    return target


def load_path_dump(source: Union[str, Path]) -> List[SamplePath]:
    """Read every record of a dump written by ``write_path_dump``."""
    raw = Path(source).read_bytes()
    if not raw:
        raise LabError(f"{source} is empty, not a path dump")
    paths: List[SamplePath] = []
    offset = 0
    while offset < len(raw):
        if len(raw) - offset < HEADER_BYTES:
            raise LabError(f"{source}: truncated header at byte {offset}")
        d, rows = (int(v) for v in np.frombuffer(raw, dtype="<i8", count=2, offset=offset))
        t0, dt = (float(v) for v in np.frombuffer(raw, dtype="<f8", count=2, offset=offset + 16))
        if d < 1 or rows < 1:
            raise LabError(f"{source}: bad record header d={d}, n={rows} at byte {offset}")
        body = offset + HEADER_BYTES
        end = body + 8 * d * rows
        if end > len(raw):
            raise LabError(f"{source}: record at byte {offset} needs {end - body} value bytes, "
                           f"only {len(raw) - body} left")
        values = np.frombuffer(raw, dtype="<f8", count=d * rows, offset=body).reshape(rows, d).astype(float)
        paths.append(SamplePath(t0=t0, dt=dt, values=values, start_x=values[0]))
        offset = end
    return paths
