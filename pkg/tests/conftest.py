"""Shared fixtures for the lab test suite"""

import numpy as np
import pytest

from src.lab.paths import SamplePath
from src.lab.rng import RngStream


@pytest.fixture
def stream() -> RngStream:
    return RngStream(20240611)


@pytest.fixture(autouse=True)
def _quiet_env(monkeypatch):
    """Keep tests independent of the caller's lab environment variables."""
    for name in ("LAB_THREADS", "LAB_OUTPUT_DIR", "LAB_VALIDATE_COVERS"):
        monkeypatch.delenv(name, raising=False)


def make_path(values, T: float = 1.0) -> SamplePath:
    """Path on the uniform grid of [0, T] through the given values."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    return SamplePath(t0=0.0, dt=T / (values.shape[0] - 1), values=values, start_x=values[0])
