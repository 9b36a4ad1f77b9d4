"""Time sets with known dimension, stored as unions of b-adic cells of [0, 1]"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src.lab.errors import PreconditionError, ResourceCapError

logger = logging.getLogger(__name__)

DEFAULT_CELL_CAP = 2 ** 24


@dataclass(frozen=True, eq=False)
class DyadicTimeSet:
    """Union of the closed cells [j b^-k, (j+1) b^-k] for j in ``cells``.

    ``base`` is 2 for dyadic sets; Cantor sets keep their native base so that
    cell counts stay exact.
    """

    level: int
    cells: np.ndarray
    analytic_dim: Optional[float] = None
    base: int = 2
    label: str = ""

    def __post_init__(self):
        if self.level < 0 or self.base < 2:
            raise PreconditionError("time set needs level >= 0 and base >= 2")
        cells = np.asarray(self.cells, dtype=np.int64).reshape(-1)
        if cells.size and (cells[0] < 0 or cells[-1] >= self.base ** self.level):
            raise PreconditionError(f"cell indices must lie in [0, {self.base}^{self.level})")
        if np.any(np.diff(cells) <= 0):
            raise PreconditionError("cells must be sorted and strictly increasing")
        if self.analytic_dim is not None and not 0.0 <= self.analytic_dim <= 1.0:
            raise PreconditionError(f"analytic_dim must lie in [0, 1], got {self.analytic_dim}")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def width(self) -> float:
        return float(self.base) ** (-self.level)

    @property
    def n_cells(self) -> int:
        return int(self.cells.size)

    @property
    def is_empty(self) -> bool:
        return self.cells.size == 0

    def intervals(self) -> np.ndarray:
        """(n_cells, 2) array of cell endpoints."""
        scale = self.base ** self.level
        return np.stack([self.cells / scale, (self.cells + 1) / scale], axis=1)

    def points(self) -> np.ndarray:
        """Cell midpoints as a one-dimensional cloud."""
        return ((self.cells + 0.5) / self.base ** self.level)[:, None]

    def contains(self, t: float) -> bool:
        scale = self.base ** self.level
        lo = math.floor(t * scale)
        hits = [j for j in (lo - 1, lo) if 0 <= j < scale and j / scale <= t <= (j + 1) / scale]
        return bool(np.isin(hits, self.cells).any()) if hits else False

    def is_refinement_of(self, coarser: "DyadicTimeSet") -> bool:
        """Cell-cover containment of this set in ``coarser``."""
        if self.base != coarser.base or self.level < coarser.level:
            return False
        parents = self.cells // self.base ** (self.level - coarser.level)
        return bool(np.isin(parents, coarser.cells).all())

    def to_dyadic(self, cap: int = DEFAULT_CELL_CAP) -> "DyadicTimeSet":
        """Cover by the dyadic cells of the coarsest level L with 2^-L <= b^-k."""
        if self.base == 2:
            return self
        scale = self.base ** self.level
        level = (scale - 1).bit_length()
        ratio = 2 ** level
        lo = (self.cells * ratio) // scale
        hi = -((-(self.cells + 1) * ratio) // scale)
        if int((hi - lo).sum()) > cap:
            raise ResourceCapError(f"dyadic cover needs more than {cap} cells")
        cells = np.unique(np.concatenate([np.arange(a, b) for a, b in zip(lo, hi)]) if lo.size else lo)
        return DyadicTimeSet(level=level, cells=cells, analytic_dim=self.analytic_dim, base=2, label=self.label)

    def to_json(self) -> Dict[str, Any]:
        return {"label": self.label, "base": self.base, "level": self.level,
                "cells": self.cells.tolist(), "analytic_dim": self.analytic_dim}

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "DyadicTimeSet":
        return cls(level=int(data["level"]), cells=np.asarray(data["cells"], dtype=np.int64),
                   analytic_dim=data.get("analytic_dim"), base=int(data.get("base", 2)),
                   label=str(data.get("label", "")))


@dataclass(frozen=True)
class CantorSpec:
    base: int
    kept_digits: Sequence[int] = field(default_factory=lambda: (0, 2))
    depth: int = 1

    def __post_init__(self):
        if self.base < 2:
            raise PreconditionError(f"Cantor base must be >= 2, got {self.base}")
        kept = tuple(sorted(set(int(k) for k in self.kept_digits)))
        if not kept or kept[0] < 0 or kept[-1] >= self.base:
            raise PreconditionError(f"kept digits must be a nonempty subset of 0..{self.base - 1}")
        if self.depth < 1:
            raise PreconditionError("Cantor depth must be >= 1")
        object.__setattr__(self, "kept_digits", kept)

    @property
    def dimension(self) -> float:
        return math.log(len(self.kept_digits)) / math.log(self.base)


def build_cantor_set(spec: CantorSpec, cap: int = DEFAULT_CELL_CAP, label: str = "") -> DyadicTimeSet:
    """Depth-k cells whose base-b digits all lie in the kept digits."""
    m = len(spec.kept_digits)
    if m ** spec.depth > cap:
        raise ResourceCapError(f"Cantor set with {m}^{spec.depth} cells exceeds the cap of {cap}")
    digits = np.asarray(spec.kept_digits, dtype=np.int64)
    cells = np.zeros(1, dtype=np.int64)
    for _ in range(spec.depth):
        cells = (cells[:, None] * spec.base + digits[None, :]).ravel()
    name = label or f"cantor-b{spec.base}-{''.join(map(str, spec.kept_digits))}-k{spec.depth}"
    logger.debug(f"built {name} with {cells.size} cells")
    return DyadicTimeSet(level=spec.depth, cells=cells, analytic_dim=spec.dimension, base=spec.base, label=name)


def full_interval(label: str = "interval") -> DyadicTimeSet:
    return DyadicTimeSet(level=0, cells=np.zeros(1, dtype=np.int64), analytic_dim=1.0, label=label)


def single_cell(level: int, index: int = 0, base: int = 2, label: str = "") -> DyadicTimeSet:
    return DyadicTimeSet(level=level, cells=np.array([index], dtype=np.int64), analytic_dim=0.0,
                         base=base, label=label or f"cell-{base}^{level}-{index}")


def empty_set(label: str = "empty") -> DyadicTimeSet:
    return DyadicTimeSet(level=0, cells=np.zeros(0, dtype=np.int64), analytic_dim=None, label=label)


def grid_size(dt: float, T: float) -> int:
    """Number of steps n = T / dt, which must be an integer."""
    if not dt > 0 or not T > 0:
        raise PreconditionError("dt and T must be positive")
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * T:
        raise PreconditionError(f"T / dt = {T / dt} is not an integer")
    return n


def restrict_to_grid(E: DyadicTimeSet, dt: float, T: float) -> np.ndarray:
    """Indices i of grid times i dt whose rescaled value i dt / T lies in E."""
    n = grid_size(dt, T)
    if E.is_empty:
        return np.zeros(0, dtype=np.int64)
    scale = E.base ** E.level
    if n < scale:
        raise PreconditionError(
            f"grid of {n} steps undersamples cells of width {E.base}^-{E.level}; use at least {scale} steps")
    lo = -((-E.cells * n) // scale)
    hi = ((E.cells + 1) * n) // scale
    marks = np.zeros(n + 2, dtype=np.int64)
    np.add.at(marks, lo, 1)
    np.add.at(marks, hi + 1, -1)
    inside = np.cumsum(marks[:n + 1]) > 0
    return np.flatnonzero(inside)


def image_points(path: Any, indices: Sequence[int]) -> np.ndarray:
    """The cloud {path.values[i]} (duplicates kept)."""
    values = path.values if hasattr(path, "values") else np.asarray(path)
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= values.shape[0]):
        raise PreconditionError("grid indices fall outside the path")
    return values[idx]


def set_summary(sets: List[DyadicTimeSet]) -> List[Dict[str, Any]]:
    return [{"label": s.label, "base": s.base, "level": s.level, "n_cells": s.n_cells,
             "analytic_dim": s.analytic_dim} for s in sets]
