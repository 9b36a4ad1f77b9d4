"""Box counting, box-dimension regression and closed-form dimension formulas"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.lab.errors import PreconditionError
from src.lab.montecarlo import BOOTSTRAP_REPS, bootstrap_interval, ordered_map
from src.lab.rng import RngStream

logger = logging.getLogger(__name__)

_SLOPE_SLACK = 0.2


@dataclass(frozen=True, eq=False)
class BoxCountCurve:
    """Occupied-cell counts along a ladder.

    ``span`` is the largest coordinate extent of the counted cloud (at most its
    diameter); when given, every count must fit in (ceil(span / eps) + 1)^d cells.
    """

    epsilons: np.ndarray
    counts: np.ndarray
    ambient_dim: int
    span: Optional[float] = None

    def __post_init__(self):
        eps = np.asarray(self.epsilons, dtype=float).reshape(-1)
        counts = np.asarray(self.counts, dtype=np.int64).reshape(-1)
        if eps.shape != counts.shape or eps.size == 0:
            raise PreconditionError("a box-count curve needs matching, nonempty epsilons and counts")
        if np.any(np.diff(eps) >= 0):
            raise PreconditionError("epsilons must be strictly decreasing")
        if np.any(counts < 1) or np.any(np.diff(counts) < 0):
            raise PreconditionError("counts must be positive and nondecreasing as epsilon shrinks")
        if self.span is not None:
            cap = (np.ceil(self.span / eps) + 1.0) ** self.ambient_dim
            over = np.flatnonzero(counts > cap)
            if over.size:
                i = int(over[0])
                raise PreconditionError(f"{counts[i]} occupied cells at eps={eps[i]:g} exceed the cap {cap[i]:g} "
                                        f"for a cloud of span {self.span:g} in dimension {self.ambient_dim}")
        object.__setattr__(self, "epsilons", eps)
        object.__setattr__(self, "counts", counts)

    def __len__(self) -> int:
        return int(self.epsilons.size)

    def csv_rows(self) -> List[Dict[str, Any]]:
        return [{"epsilon": float(e), "count": int(c)} for e, c in zip(self.epsilons, self.counts)]


@dataclass(frozen=True)
class WindowPolicy:
    """Which ladder points enter the regression."""

    drop_coarse: int = 2
    drop_fine: int = 2
    min_points: int = 4

    def window(self, size: int) -> Tuple[int, int]:
        lo, hi = self.drop_coarse, size - self.drop_fine
        if hi - lo < self.min_points:
            raise PreconditionError(
                f"window keeps {max(hi - lo, 0)} of {size} ladder points; need at least {self.min_points}")
        return lo, hi


@dataclass(frozen=True)
class DimensionEstimate:
    slope: float
    lower_ci: float
    upper_ci: float
    window: Tuple[int, int]
    mode: str
    flags: Tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> Dict[str, Any]:
        return {"slope": self.slope, "lo": self.lower_ci, "hi": self.upper_ci,
                "window": list(self.window), "mode": self.mode, "flags": list(self.flags)}


class BoxDimensions(NamedTuple):
    lower: DimensionEstimate
    upper: DimensionEstimate
    central: DimensionEstimate


def dyadic_ladder(coarse: int, fine: int, base: int = 2) -> np.ndarray:
    """base^-coarse, ..., base^-fine."""
    if fine <= coarse:
        raise PreconditionError("fine exponent must exceed coarse exponent")
    return float(base) ** -np.arange(coarse, fine + 1, dtype=float)


def default_ladder(T: float, n_steps: int, H: float, coarse: int = 1, finest: int = 12) -> np.ndarray:
    """Dyadic ladder stopping at the larger of 2^-finest and 4 (T / n)^H."""
    floor_eps = max(2.0 ** -finest, 4.0 * (T / n_steps) ** H)
    ladder = [2.0 ** -j for j in range(coarse, finest + 1) if 2.0 ** -j >= floor_eps]
    return np.asarray(ladder)


def _check_ladder(ladder: Sequence[float]) -> np.ndarray:
    eps = np.asarray(ladder, dtype=float).reshape(-1)
    if eps.size == 0 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise PreconditionError("epsilon ladder must be positive and strictly decreasing")
    ratios = eps[:-1] / eps[1:]
    if np.any(np.abs(ratios - np.round(ratios)) > 1e-9 * ratios):
        raise PreconditionError("epsilon ladder must be nested: consecutive ratios must be integers")
    return eps


def _occupied_cells(points: np.ndarray, eps: float) -> int:
    keys = np.floor(points / eps).astype(np.int64)
    keys -= keys.min(axis=0)
    extent = keys.max(axis=0) + 1
    if float(np.prod(extent.astype(float))) < 2.0 ** 62:
        linear = np.ravel_multi_index(keys.T, tuple(int(e) for e in extent))
        return int(np.unique(linear).size)
    return int(np.unique(keys, axis=0).shape[0])


def box_count(points: np.ndarray, epsilon_ladder: Sequence[float], threads: int = 1) -> BoxCountCurve:
    """Occupied cells of the origin-anchored grids eps Z^d, cells half-open [j eps, (j+1) eps)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] == 0:
        raise PreconditionError("cannot box-count an empty point cloud")
    eps = _check_ladder(epsilon_ladder)
    counts = ordered_map(lambda e: _occupied_cells(pts, e), list(eps), threads)
    return BoxCountCurve(epsilons=eps, counts=np.asarray(counts), ambient_dim=pts.shape[1],
                         span=float(np.ptp(pts, axis=0).max()))


def _ls_slope(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    denom = float(xc @ xc)
    if denom == 0.0:
        return float("nan")
    return float(xc @ (y - y.mean()) / denom)


def estimate_box_dimensions(curve: BoxCountCurve, policy: Optional[WindowPolicy] = None,
                            rng: Optional[RngStream] = None, reps: int = BOOTSTRAP_REPS) -> BoxDimensions:
    """Lower, upper and least-squares slopes of log N(eps) against log(1/eps).

    The lower and upper estimates are the smallest and largest slopes between
    consecutive window points; the least-squares slope is a convex
    combination of those, so lower <= central <= upper.
    """
    policy = policy or WindowPolicy()
    lo, hi = policy.window(len(curve))
    x = -np.log(curve.epsilons[lo:hi])
    y = np.log(curve.counts[lo:hi].astype(float))
    window = (lo, hi - 1)

    if np.all(curve.counts[lo:hi] == curve.counts[lo]):
        flat = DimensionEstimate(0.0, 0.0, 0.0, window, "ls-fit", ("saturated",))
        return BoxDimensions(
            lower=DimensionEstimate(0.0, 0.0, 0.0, window, "min-slope", ("saturated",)),
            upper=DimensionEstimate(0.0, 0.0, 0.0, window, "max-slope", ("saturated",)),
            central=flat,
        )

    steps = np.diff(y) / np.diff(x)
    central = _ls_slope(x, y)
    gen = (rng or RngStream(0).spawn("bootstrap")).generator()
    rows = np.stack([x, y], axis=1)
    c_lo, c_hi = bootstrap_interval(rows, lambda r: _ls_slope(r[:, 0], r[:, 1]), gen, reps)
    l_lo, l_hi = bootstrap_interval(steps, np.min, gen, reps)
    u_lo, u_hi = bootstrap_interval(steps, np.max, gen, reps)

    def estimate(slope: float, ci_lo: float, ci_hi: float, mode: str) -> DimensionEstimate:
        flags = []
        if not -1e-12 <= slope <= curve.ambient_dim + _SLOPE_SLACK:
            flags.append("out-of-range")
        ci_lo = slope if not math.isfinite(ci_lo) else min(ci_lo, slope)
        ci_hi = slope if not math.isfinite(ci_hi) else max(ci_hi, slope)
        return DimensionEstimate(slope, ci_lo, ci_hi, window, mode, tuple(flags))

    return BoxDimensions(
        lower=estimate(float(steps.min()), l_lo, l_hi, "min-slope"),
        upper=estimate(float(steps.max()), u_lo, u_hi, "max-slope"),
        central=estimate(central, c_lo, c_hi, "ls-fit"),
    )


def hawkes_inverse_image_dimension(rho: float, dim_e: float) -> float:
    """Dimension of the inverse image of a set of dimension ``dim_e`` under a rho-stable subordinator."""
    if not 0.0 < rho < 1.0:
        raise PreconditionError(f"rho must lie in (0, 1), got {rho}")
    if not 0.0 <= dim_e <= 1.0:
        raise PreconditionError(f"dim_e must lie in [0, 1], got {dim_e}")
    return max(0.0, (rho + dim_e - 1.0) / rho)


def predicted_image_dimension(dim_e: float, H: float, d: int) -> float:
    """min(d, dim E / H)."""
    if not H > 0:
        raise PreconditionError("H must be positive")
    return min(float(d), dim_e / H)
