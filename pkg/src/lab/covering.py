"""Stopping-time covers of path images and preimages"""

import itertools
import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import spatial

from src.lab.errors import CoverValidityError, PreconditionError
from src.lab.montecarlo import linear_fit, ordered_map
from src.lab.paths import SamplePath, simulate
from src.lab.processes import ProcessSpec
from src.lab.rng import RngStream, as_stream
from src.settings import validate_covers_enabled

logger = logging.getLogger(__name__)

_TIME_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ImageCoverConfig:
    """Intervals of length t_n, each to be covered by balls of radius theta_n."""

    t_n: float
    theta_n: float
    intervals: np.ndarray

    def __post_init__(self):
        if not self.t_n > 0 or not self.theta_n > 0:
            raise PreconditionError("t_n and theta_n must be positive")
        intervals = np.asarray(self.intervals, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "intervals", intervals)

    @property
    def family_size(self) -> int:
        return int(self.intervals.shape[0])


@dataclass(frozen=True)
class PreimageCoverConfig:
    """Dyadic cubes of side r_n inside [-box, box]^d, each enclosed in a ball; intervals of length t_n."""

    r_n: float
    t_n: float
    T: float
    dim: int
    box: float = 1.0

    def __post_init__(self):
        if min(self.r_n, self.t_n, self.T, self.box) <= 0:
            raise PreconditionError("r_n, t_n, T and box must be positive")
        if not self.t_n < self.T:
            raise PreconditionError(f"t_n = {self.t_n} must be below T = {self.T}")

    @property
    def radius(self) -> float:
        return math.sqrt(self.dim) * self.r_n / 2.0

    @property
    def family_size(self) -> int:
        return int(round(2.0 * self.box / self.r_n)) ** self.dim


@dataclass(frozen=True)
class CoverRow:
    n: int
    family_size: int
    max_count: int
    q50: float
    q95: float
    tail_slope: float
    tail_slope_stderr: float
    mean_path_max: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def dyadic_image_config(n: int, gamma: float, T: float = 1.0) -> ImageCoverConfig:
    """2^n intervals of length t_n = T 2^-n, radius theta_n = t_n^gamma."""
    t_n = T * 2.0 ** -n
    starts = t_n * np.arange(2 ** n)
    return ImageCoverConfig(t_n=t_n, theta_n=t_n ** gamma, intervals=np.stack([starts, starts + t_n], axis=1))


def dyadic_preimage_config(n: int, gamma: float, T: float, dim: int, box: float = 1.0) -> PreimageCoverConfig:
    """Cubes of side r_n = 2^-n and intervals of length t_n = 2^(-gamma n)."""
    return PreimageCoverConfig(r_n=2.0 ** -n, t_n=2.0 ** (-gamma * n), T=T, dim=dim, box=box)


# ---------------------------------------------------------------------------
# Image covers
# ---------------------------------------------------------------------------

def _interval_indices(path: SamplePath, a: float, b: float) -> Tuple[int, int]:
    lo = int(math.ceil((a - path.t0) / path.dt - _TIME_TOL))
    hi = int(math.floor((b - path.t0) / path.dt + _TIME_TOL))
    if lo < 0 or hi > path.n_steps or lo > hi:
        raise PreconditionError(f"interval [{a}, {b}] is not inside the path's grid")
    return lo, hi


def _chain_centers(segment: np.ndarray, theta: float) -> List[int]:
    """Offsets of tau_0 = 0, tau_j = first later point further than theta from X(tau_{j-1})."""
    centers = [0]
    current = 0
    while True:
        dist = np.linalg.norm(segment[current + 1:] - segment[current], axis=1)
        beyond = np.flatnonzero(dist > theta)
        if beyond.size == 0:
            return centers
        current = current + 1 + int(beyond[0])
        centers.append(current)


def _assert_image_cover(segment: np.ndarray, centers: Sequence[int], theta: float) -> None:
    tree = spatial.cKDTree(segment[list(centers)])
    dist, _ = tree.query(segment)
    if np.any(dist > theta * (1 + 1e-12)):
        raise CoverValidityError(f"image cover misses {int(np.sum(dist > theta))} grid points")


def image_cover_count(path: SamplePath, interval: Tuple[float, float], theta: float,
                      validate: Optional[bool] = None) -> int:
    """Number of radius-theta balls the stopping-time chain needs for X(interval) on the grid."""
    if not theta > 0:
        raise PreconditionError("theta must be positive")
    lo, hi = _interval_indices(path, float(interval[0]), float(interval[1]))
    segment = path.values[lo:hi + 1]
    centers = _chain_centers(segment, theta)
    if validate_covers_enabled() if validate is None else validate:
        _assert_image_cover(segment, centers, theta)
    return len(centers)


def image_cover_counts(path: SamplePath, config: ImageCoverConfig, validate: Optional[bool] = None) -> np.ndarray:
    """Counts for every interval, all chains advanced together on a padded gather matrix."""
    bounds = [_interval_indices(path, a, b) for a, b in config.intervals]
    lengths = {hi - lo for lo, hi in bounds}
    if len(lengths) != 1:
        return np.array([image_cover_count(path, iv, config.theta_n, validate) for iv in config.intervals])
    width = lengths.pop() + 1
    starts = np.array([lo for lo, _ in bounds])
    gather = path.values[starts[:, None] + np.arange(width)[None, :]]
    m = gather.shape[0]
    rows = np.arange(m)
    offsets = np.arange(width)[None, :]
    current = np.zeros(m, dtype=np.int64)
    counts = np.ones(m, dtype=np.int64)
    active = np.ones(m, dtype=bool)
    while active.any():
        anchor = gather[rows, current][:, None, :]
        far = (np.linalg.norm(gather - anchor, axis=2) > config.theta_n) & (offsets > current[:, None])
        has_next = far.any(axis=1) & active
        nxt = np.argmax(far, axis=1)
        current = np.where(has_next, nxt, current)
        counts += has_next
        active = has_next
    if validate_covers_enabled() if validate is None else validate:
        for i in range(m):
            segment = gather[i]
            _assert_image_cover(segment, _chain_centers(segment, config.theta_n), config.theta_n)
    return counts


def max_image_cover_count(path: SamplePath, config: ImageCoverConfig, validate: Optional[bool] = None) -> int:
    if config.family_size == 0:
        return 0
    return int(image_cover_counts(path, config, validate).max())


# ---------------------------------------------------------------------------
# Preimage covers
# ---------------------------------------------------------------------------

def _greedy_times(times: np.ndarray, t_n: float, dt: float) -> List[int]:
    """Positions of tau_k: the first time, then the first time at or after tau_{k-1} + t_n."""
    chosen = []
    j = 0
    while j < times.size:
        chosen.append(j)
        j = int(np.searchsorted(times, times[j] + t_n - _TIME_TOL * dt, side="left"))
    return chosen


def _assert_preimage_cover(times: np.ndarray, chosen: Sequence[int], t_n: float, dt: float) -> None:
    starts = times[list(chosen)]
    slot = np.searchsorted(starts, times + _TIME_TOL * dt, side="right") - 1
    if np.any(slot < 0) or np.any(times >= starts[np.clip(slot, 0, None)] + t_n - _TIME_TOL * dt):
        raise CoverValidityError("preimage cover leaves grid times uncovered")


def _horizon_index(path: SamplePath, T: float) -> int:
    """Number of grid times strictly before T."""
    if not T > path.t0:
        raise PreconditionError("T must exceed the path start time")
    count = int(math.ceil((T - path.t0) / path.dt - _TIME_TOL))
    return min(count, path.n_steps + 1)


def preimage_cover_count(path: SamplePath, ball: Tuple[Sequence[float], float], t_n: float, T: float,
                         validate: Optional[bool] = None) -> int:
    """Number of stopping times tau_k < T covering the grid visits to the closed ball."""
    if not 0 < t_n < T:
        raise PreconditionError(f"need 0 < t_n < T, got t_n={t_n}, T={T}")
    center, radius = np.asarray(ball[0], dtype=float).reshape(path.dim), float(ball[1])
    stop = _horizon_index(path, T)
    inside = np.flatnonzero(np.linalg.norm(path.values[:stop] - center, axis=1) <= radius)
    times = path.t0 + path.dt * inside
    chosen = _greedy_times(times, t_n, path.dt)
    if (validate_covers_enabled() if validate is None else validate) and times.size:
        _assert_preimage_cover(times, chosen, t_n, path.dt)
    return len(chosen)


def preimage_cover_counts(path: SamplePath, config: PreimageCoverConfig,
                          validate: Optional[bool] = None) -> Dict[Tuple[int, ...], int]:
    """Counts for every cube of the family whose enclosing ball the path visits (absent cubes count 0)."""
    stop = _horizon_index(path, config.T)
    points = path.values[:stop]
    keys = np.unique(np.floor(points / config.r_n).astype(np.int64), axis=0)
    limit = int(round(config.box / config.r_n))
    neighbours = np.array(list(itertools.product((-1, 0, 1), repeat=config.dim)), dtype=np.int64)
    keys = np.unique((keys[:, None, :] + neighbours[None, :, :]).reshape(-1, config.dim), axis=0)
    keys = keys[np.all((keys >= -limit) & (keys < limit), axis=1)]
    if keys.size == 0:
        return {}
    centers = (keys + 0.5) * config.r_n
    tree = spatial.cKDTree(points)
    members = tree.query_ball_point(centers, config.radius)
    check = validate_covers_enabled() if validate is None else validate
    counts: Dict[Tuple[int, ...], int] = {}
    for key, idx in zip(keys, members):
        if not idx:
            continue
        times = path.t0 + path.dt * np.sort(np.asarray(idx, dtype=np.int64))
        chosen = _greedy_times(times, config.t_n, path.dt)
        if check:
            _assert_preimage_cover(times, chosen, config.t_n, path.dt)
        counts[tuple(int(k) for k in key)] = len(chosen)
    return counts


# ---------------------------------------------------------------------------
# Ensemble statistics
# ---------------------------------------------------------------------------

def tail_slope(counts: np.ndarray) -> Tuple[float, float]:
    """Slope and stderr of log P(count > k) against k over the k with positive tail."""
    counts = np.asarray(counts)
    if counts.size == 0:
        return math.nan, math.nan
    ks = np.arange(1, int(counts.max()))
    tails = np.array([np.mean(counts > k) for k in ks])
    keep = tails > 0
    if keep.sum() < 3:
        return math.nan, math.nan
    slope, _, stderr = linear_fit(ks[keep], np.log(tails[keep]))
    return slope, stderr


def _summarize(n: int, family_size: int, per_path: List[np.ndarray]) -> CoverRow:
    pooled = np.concatenate([np.asarray(c, dtype=np.int64) for c in per_path]) if per_path else np.zeros(0)
    if pooled.size == 0:
        return CoverRow(n, family_size, 0, 0.0, 0.0, math.nan, math.nan, 0.0)
    slope, stderr = tail_slope(pooled)
    maxima = [int(c.max()) if np.size(c) else 0 for c in per_path]
    return CoverRow(n=n, family_size=family_size, max_count=int(pooled.max()),
                    q50=float(np.quantile(pooled, 0.5)), q95=float(np.quantile(pooled, 0.95)),
                    tail_slope=slope, tail_slope_stderr=stderr, mean_path_max=float(np.mean(maxima)))


def covering_statistics(spec: ProcessSpec, mode: str, ns: Sequence[int], gamma: float, n_paths: int,
                        rng: Union[RngStream, int], n_steps: int, T: float = 1.0,
                        x0: Optional[Sequence[float]] = None, box: float = 1.0, threads: int = 1,
                        validate: Optional[bool] = None) -> List[CoverRow]:
    """Per-n cover-count summaries over ``n_paths`` paths.

    Each path is simulated once on [0, T] and reused for every n. Preimage
    statistics pool the cubes the path actually visits.
    """
    if mode not in ("image", "preimage"):
        raise PreconditionError(f"covering mode must be 'image' or 'preimage', got {mode!r}")
    stream = as_stream(rng)
    ns = [int(n) for n in ns]

    def one_path(p: int) -> Dict[int, np.ndarray]:
        path = simulate(spec, x0, T, n_steps, stream.spawn("cover", p))
        out = {}
        for n in ns:
            if mode == "image":
                out[n] = image_cover_counts(path, dyadic_image_config(n, gamma, T), validate)
            else:
                cfg = dyadic_preimage_config(n, gamma, T, spec.dim, box)
                out[n] = np.fromiter(preimage_cover_counts(path, cfg, validate).values(), dtype=np.int64)
        return out

    results = ordered_map(one_path, range(n_paths), threads)
    rows = []
    for n in ns:
        size = (dyadic_image_config(n, gamma, T).family_size if mode == "image"
                else dyadic_preimage_config(n, gamma, T, spec.dim, box).family_size)
        row = _summarize(n, size, [res[n] for res in results])
        logger.info(f"{mode} covers n={n}: max={row.max_count} q95={row.q95} tail_slope={row.tail_slope:.3f}")
        rows.append(row)
    return rows
