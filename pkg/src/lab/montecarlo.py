"""Monte Carlo conventions: error bars, allowances, bootstrap and ordered fan-out"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, Tuple, TypeVar

import numpy as np
from scipy import stats

logger = logging.getLogger(__name__)

SIGMA_LEVEL = 3.0
KS_LEVEL = 1e-3
BOOTSTRAP_REPS = 500

T = TypeVar("T")
R = TypeVar("R")


def bernoulli_estimate(hits: np.ndarray) -> Tuple[float, float]:
    """Proportion and its binomial standard error."""
    hits = np.asarray(hits, dtype=bool)
    n = hits.size
    if n == 0:
        raise ValueError("no Monte Carlo samples")
    p = float(hits.mean())
    return p, math.sqrt(p * (1.0 - p) / n)


def mean_estimate(values: np.ndarray) -> Tuple[float, float]:
    values = np.asarray(values, dtype=float)
    n = values.size
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0


def allowance(std_err: float, n_mc: int) -> float:
    """3 sigma slack, never below three samples' worth of resolution."""
    return SIGMA_LEVEL * max(std_err, 1.0 / n_mc)


def ratio_std_err(p: float, se_p: float, q: float, se_q: float) -> float:
    """Delta-method standard error of p / (1 - q) for independent p and q."""
    denom = 1.0 - q
    return math.sqrt((se_p / denom) ** 2 + (p * se_q / denom ** 2) ** 2)


def linear_fit(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float, float]:
    """Least-squares slope, intercept and slope standard error."""
    res = stats.linregress(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return float(res.slope), float(res.intercept), float(res.stderr)


def bootstrap_interval(values: np.ndarray, statistic: Callable[[np.ndarray], float],
                       gen: np.random.Generator, reps: int = BOOTSTRAP_REPS,
                       level: float = 0.95) -> Tuple[float, float]:
    """Percentile bootstrap interval of ``statistic`` over resampled rows of ``values``."""
    values = np.asarray(values)
    n = values.shape[0]
    draws = gen.integers(0, n, size=(reps, n))
    boot = np.array([statistic(values[idx]) for idx in draws], dtype=float)
    boot = boot[np.isfinite(boot)]
    if boot.size == 0:
        return float("nan"), float("nan")
    tail = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(boot, [tail, 100.0 - tail])
    return float(lo), float(hi)


def ordered_map(fn: Callable[[T], R], items: Sequence[T], threads: int = 1) -> List[R]:
    """Apply ``fn`` to every item; results come back in item order whatever the pool size."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
