"""Empirical verifiers for the tail, ball-probability, maximal-inequality and moment hypotheses

Every Monte Carlo verdict uses the same conventions: binomial standard
errors, an allowance of 3 sigma (never below three samples' worth of
resolution) and KS level 1e-3 for distributional tests. Path suprema are
taken over grid times, which biases the estimated tails low.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, stats

from src.lab.errors import PreconditionError, QuadratureError
from src.lab.montecarlo import (
    KS_LEVEL,
    SIGMA_LEVEL,
    allowance,
    bernoulli_estimate,
    linear_fit,
    mean_estimate,
    ratio_std_err,
)
from src.lab.paths import simulate_reduced
from src.lab.processes import ProcessSpec, StableLike, describe, has_exact_increments, is_space_homogeneous, symbol_of
from src.lab.quadrature import QuadratureConfig, ball_volume, geometric_edges, panel_rule, sphere_rule, tensor_rule
from src.lab.reports import BoundCheckReport
from src.lab.rng import RngStream, as_stream
from src.lab.symbols import GrowthConditionSpec, StableLikeKernel, StateDependentSymbol

logger = logging.getLogger(__name__)

SUP_STEPS = 256
HITTING_STEPS = 4096
SIMPSON_NODES = 65
BALL_SLACK = 4.0
MOMENT_FACTOR = 5.0
WEAK_DECAY = 0.05
SATURATION = 0.999

BallProbFn = Callable[[float, np.ndarray, np.ndarray, float], float]


@dataclass(frozen=True)
class TailEstimate:
    t: float
    threshold: float
    prob_hat: float
    n_mc: int
    std_err: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class BallProbEstimate:
    t: float
    x: Tuple[float, ...]
    y: Tuple[float, ...]
    r: float
    prob_hat: float
    n_mc: int
    std_err: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class MClassSpec:
    """Parameters of the class alpha(h, a) <= C (h a^(-1/H))^beta for h < h0, a < a0."""

    H: float
    beta: float
    C: float
    h0: float = 1.0
    a0: float = 1.0

    def __post_init__(self):
        if min(self.H, self.beta, self.C, self.h0, self.a0) <= 0:
            raise PreconditionError("M-class parameters must all be positive")


@dataclass(frozen=True)
class SymbolSearch:
    """Grid sizes for the sup of |q(y, xi)| over |y - x| <= r, |xi| <= 1/r."""

    n_radial: int = 4
    n_angular: int = 8
    n_spatial: int = 3
    tol: float = 1e-3
    max_refine: int = 4


class BallBracket(NamedTuple):
    lower: float
    upper: float
    growth_lower: Optional[float] = None
    growth_upper: Optional[float] = None


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def _start(x: Optional[Sequence[float]], d: int) -> np.ndarray:
    return np.zeros(d) if x is None else np.asarray(x, dtype=float).reshape(d)


def default_x_grid(spec: ProcessSpec) -> List[np.ndarray]:
    """Spot-check states: the origin for homogeneous families, else {0, e1, 2.5 e1}."""
    d = spec.dim
    if is_space_homogeneous(spec):
        return [np.zeros(d)]
    e1 = np.eye(d)[0]
    return [np.zeros(d), e1, 2.5 * e1]


def _x_grid(spec: ProcessSpec, x_grid: Optional[Sequence[Sequence[float]]]) -> List[np.ndarray]:
    if x_grid is None:
        return default_x_grid(spec)
    return [_start(x, spec.dim) for x in x_grid]


def _endpoint_steps(spec: ProcessSpec, n_steps: int) -> int:
    return 1 if has_exact_increments(spec) else n_steps


def _sup_sample(spec: ProcessSpec, start: np.ndarray, t: float, n_steps: int, n_mc: int,
                rng: RngStream, threads: int) -> np.ndarray:
    return simulate_reduced(spec, start, t, n_steps, n_mc, rng,
                            lambda block: np.linalg.norm(block - start, axis=2).max(axis=1), threads=threads)


def _endpoint_distance(spec: ProcessSpec, start: np.ndarray, center: np.ndarray, t: float, n_steps: int,
                       n_mc: int, rng: RngStream, threads: int) -> np.ndarray:
    return simulate_reduced(spec, start, t, _endpoint_steps(spec, n_steps), n_mc, rng,
                            lambda block: np.linalg.norm(block[:, -1, :] - center, axis=1), threads=threads)


def _check_n_mc(n_mc: int) -> None:
    if n_mc < 100:
        raise PreconditionError(f"n_mc must be >= 100, got {n_mc}")


def _spec_info(spec: ProcessSpec, **params: Any) -> Dict[str, Any]:
    return {"process": describe(spec), **params}


# ---------------------------------------------------------------------------
# Sup-displacement tails
# ---------------------------------------------------------------------------

def estimate_max_tail(spec: ProcessSpec, x: Optional[Sequence[float]], t: float, threshold: float, n_mc: int,
                      rng: Union[RngStream, int], n_steps: int = SUP_STEPS, threads: int = 1) -> TailEstimate:
    """P^x{sup_{s <= t} |X_s - x| >= threshold} from grid suprema."""
    if not t > 0:
        raise PreconditionError(f"t must be positive, got {t}")
    _check_n_mc(n_mc)
    start = _start(x, spec.dim)
    sups = _sup_sample(spec, start, t, n_steps, n_mc, as_stream(rng), threads)
    p, se = bernoulli_estimate(sups >= threshold)
    return TailEstimate(t=t, threshold=threshold, prob_hat=p, n_mc=n_mc, std_err=se)


def predicted_a1_exponent(beta: float, gamma: float, H: float) -> float:
    """Decay exponent beta (1 - gamma / H) implied by M-class membership."""
    return beta * (1.0 - gamma / H)


def check_a1(spec: ProcessSpec, H: float, gamma_list: Sequence[float], t_ladder: Sequence[float], n_mc: int,
             rng: Union[RngStream, int], x: Optional[Sequence[float]] = None, beta: Optional[float] = None,
             n_steps: int = 64, threads: int = 1) -> BoundCheckReport:
    """Fit P{sup |X - x| >= t^gamma} <= C t^eta per gamma by log-log regression."""
    gammas = [float(g) for g in gamma_list]
    ts = [float(t) for t in t_ladder]
    if any(g >= H for g in gammas):
        raise PreconditionError(f"every gamma must be below H = {H}")
    _check_n_mc(n_mc)
    stream = as_stream(rng)
    start = _start(x, spec.dim)

    cells: List[Dict[str, Any]] = []
    lhs: List[float] = []
    errs: List[float] = []
    for t in ts:
        sups = _sup_sample(spec, start, t, n_steps, n_mc, stream.spawn("a1", t), threads)
        for g in gammas:
            p, se = bernoulli_estimate(sups >= t ** g)
            cells.append({"gamma": g, "t": t, "threshold": t ** g})
            lhs.append(p)
            errs.append(se)
    if lhs and all(p >= SATURATION for p in lhs):
        raise PreconditionError("tail probabilities saturate at 1; use smaller gamma (a larger gap H - gamma) "
                                "or a smaller t ladder")

    rhs = [0.0] * len(cells)
    fitted: Dict[str, float] = {}
    flags: List[str] = []
    extra: Dict[str, Any] = {"eta_hat": {}, "grid_sup_bias": "low"}
    failed = False
    for g in gammas:
        idx = [i for i, c in enumerate(cells) if c["gamma"] == g]
        t_arr = np.array([cells[i]["t"] for i in idx])
        p_arr = np.array([lhs[i] for i in idx])
        slack = np.array([allowance(errs[i], n_mc) for i in idx])
        positive = p_arr > 0
        if not positive.any():
            eta, eta_se, c_fit = math.inf, 0.0, 0.0
            bound = np.zeros_like(p_arr)
        elif positive.sum() < 2:
            eta, eta_se = 0.0, math.inf
            c_fit = float(p_arr.max())
            bound = np.full_like(p_arr, c_fit)
            flags.append(f"insufficient-data:gamma={g}")
        else:
            eta, intercept, eta_se = linear_fit(np.log(t_arr[positive]), np.log(p_arr[positive]))
            c_fit = max(math.exp(intercept), float(np.max((p_arr - slack) / t_arr ** eta)), 0.0)
            bound = c_fit * t_arr ** eta
        for j, i in enumerate(idx):
            rhs[i] = float(bound[j])
        if eta < WEAK_DECAY:
            flags.append(f"weak-decay:gamma={g}")
        if eta + SIGMA_LEVEL * eta_se <= 0:
            failed = True
        fitted[f"eta[gamma={g}]"] = eta
        fitted[f"C[gamma={g}]"] = c_fit
        extra["eta_hat"][str(g)] = eta
        if beta is not None:
            extra.setdefault("eta_predicted", {})[str(g)] = predicted_a1_exponent(beta, g, H)
    violations = [i for i in range(len(cells)) if lhs[i] - allowance(errs[i], n_mc) > rhs[i] * (1 + 1e-12)]
    report = BoundCheckReport(check="a1", grid=cells, lhs=lhs, rhs=rhs, std_err=errs, violations=violations,
                              fitted_constants=fitted, flags=flags,
                              spec=_spec_info(spec, H=H, n_mc=n_mc, n_steps=n_steps), extra=extra, failed=failed)
    logger.info(f"a1 check on {spec.family}: eta_hat={extra['eta_hat']} passed={report.passed}")
    return report


# ---------------------------------------------------------------------------
# Exit probabilities and the M class
# ---------------------------------------------------------------------------

def _alpha_estimate(spec: ProcessSpec, h: float, a: float, n_mc: int, stream: RngStream,
                    xs: List[np.ndarray], s_points: int, n_steps: int, threads: int) -> Tuple[float, float]:
    if h == 0:
        return 0.0, 0.0
    if has_exact_increments(spec):
        steps = s_points
    else:
        steps = s_points * max(1, math.ceil(n_steps / s_points))
    stride = steps // s_points
    best, best_se = 0.0, 0.0
    for k, x in enumerate(xs):
        exits = simulate_reduced(
            spec, x, h, steps, n_mc, stream.spawn("alpha", k),
            lambda block, x=x: np.linalg.norm(block[:, stride::stride, :] - x, axis=2) > a, threads=threads)
        probs = exits.mean(axis=0)
        j = int(np.argmax(probs))
        if probs[j] >= best:
            best = float(probs[j])
            best_se = math.sqrt(best * (1.0 - best) / n_mc)
    return best, best_se


def estimate_alpha_function(spec: ProcessSpec, h: float, a: float, n_mc: int, rng: Union[RngStream, int],
                            x_grid: Optional[Sequence[Sequence[float]]] = None, s_points: int = 8,
                            n_steps: int = 64, threads: int = 1) -> float:
    """sup over the x-grid and s in (0, h] of P(s, x, B(x, a)^c)."""
    if h < 0 or not a > 0:
        raise PreconditionError("need h >= 0 and a > 0")
    value, _ = _alpha_estimate(spec, h, a, n_mc, as_stream(rng), _x_grid(spec, x_grid), s_points, n_steps, threads)
    return value


def check_M_class(spec: ProcessSpec, mspec: MClassSpec, grid: Sequence[Tuple[float, float]], n_mc: int,
                  rng: Union[RngStream, int], x_grid: Optional[Sequence[Sequence[float]]] = None,
                  s_points: int = 8, n_steps: int = 64, threads: int = 1) -> BoundCheckReport:
    cells = []
    for h, a in grid:
        ratio = h * a ** (-1.0 / mspec.H)
        if not (ratio < 1.0 and h < mspec.h0 and a < mspec.a0):
            raise PreconditionError(
                f"grid point (h={h}, a={a}) needs h a^(-1/H) < 1, h < {mspec.h0} and a < {mspec.a0}")
        cells.append({"h": float(h), "a": float(a), "scaled": ratio})
    stream = as_stream(rng)
    xs = _x_grid(spec, x_grid)
    lhs, errs, rhs = [], [], []
    fitted_c = 0.0
    for i, cell in enumerate(cells):
        p, se = _alpha_estimate(spec, cell["h"], cell["a"], n_mc, stream.spawn("mclass", i), xs,
                                s_points, n_steps, threads)
        shape = cell["scaled"] ** mspec.beta
        lhs.append(p)
        errs.append(se)
        rhs.append(mspec.C * shape)
        fitted_c = max(fitted_c, (p - allowance(se, n_mc)) / shape)
    violations = [i for i in range(len(cells)) if lhs[i] - allowance(errs[i], n_mc) > rhs[i]]
    return BoundCheckReport(check="mclass", grid=cells, lhs=lhs, rhs=rhs, std_err=errs, violations=violations,
                            fitted_constants={"C": fitted_c},
                            spec=_spec_info(spec, H=mspec.H, beta=mspec.beta, C=mspec.C, h0=mspec.h0,
                                            a0=mspec.a0, x_grid=[x.tolist() for x in xs], n_mc=n_mc))


def verify_ottaviani(spec: ProcessSpec, x: Optional[Sequence[float]], h: float, a: float, n_mc: int,
                     rng: Union[RngStream, int], x_grid: Optional[Sequence[Sequence[float]]] = None,
                     s_points: int = 8, n_steps: int = 64, threads: int = 1) -> BoundCheckReport:
    """P{sup_{s <= h} |X_s - x| > a} <= P{|X_h - x| > a/2} / (1 - alpha(h, a/2)).

    The three estimates use independent streams and are combined by the
    delta method.
    """
    _check_n_mc(n_mc)
    stream = as_stream(rng)
    start = _start(x, spec.dim)
    sups = _sup_sample(spec, start, h, n_steps, n_mc, stream.spawn("ottaviani", "sup"), threads)
    lhs, lhs_se = bernoulli_estimate(sups > a)
    ends = _endpoint_distance(spec, start, start, h, n_steps, n_mc, stream.spawn("ottaviani", "end"), threads)
    p_end, p_se = bernoulli_estimate(ends > a / 2.0)
    alpha_hat, alpha_se = _alpha_estimate(spec, h, a / 2.0, n_mc, stream.spawn("ottaviani", "alpha"),
                                          _x_grid(spec, x_grid), s_points, n_steps, threads)
    if alpha_hat >= 1.0:
        raise PreconditionError(f"alpha(h, a/2) estimate is {alpha_hat}; the Ottaviani bound needs it below 1")
    rhs = p_end / (1.0 - alpha_hat)
    rhs_se = ratio_std_err(p_end, p_se, alpha_hat, alpha_se)
    combined = math.sqrt(lhs_se ** 2 + rhs_se ** 2)
    violated = lhs - rhs > allowance(combined, n_mc)
    return BoundCheckReport(
        check="ottaviani", grid=[{"h": h, "a": a}], lhs=[lhs], rhs=[rhs], std_err=[combined],
        violations=[0] if violated else [],
        fitted_constants={"alpha_hat": alpha_hat, "endpoint_tail": p_end},
        spec=_spec_info(spec, x=start.tolist(), n_mc=n_mc, n_steps=n_steps),
        extra={"lhs_stderr": lhs_se, "rhs_stderr": rhs_se},
    )


# ---------------------------------------------------------------------------
# Symbol-based maximal inequality
# ---------------------------------------------------------------------------

def _search_directions(d: int, n: int) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        theta = 2.0 * math.pi * np.arange(n) / n
        return np.stack([np.cos(theta), np.sin(theta)], axis=1)
    gen = np.random.Generator(np.random.Philox(key=np.array([d, n], dtype=np.uint64)))
    z = gen.standard_normal((n * n, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return np.vstack([np.eye(d), -np.eye(d), z])


def _search_states(x: np.ndarray, r: float, n: int, homogeneous: bool) -> np.ndarray:
    if homogeneous:
        return x[None, :]
    n = n if n % 2 else n + 1
    axis = np.linspace(-1.0, 1.0, n)
    lattice = np.stack(np.meshgrid(*([axis] * x.shape[0]), indexing="ij"), axis=-1).reshape(-1, x.shape[0])
    lattice = lattice[np.linalg.norm(lattice, axis=1) <= 1.0 + 1e-12]
    return x + r * lattice


def _symbol_sup(symbol: StateDependentSymbol, x: np.ndarray, r: float, search: SymbolSearch, level: int) -> float:
    k = 2 ** level
    n_rad = search.n_radial * k
    radial = np.arange(1, n_rad + 1) / (n_rad * r)
    dirs = _search_directions(symbol.dim, search.n_angular * k)
    xis = (radial[:, None, None] * dirs[None, :, :]).reshape(-1, symbol.dim)
    best = 0.0
    for y in _search_states(x, r, search.n_spatial * k, symbol.homogeneous):
        values = np.abs(np.asarray(symbol(y, xis), dtype=complex).reshape(-1))
        best = max(best, float(values.max()))
    return best


def pruitt_upper_bound(symbol: StateDependentSymbol, x: Optional[Sequence[float]], t: float, r: float,
                       xi_search: Optional[SymbolSearch] = None) -> float:
    """t sup_{|y - x| <= r} sup_{|xi| <= 1/r} |q(y, xi)|, refined until two levels agree."""
    if not t > 0 or not r > 0:
        raise PreconditionError("pruitt_upper_bound needs t > 0 and r > 0")
    search = xi_search or SymbolSearch()
    start = _start(x, symbol.dim)
    previous = _symbol_sup(symbol, start, r, search, 0)
    for level in range(1, search.max_refine + 1):
        current = _symbol_sup(symbol, start, r, search, level)
        if abs(current - previous) <= search.tol * max(current, 1e-300):
            return t * current
        previous = current
    raise QuadratureError("symbol sup search did not settle", (t * previous, t * current))


def check_pruitt(spec: ProcessSpec, grid: Sequence[Tuple[float, float]], n_mc: int, rng: Union[RngStream, int],
                 symbol: Optional[StateDependentSymbol] = None, x: Optional[Sequence[float]] = None,
                 xi_search: Optional[SymbolSearch] = None, n_steps: int = 64, threads: int = 1) -> BoundCheckReport:
    """Tail of the sup against one fitted multiple of the symbol bound."""
    _check_n_mc(n_mc)
    symbol = symbol or symbol_of(spec)
    stream = as_stream(rng)
    start = _start(x, spec.dim)
    sups: Dict[float, np.ndarray] = {}
    cells, lhs, errs, bounds = [], [], [], []
    for t, r in grid:
        t, r = float(t), float(r)
        if t not in sups:
            sups[t] = _sup_sample(spec, start, t, n_steps, n_mc, stream.spawn("pruitt", t), threads)
        p, se = bernoulli_estimate(sups[t] >= r)
        cells.append({"t": t, "r": r})
        lhs.append(p)
        errs.append(se)
        bounds.append(pruitt_upper_bound(symbol, start, t, r, xi_search))
    c_fit = 0.0
    for p, se, b in zip(lhs, errs, bounds):
        excess = p - allowance(se, n_mc)
        if excess > 0:
            c_fit = max(c_fit, excess / b if b > 0 else math.inf)
    rhs = [c_fit * b if math.isfinite(c_fit) else math.inf for b in bounds]
    violations = [i for i in range(len(cells)) if not math.isfinite(c_fit) and bounds[i] == 0]
    return BoundCheckReport(check="pruitt", grid=cells, lhs=lhs, rhs=rhs, std_err=errs, violations=violations,
                            fitted_constants={"C": c_fit}, flags=["grid-sup-biased-low"],
                            spec=_spec_info(spec, x=start.tolist(), n_mc=n_mc, n_steps=n_steps),
                            extra={"symbol_bound": bounds}, failed=not math.isfinite(c_fit))


# ---------------------------------------------------------------------------
# Ball probabilities
# ---------------------------------------------------------------------------

def estimate_ball_probability(spec: ProcessSpec, t: float, x: Sequence[float], y: Sequence[float], r: float,
                              n_mc: int, rng: Union[RngStream, int], n_steps: int = SUP_STEPS,
                              threads: int = 1) -> BallProbEstimate:
    """P(t, y, B(x, r)) from endpoint draws started at y."""
    if not t > 0:
        raise PreconditionError(f"t must be positive, got {t}")
    _check_n_mc(n_mc)
    center, start = _start(x, spec.dim), _start(y, spec.dim)
    dist = _endpoint_distance(spec, start, center, t, n_steps, n_mc, as_stream(rng), threads)
    p, se = bernoulli_estimate(dist <= r)
    return BallProbEstimate(t=t, x=tuple(center.tolist()), y=tuple(start.tolist()), r=r,
                            prob_hat=p, n_mc=n_mc, std_err=se)


def ball_shapes(t: float, r: float, H: float, eps: float, zeta: float, d: int) -> Tuple[float, float]:
    """Lower and upper power-law shapes min{1, (r / t^(H -+ zeta))^(d +- eps)}."""
    lower = min(1.0, (r / t ** (H - zeta)) ** (d + eps))
    upper = min(1.0, (r / t ** (H + zeta)) ** (d - eps))
    return lower, upper


def check_ball_bounds(spec: ProcessSpec, H: float, eps: float, zeta: float, grid: Sequence[Tuple[float, float]],
                      n_mc: int, rng: Union[RngStream, int], x: Optional[Sequence[float]] = None,
                      r0: Optional[float] = None, slack: float = BALL_SLACK, n_steps: int = SUP_STEPS,
                      threads: int = 1) -> BoundCheckReport:
    """Two-sided power-law bounds on ball probabilities.

    C1 and C2 are calibrated on the grid slice with t closest to 1; a cell
    fails when its probability leaves [C1 shape / slack, C2 shape * slack]
    by more than the Monte Carlo allowance.
    """
    d = spec.dim
    stream = as_stream(rng)
    center = _start(x, d)
    rows = []
    for i, (t, r) in enumerate(grid):
        t, r = float(t), float(r)
        if r0 is not None and r > r0:
            raise PreconditionError(f"radius {r} exceeds r0 = {r0}")
        edge = center.copy()
        edge[0] += r
        mid = estimate_ball_probability(spec, t, center, center, r, n_mc, stream.spawn("ball", i, "center"),
                                        n_steps, threads)
        rim = estimate_ball_probability(spec, t, center, edge, r, n_mc, stream.spawn("ball", i, "edge"),
                                        n_steps, threads)
        low = mid if mid.prob_hat <= rim.prob_hat else rim
        lo_shape, up_shape = ball_shapes(t, r, H, eps, zeta, d)
        rows.append((t, r, low, mid, lo_shape, up_shape))

    t_ref = min({row[0] for row in rows}, key=lambda t: abs(math.log(t))) if rows else 1.0
    ref = [row for row in rows if row[0] == t_ref]
    c1 = min((row[2].prob_hat / row[4] for row in ref), default=0.0)
    c2 = max((row[3].prob_hat / row[5] for row in ref), default=0.0)
    flags = ["degenerate-calibration"] if ref and c1 == 0.0 else []

    cells, lhs, rhs, errs, violations = [], [], [], [], []
    c1_fit, c2_fit = math.inf, 0.0
    for t, r, low, mid, lo_shape, up_shape in rows:
        lo_allow = allowance(low.std_err, n_mc)
        up_allow = allowance(mid.std_err, n_mc)
        c1_fit = min(c1_fit, (low.prob_hat + lo_allow) / lo_shape)
        c2_fit = max(c2_fit, (mid.prob_hat - up_allow) / up_shape)
        cells.append({"t": t, "r": r, "bound": "lower", "start": "center" if low is mid else "boundary"})
        lhs.append(low.prob_hat)
        rhs.append(c1 / slack * lo_shape)
        errs.append(low.std_err)
        if low.prob_hat + lo_allow < rhs[-1]:
            violations.append(len(cells) - 1)
        cells.append({"t": t, "r": r, "bound": "upper", "start": "center"})
        lhs.append(mid.prob_hat)
        rhs.append(c2 * slack * up_shape)
        errs.append(mid.std_err)
        if mid.prob_hat - up_allow > rhs[-1]:
            violations.append(len(cells) - 1)
    return BoundCheckReport(
        check="ball", grid=cells, lhs=lhs, rhs=rhs, std_err=errs, violations=violations,
        fitted_constants={"C1": c1, "C2": c2, "C1_global": c1_fit if rows else 0.0, "C2_global": c2_fit},
        flags=flags, spec=_spec_info(spec, H=H, eps=eps, zeta=zeta, slack=slack, t_ref=t_ref, n_mc=n_mc),
    )


def brownian_ball_probability(s: float, y: Sequence[float], center: Sequence[float], r: float,
                              sigma: float = 1.0) -> float:
    """P(|y + sigma B_s - center| <= r), exact via the (noncentral) chi-square law."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    gap = float(np.sum((y - np.atleast_1d(np.asarray(center, dtype=float))) ** 2))
    if s <= 0:
        return 1.0 if gap <= r * r else 0.0
    scale = sigma * sigma * s
    if gap == 0.0:
        return float(stats.chi2.cdf(r * r / scale, y.size))
    return float(stats.ncx2.cdf(r * r / scale, y.size, gap / scale))


# ---------------------------------------------------------------------------
# Parseval bracket
# ---------------------------------------------------------------------------

def _tent_transform(xi: np.ndarray, r: float) -> np.ndarray:
    """(1 - cos 2 r xi) / (2 pi r xi^2), the density-normalized transform of a tent of half-width 2r."""
    return (r / math.pi) * np.sinc(r * xi / math.pi) ** 2


def _real_exponent(exponent: Callable[[np.ndarray], Any], rows: np.ndarray) -> np.ndarray:
    values = np.asarray(exponent(rows), dtype=complex).reshape(-1)
    if np.any(np.abs(values.imag) > 1e-8 * np.maximum(np.abs(values), 1.0)):
        raise PreconditionError("the Parseval bracket needs a symmetric (real) exponent")
    return values.real


def _frequency_box(psi: Callable[[np.ndarray], np.ndarray], t: float, r: float, d: int) -> Tuple[float, float]:
    probes = np.vstack([np.eye(d), np.full((1, d), 1.0 / math.sqrt(d))])
    xi_max = 2.0 * math.pi / r
    for _ in range(64):
        if np.all(np.exp(-t * psi(xi_max * probes)) < 1e-13):
            break
        xi_max *= 2.0
    else:
        raise QuadratureError("exp(-t psi) does not decay; the frequency box cannot be closed",
                              (xi_max / 2.0, xi_max))
    peak = xi_max
    while peak > 1e-12 * xi_max and t * float(psi(peak * probes).min()) > 1.0:
        peak /= 2.0
    return xi_max, min(math.pi / (2.0 * r), peak / 2.0)


def _frequency_edges(xi_max: float, width: float) -> np.ndarray:
    panels = max(1, int(math.ceil(xi_max / width)))
    outer = np.linspace(width, panels * width, panels)
    inner = geometric_edges(width * 4.0 ** -10, width, ratio=4.0)
    half = np.concatenate([[0.0], inner, outer[1:]])
    return np.concatenate([-half[::-1], half[1:]])


def _parseval_integral(psi: Callable[[np.ndarray], np.ndarray], t: float, r_tent: float, edges: np.ndarray,
                       d: int, order: int, quad: QuadratureConfig) -> float:
    nodes, weights = panel_rule(edges, order)
    points, w = tensor_rule(nodes, weights, d, quad.max_nodes)
    tent = np.prod(_tent_transform(points, r_tent), axis=1)
    return float(w @ (np.exp(-t * psi(points)) * tent))


def _checked_integral(psi: Callable[[np.ndarray], np.ndarray], t: float, r_tent: float, edges: np.ndarray,
                      d: int, quad: QuadratureConfig) -> float:
    order = quad.base_order + 2
    coarse = _parseval_integral(psi, t, r_tent, edges, d, order, quad)
    fine = _parseval_integral(psi, t, r_tent, edges, d, 2 * order, quad)
    if abs(coarse - fine) > quad.tol * max(abs(fine), 1e-300) + 1e-14:
        raise QuadratureError("Parseval quadrature did not converge", (coarse, fine))
    return fine


def _inner_ball_integral(psi: Callable[[np.ndarray], np.ndarray], t: float, r_tent: float, tau: float, d: int,
                         quad: QuadratureConfig) -> float:
    """Integral of exp(-t psi) times the tent transform over |xi| <= tau, in polar coordinates.

    Above d = 3 there is no sphere rule; the integrand is then bounded by the
    tent peak (r_tent / pi)^d, which still over-estimates the integral.
    """
    if d > 3:
        return (r_tent / math.pi) ** d * ball_volume(d, tau)
    width = min(tau, math.pi / (2.0 * r_tent))
    panels = max(1, int(math.ceil(tau / width)))
    edges = np.concatenate([[0.0], geometric_edges(width * 4.0 ** -10, width, ratio=4.0),
                            np.linspace(width, tau, panels)[1:]])

    def integral(order: int, angular: int) -> float:
        rho, w_rho = panel_rule(edges, order)
        dirs, w_dir = sphere_rule(d, angular)
        points = (rho[:, None, None] * dirs[None, :, :]).reshape(-1, d)
        weights = (w_rho * rho ** (d - 1))[:, None] * w_dir[None, :]
        tent = np.prod(_tent_transform(points, r_tent), axis=1)
        return float(weights.ravel() @ (np.exp(-t * psi(points)) * tent))

    order = quad.base_order + 2
    coarse = integral(order, quad.angular(0))
    fine = integral(2 * order, quad.angular(1))
    if abs(coarse - fine) > quad.tol * max(abs(fine), 1e-300) + 1e-14:
        raise QuadratureError("inner-ball Parseval quadrature did not converge", (coarse, fine))
    return fine


def ball_probability_via_exponent(exponent: Callable[[np.ndarray], Any], t: float, r: float, d: int,
                                  quad: Optional[QuadratureConfig] = None,
                                  growth: Optional[GrowthConditionSpec] = None) -> BallBracket:
    """Bracket of P(|X_t| <= r) from the exponent by Parseval against tent functions.

    The upper value integrates against the tent of half-width 2r (times 2^d),
    the lower one against the tent for r / (2 sqrt d), whose support cube sits
    inside the ball. With ``growth`` the same integrals are also taken with the
    power laws of the growth condition in place of psi; the growth lower value
    drops the part over |xi| <= tau, where the power laws need not hold.
    """
    if not t > 0 or not r > 0:
        raise PreconditionError("ball_probability_via_exponent needs t > 0 and r > 0")
    quad = quad or QuadratureConfig()
    r_low = r / (2.0 * math.sqrt(d))

    def psi(rows: np.ndarray) -> np.ndarray:
        return _real_exponent(exponent, np.asarray(rows, dtype=float).reshape(-1, d))

    xi_max, width = _frequency_box(psi, t, r, d)
    edges = _frequency_edges(xi_max, width)
    upper = 2.0 ** d * _checked_integral(psi, t, r, edges, d, quad)
    lower = _checked_integral(psi, t, r_low, edges, d, quad)
    if growth is None:
        return BallBracket(lower=lower, upper=upper)

    def psi_low(rows: np.ndarray) -> np.ndarray:
        return np.linalg.norm(rows, axis=1) ** growth.lower_exponent / growth.K5

    def psi_high(rows: np.ndarray) -> np.ndarray:
        return growth.K5 * np.linalg.norm(rows, axis=1) ** growth.upper_exponent

    box_lo = _frequency_edges(*_frequency_box(psi_low, t, r, d))
    box_hi = _frequency_edges(*_frequency_box(psi_high, t, r, d))
    correction = 0.0 if growth.global_lower else (r / math.pi) ** d * ball_volume(d, growth.tau)
    growth_upper = 2.0 ** d * (_checked_integral(psi_low, t, r, box_lo, d, quad) + correction)
    growth_lower = _checked_integral(psi_high, t, r_low, box_hi, d, quad)
    # the power-law upper bound on psi holds only for |xi| >= tau, with or without global_lower
    inner = _inner_ball_integral(psi_high, t, r_low, growth.tau, d, quad)
    growth_lower = max(0.0, growth_lower - inner)
    return BallBracket(lower=lower, upper=upper, growth_lower=growth_lower, growth_upper=growth_upper)


# ---------------------------------------------------------------------------
# Stable-like density envelope
# ---------------------------------------------------------------------------

def stable_like_density_envelope(t: float, x: Sequence[float], y: Sequence[float], alpha: float, d: int) -> float:
    """min{t^(-d/alpha), t / |x - y|^(d + alpha)}."""
    dist = float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
    if dist == 0.0:
        return t ** (-d / alpha)
    return min(t ** (-d / alpha), t / dist ** (d + alpha))


def _envelope_radial(t: float, alpha: float, d: int, rho: np.ndarray) -> np.ndarray:
    """Antiderivative of min{t^(-d/alpha), t rho^(-d-alpha)} rho^(d-1) from 0."""
    knee = t ** (1.0 / alpha)
    inner = t ** (-d / alpha) * np.minimum(rho, knee) ** d / d
    safe = np.maximum(rho, knee)
    outer = t * (knee ** -alpha - safe ** -alpha) / alpha
    return inner + outer


def envelope_ball_probability(t: float, y: Sequence[float], x: Sequence[float], r: float, alpha: float, d: int,
                              C: float = 1.0, order: int = 64) -> Tuple[float, float]:
    """(C^-1, C) times the envelope integrated over B(x, r), ray by ray from y."""
    y = np.asarray(y, dtype=float).reshape(d)
    w = y - np.asarray(x, dtype=float).reshape(d)
    pole = w if np.any(w) else None
    dirs, weights = sphere_rule(d, order, pole=pole)
    b = dirs @ w
    disc = b ** 2 - float(w @ w) + r * r
    root = np.sqrt(np.clip(disc, 0.0, None))
    near = np.clip(-b - root, 0.0, None)
    far = np.clip(-b + root, 0.0, None)
    radial = np.where(disc > 0, _envelope_radial(t, alpha, d, far) - _envelope_radial(t, alpha, d, near), 0.0)
    integral = float(weights @ radial)
    return min(1.0, integral / C), min(1.0, C * integral)


def envelope_ball_sources(alpha: float, d: int, C: float = 1.0) -> Tuple[BallProbFn, BallProbFn]:
    """Upper and lower closed-form ball probabilities for a stable-like process."""
    def upper(s: float, y: np.ndarray, center: np.ndarray, r: float) -> float:
        return envelope_ball_probability(s, y, center, r, alpha, d, C)[1]

    def lower(s: float, y: np.ndarray, center: np.ndarray, r: float) -> float:
        return envelope_ball_probability(s, y, center, r, alpha, d, C)[0]

    return upper, lower


# ---------------------------------------------------------------------------
# Delayed hitting
# ---------------------------------------------------------------------------

def monte_carlo_ball_source(spec: ProcessSpec, n_mc: int, rng: Union[RngStream, int],
                            n_steps: int = SUP_STEPS, threads: int = 1) -> BallProbFn:
    """P(s, y, B(c, r)) by simulation, one child stream per (s, y, r)."""
    stream = as_stream(rng)

    def source(s: float, y: np.ndarray, center: np.ndarray, r: float) -> float:
        if s <= 0:
            return 1.0 if np.linalg.norm(np.asarray(y) - np.asarray(center)) <= r else 0.0
        labels = (float(s), float(r), *map(float, np.asarray(y).reshape(-1)))
        return estimate_ball_probability(spec, s, center, y, r, n_mc, stream.spawn("ball-source", *labels),
                                         n_steps, threads).prob_hat

    return source


def _time_integral(fn: Callable[[float], float], lo: float, hi: float, n_nodes: int) -> float:
    """Composite Simpson in log s on a geometric grid."""
    u = np.linspace(math.log(lo), math.log(hi), n_nodes)
    s = np.exp(u)
    values = np.array([fn(float(v)) for v in s])
    return float(integrate.simpson(values * s, x=u))


def hitting_probability_bound(ball_prob: Union[BallProbFn, ProcessSpec], x: Sequence[float], r: float, t: float,
                              T: float, lower_ball_prob: Optional[BallProbFn] = None,
                              boundary_dirs: Optional[Sequence[Sequence[float]]] = None,
                              n_nodes: int = SIMPSON_NODES, homogeneous: bool = False,
                              n_mc: int = 4000, rng: Union[RngStream, int, None] = None) -> float:
    """Ratio bounding P^x{X_s in B(x, r) for some s in [t, T]}.

    Numerator: integral over [t, 2T] of P(s, x, B(x, r)). Denominator: the
    smallest integral over [0, T - t] of P(s, y, B(x, r)) for y = x and y on
    the sphere of radius r. ``homogeneous`` uses the Lévy form with B(x, 2r)
    on top and y = x below.
    """
    if not 0 < t <= T / 2.0:
        raise PreconditionError(f"need 0 < t <= T/2, got t={t}, T={T}")
    if hasattr(ball_prob, "family"):
        ball_prob = monte_carlo_ball_source(ball_prob, n_mc, rng if rng is not None else RngStream(0))
    lower_prob = lower_ball_prob or ball_prob
    center = np.asarray(x, dtype=float).reshape(-1)
    d = center.size

    top_radius = 2.0 * r if homogeneous else r
    numerator = _time_integral(lambda s: ball_prob(s, center, center, top_radius), t, 2.0 * T, n_nodes)

    if homogeneous:
        starts = [center]
    else:
        dirs = np.vstack([np.eye(d), -np.eye(d)]) if boundary_dirs is None else np.asarray(boundary_dirs, float)
        dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
        starts = [center] + [center + r * u for u in dirs]
    span = T - t
    head = span * 2.0 ** -20
    denominators = []
    for y in starts:
        near_zero = head * lower_prob(head, y, center, r)
        denominators.append(near_zero + _time_integral(lambda s, y=y: lower_prob(s, y, center, r), head, span,
                                                       n_nodes))
    denominator = min(denominators)
    if denominator < 1e-12:
        raise PreconditionError(f"hitting-bound denominator {denominator:.3g} is below 1e-12")
    ratio = numerator / denominator
    logger.debug(f"hitting bound t={t} T={T} r={r}: {numerator:.4g} / {denominator:.4g} = {ratio:.4g}")
    return ratio


def delay_hitting_shape(r: float, t: float, H: float, d: int, eps: float, zeta: float) -> float:
    """r^(d - 1/(H - zeta) - eps) t^(1 - (H + zeta)(d - eps))."""
    return r ** (d - 1.0 / (H - zeta) - eps) * t ** (1.0 - (H + zeta) * (d - eps))


def estimate_hitting_probability(spec: ProcessSpec, x: Optional[Sequence[float]],
                                 target_center: Optional[Sequence[float]], r: float, t: float, T: float, n_mc: int,
                                 rng: Union[RngStream, int], n_steps: int = HITTING_STEPS,
                                 threads: int = 1) -> TailEstimate:
    """P^x{min over grid times s in [t, T] of |X_s - c| <= r}."""
    if not 0 <= t <= T:
        raise PreconditionError(f"need 0 <= t <= T, got t={t}, T={T}")
    _check_n_mc(n_mc)
    stream = as_stream(rng)
    start = _start(x, spec.dim)
    center = start if target_center is None else _start(target_center, spec.dim)
    pilot = simulate_reduced(spec, start, T, n_steps, min(n_mc, 64), stream.spawn("hitting", "pilot"),
                             lambda block: np.linalg.norm(np.diff(block, axis=1), axis=2), threads=threads)
    typical = float(np.median(pilot))
    if r < 4.0 * typical:
        raise PreconditionError(
            f"radius {r} is below 4x the typical step {typical:.3g}; refine the grid (n_steps={n_steps})")
    dt = T / n_steps
    first = min(n_steps, int(math.ceil(t / dt - 1e-9)))
    hits = simulate_reduced(spec, start, T, n_steps, n_mc, stream.spawn("hitting", "paths"),
                            lambda block: np.linalg.norm(block[:, first:, :] - center, axis=2).min(axis=1) <= r,
                            threads=threads)
    p, se = bernoulli_estimate(hits)
    return TailEstimate(t=t, threshold=r, prob_hat=p, n_mc=n_mc, std_err=se)


# ---------------------------------------------------------------------------
# Moments and self-similarity
# ---------------------------------------------------------------------------

def check_moment_bound(kernel: StableLikeKernel, p: float, T_ladder: Sequence[float], n_mc: int,
                       rng: Union[RngStream, int], x: Optional[Sequence[float]] = None, n_steps: int = 64,
                       factor: float = MOMENT_FACTOR, threads: int = 1) -> BoundCheckReport:
    """E sup_{s <= T} |X_s - x|^p / T^(p/alpha) must stay within ``factor`` across the ladder.

    All horizons reuse one stream, so for a constant kernel the ratios agree
    up to rounding.
    """
    alpha = kernel.alpha
    if not (0.0 < p < alpha and (p <= 1.0 or alpha < 2.0 * p)):
        raise PreconditionError(f"moment order p={p} needs 0 < p < alpha and (p <= 1 or alpha < 2p)")
    spec = StableLike(kernel)
    stream = as_stream(rng)
    start = _start(x, kernel.dim)
    cells, lhs, errs, ratios = [], [], [], []
    for T in T_ladder:
        T = float(T)
        sups = simulate_reduced(spec, start, T, n_steps, n_mc, stream,
                                lambda block: np.linalg.norm(block - start, axis=2).max(axis=1) ** p,
                                threads=threads)
        m, se = mean_estimate(sups)
        cells.append({"T": T})
        lhs.append(m)
        errs.append(se)
        ratios.append(m / T ** (p / alpha))
    floor = min(ratios) if ratios else 0.0
    rhs = [floor * factor * float(c["T"]) ** (p / alpha) for c in cells]
    violations = [i for i, q in enumerate(ratios) if q > floor * factor]
    spread = max(ratios) / floor if ratios and floor > 0 else (1.0 if ratios else 0.0)
    return BoundCheckReport(check="moment", grid=cells, lhs=lhs, rhs=rhs, std_err=errs, violations=violations,
                            fitted_constants={"C": max(ratios, default=0.0), "spread": spread},
                            spec={"kernel": dict(kernel.description), "alpha": alpha, "p": p, "factor": factor,
                                  "n_mc": n_mc, "n_steps": n_steps},
                            extra={"ratios": ratios}, failed=floor <= 0.0 and bool(ratios))


def check_self_similarity(spec: ProcessSpec, H: float, r_scale: float, t: float, n_mc: int,
                          rng: Union[RngStream, int], n_steps: int = SUP_STEPS, threads: int = 1) -> BoundCheckReport:
    """Two-sample KS of X(r t) r^-H against X(t), both from 0.

    Both the first coordinate and the norm are tested at level 1e-3 / 2.
    Streams are labelled by the time value, so r = 1 compares a sample with
    itself.
    """
    if not r_scale > 0 or not t > 0:
        raise PreconditionError("r_scale and t must be positive")
    _check_n_mc(n_mc)
    stream = as_stream(rng)
    origin = np.zeros(spec.dim)
    steps = _endpoint_steps(spec, n_steps)

    def endpoints(horizon: float) -> np.ndarray:
        return simulate_reduced(spec, origin, horizon, steps, n_mc, stream.spawn("selfsim", float(horizon)),
                                lambda block: block[:, -1, :], threads=threads)

    scaled = endpoints(r_scale * t) * r_scale ** (-H)
    plain = endpoints(t)
    level = KS_LEVEL / 2.0
    critical = math.sqrt(-math.log(level / 2.0) / 2.0) * math.sqrt(2.0 / n_mc)
    cells, lhs, pvals = [], [], []
    for name, a, b in (("coord1", scaled[:, 0], plain[:, 0]),
                       ("norm", np.linalg.norm(scaled, axis=1), np.linalg.norm(plain, axis=1))):
        res = stats.ks_2samp(a, b)
        cells.append({"statistic": name, "r": r_scale, "t": t})
        lhs.append(float(res.statistic))
        pvals.append(float(res.pvalue))
    violations = [i for i, pv in enumerate(pvals) if pv < level]
    return BoundCheckReport(check="selfsim", grid=cells, lhs=lhs, rhs=[critical] * len(cells),
                            std_err=[0.0] * len(cells), violations=violations,
                            spec=_spec_info(spec, H=H, r=r_scale, t=t, n_mc=n_mc),
                            extra={"pvalues": pvals, "level": level})
