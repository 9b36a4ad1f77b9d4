"""Sample-path simulation on uniform time grids

Increment-based families (Brownian, stable, subordinator) draw one
time-major block of uniforms per simulation, so a shorter run on the same
stream is an exact prefix of a longer one. The state-dependent families use
an Euler scheme with compound-Poisson large jumps above the per-step cutoff
l = dt^(1/alpha) and a Gaussian stand-in for the small jumps when alpha > 1.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from src.lab.errors import PreconditionError, SimulationError
from src.lab.montecarlo import ordered_map
from src.lab.processes import (
    BrownianMotion,
    JumpDiffusion,
    ProcessSpec,
    StableLevy,
    StableLike,
    Subordinated,
    Subordinator,
    ZeroProcess,
)
from src.lab.quadrature import sphere_area
from src.lab.rng import RngStream, as_stream, gaussian_from_uniforms, open_uniforms
from src.lab.symbols import (
    JumpDiffusionSpec,
    StableLikeKernel,
    isotropic_density_constant,
    radial_cosine_integral,
    uniform_sphere_moment,
)
from src.settings import horizon_multiplier

logger = logging.getLogger(__name__)

CHUNK_SIZE = 512
_MIN_ACCEPTANCE = 1e-6
_MIN_CANDIDATES = 1000

RngLike = Union[RngStream, np.random.Generator, int]


@dataclass(frozen=True, eq=False)
class SamplePath:
    """Values of one path at t0, t0 + dt, ..., t0 + n dt."""

    t0: float
    dt: float
    values: np.ndarray
    start_x: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        start = np.asarray(self.start_x, dtype=float).reshape(values.shape[1])
        if not self.dt > 0:
            raise PreconditionError(f"grid step must be positive, got {self.dt}")
        if not np.all(np.isfinite(values)):
            raise SimulationError("simulated path contains non-finite values")
        if not np.array_equal(values[0], start):
            raise SimulationError("path does not start at start_x")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "start_x", start)

    @property
    def n_steps(self) -> int:
        return self.values.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)


def _generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return as_stream(rng).generator()


def _start(x0: Optional[Sequence[float]], dim: int) -> np.ndarray:
    if x0 is None:
        return np.zeros(dim)
    start = np.asarray(x0, dtype=float).reshape(-1)
    if start.shape[0] == 1 and dim > 1:
        start = np.full(dim, start[0])
    if start.shape[0] != dim:
        raise PreconditionError(f"start point has dimension {start.shape[0]}, process has {dim}")
    return start


def _check_grid(T: float, n_steps: int) -> float:
    if not T > 0:
        raise PreconditionError(f"horizon must be positive, got {T}")
    if n_steps < 1:
        raise PreconditionError(f"n_steps must be >= 1, got {n_steps}")
    return T / n_steps


# ---------------------------------------------------------------------------
# One-dimensional transforms
# ---------------------------------------------------------------------------

def stable_from_uniforms(alpha: float, beta: float, u_angle: np.ndarray, u_exp: np.ndarray) -> np.ndarray:
    """Standard stable draws with exponent |t|^alpha (1 - i beta sgn(t) tan(pi alpha / 2))."""
    v = math.pi * (u_angle - 0.5)
    w = -np.log(u_exp)
    if alpha == 2.0:
        return 2.0 * np.sqrt(w) * np.sin(v)
    if alpha == 1.0:
        if beta != 0.0:
            raise PreconditionError("skewed Cauchy increments are not supported; use a symmetric measure at alpha = 1")
        return np.tan(v)
    tan_term = math.tan(math.pi * alpha / 2.0)
    b = math.atan(beta * tan_term) / alpha
    s = (1.0 + beta ** 2 * tan_term ** 2) ** (1.0 / (2.0 * alpha))
    return (s * np.sin(alpha * (v + b)) / np.cos(v) ** (1.0 / alpha)
            * (np.cos(v - alpha * (v + b)) / w) ** ((1.0 - alpha) / alpha))


def positive_stable_from_uniforms(rho: float, u_angle: np.ndarray, u_exp: np.ndarray) -> np.ndarray:
    """Positive rho-stable draws with Laplace transform exp(-lambda^rho)."""
    if rho == 1.0:
        return np.ones_like(u_angle)
    u = math.pi * u_angle
    e = -np.log(u_exp)
    return (np.sin(rho * u) / np.sin(u) ** (1.0 / rho)
            * (np.sin((1.0 - rho) * u) / e) ** ((1.0 - rho) / rho))


def sample_stable_increment(alpha: float, scale_t: float, rng: RngLike,
                            size: Optional[int] = None) -> Union[float, np.ndarray]:
    """Symmetric alpha-stable increment over time ``scale_t`` (exponent scale_t |xi|^alpha)."""
    if not 0.0 < alpha <= 2.0:
        raise PreconditionError(f"stable index must lie in (0, 2], got {alpha}")
    if not scale_t > 0:
        raise PreconditionError("scale_t must be positive")
    gen = _generator(rng)
    shape = (1 if size is None else int(size), 2)
    u = open_uniforms(gen, shape)
    draws = scale_t ** (1.0 / alpha) * stable_from_uniforms(alpha, 0.0, u[:, 0], u[:, 1])
    return float(draws[0]) if size is None else draws


def sample_positive_stable(rho: float, scale_t: float, rng: RngLike,
                           size: Optional[int] = None) -> Union[float, np.ndarray]:
    """Subordinator increment over time ``scale_t`` (Laplace transform exp(-scale_t lambda^rho))."""
    if not 0.0 < rho < 1.0:
        raise PreconditionError(f"subordinator index must lie in (0, 1), got {rho}")
    gen = _generator(rng)
    shape = (1 if size is None else int(size), 2)
    u = open_uniforms(gen, shape)
    draws = scale_t ** (1.0 / rho) * positive_stable_from_uniforms(rho, u[:, 0], u[:, 1])
    return float(draws[0]) if size is None else draws


# ---------------------------------------------------------------------------
# Increment schemes: (n_steps, n_paths, d) blocks
# ---------------------------------------------------------------------------

def _stable_increments(spec: StableLevy, dt: float, gen: np.random.Generator, n: int, p: int) -> np.ndarray:
    spectral = spec.spectral
    alpha, d = spectral.alpha, spectral.dim
    if spectral.is_uniform:
        u = open_uniforms(gen, (n, p, d + 2))
        z = gaussian_from_uniforms(u[..., :d])
        if alpha == 2.0:
            mix = np.ones((n, p))
        else:
            mix = positive_stable_from_uniforms(alpha / 2.0, u[..., d], u[..., d + 1])
        scale = (spectral.uniform_mass * uniform_sphere_moment(alpha, d) * dt) ** (1.0 / alpha)
        steps = scale * math.sqrt(2.0) * np.sqrt(mix)[..., None] * z
    else:
        k = spectral.weights.shape[0]
        u = open_uniforms(gen, (n, p, k, 2))
        beta = 0.0 if spectral.is_symmetric else 1.0
        draws = stable_from_uniforms(alpha, beta, u[..., 0], u[..., 1])
        draws = draws * (spectral.weights * dt) ** (1.0 / alpha)
        steps = draws @ spectral.directions
    return steps - spectral.shift * dt


def _levy_increments(spec: ProcessSpec, dt: float, gen: np.random.Generator, n: int, p: int) -> np.ndarray:
    if isinstance(spec, BrownianMotion):
        z = gaussian_from_uniforms(open_uniforms(gen, (n, p, spec.dim)))
        return spec.sigma * math.sqrt(dt) * z
    if isinstance(spec, StableLevy):
        return _stable_increments(spec, dt, gen, n, p)
    if isinstance(spec, Subordinator):
        u = open_uniforms(gen, (n, p, 2))
        return (dt ** (1.0 / spec.rho) * positive_stable_from_uniforms(spec.rho, u[..., 0], u[..., 1]))[..., None]
    if isinstance(spec, ZeroProcess):
        return np.zeros((n, p, spec.dim))
    raise PreconditionError(f"{type(spec).__name__} has no increment scheme")


def _accumulate(x0: np.ndarray, increments: np.ndarray) -> np.ndarray:
    """(n, p, d) increments to (p, n + 1, d) values."""
    n, p, d = increments.shape
    values = np.empty((p, n + 1, d))
    values[:, 0, :] = 0.0
    values[:, 1:, :] = np.cumsum(increments, axis=0).transpose(1, 0, 2)
    return x0 + values


# ---------------------------------------------------------------------------
# Euler schemes for state-dependent jumps
# ---------------------------------------------------------------------------

class _AcceptanceMonitor:
    def __init__(self):
        self.candidates = 0
        self.accepted = 0

    def update(self, candidates: int, accepted: int) -> None:
        self.candidates += candidates
        self.accepted += accepted
        if self.candidates >= _MIN_CANDIDATES and self.accepted < _MIN_ACCEPTANCE * self.candidates:
            raise SimulationError(
                f"thinning acceptance rate {self.accepted}/{self.candidates} is degenerate; "
                f"tighten the kernel bounds kappa0/kappa1")


def _random_directions(gen: np.random.Generator, count: int, d: int) -> np.ndarray:
    if d == 1:
        return np.where(gen.random(count) < 0.5, -1.0, 1.0)[:, None]
    z = gen.standard_normal((count, d))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    return z / np.where(norms > 0, norms, 1.0)


def jump_intensity(kernel: StableLikeKernel, dt: float) -> float:
    """Expected number of thinning candidates per step and path (majorant rate times dt)."""
    cutoff = dt ** (1.0 / kernel.alpha)
    return kernel.kappa1 * sphere_area(kernel.dim) * cutoff ** (-kernel.alpha) / kernel.alpha * dt


def _stable_like_block(kernel: StableLikeKernel, x0: np.ndarray, dt: float, n: int, p: int,
                       gen: np.random.Generator, drift=None) -> np.ndarray:
    alpha, d = kernel.alpha, kernel.dim
    if kernel.kappa0 / kernel.kappa1 < _MIN_ACCEPTANCE:
        raise SimulationError("kernel bounds kappa0/kappa1 make thinning degenerate")
    cutoff = dt ** (1.0 / alpha)
    lam = jump_intensity(kernel, dt)
    small_scale = sphere_area(d) / d * cutoff ** (2.0 - alpha) / (2.0 - alpha) * dt if alpha > 1.0 else 0.0
    e1 = np.zeros(d)
    e1[0] = cutoff
    monitor = _AcceptanceMonitor()

    values = np.empty((p, n + 1, d))
    values[:, 0, :] = x0
    state = np.tile(x0, (p, 1))
    for i in range(n):
        step = np.zeros((p, d))
        if drift is not None:
            step += drift(state) * dt
        counts = gen.poisson(lam, size=p)
        total = int(counts.sum())
        if total:
            owner = np.repeat(np.arange(p), counts)
            radii = cutoff * open_uniforms(gen, (total,)) ** (-1.0 / alpha)
            jumps = radii[:, None] * _random_directions(gen, total, d)
            accept_prob = kernel.at(state[owner], jumps) / kernel.kappa1
            accepted = open_uniforms(gen, (total,)) < accept_prob
            np.add.at(step, owner[accepted], jumps[accepted])
            monitor.update(total, int(accepted.sum()))
        if small_scale > 0.0:
            kap = kernel.at(state, np.broadcast_to(e1, state.shape))
            step += np.sqrt(kap * small_scale)[:, None] * gen.standard_normal((p, d))
        state = state + step
        values[:, i + 1, :] = state
    return values


def _jump_diffusion_kernel(spec: JumpDiffusionSpec) -> StableLikeKernel:
    """Uniform spectral mass m(x) rewritten as the density m(x) c_d / K |z|^(-d-alpha)."""
    if spec.mass_bounds is None:
        raise PreconditionError("uniform jump diffusions need mass_bounds for thinning")
    factor = uniform_sphere_moment(spec.alpha, spec.dim) / isotropic_density_constant(spec.alpha, spec.dim)
    lo, hi = spec.mass_bounds
    return StableLikeKernel(
        alpha=spec.alpha, dim=spec.dim,
        kappa=lambda x, z: factor * spec.weights_at(x),
        kappa0=factor * lo, kappa1=factor * hi, radial=False,
        description={"form": "jump-diffusion", **spec.description},
    )


def _jump_diffusion_block(spec: JumpDiffusionSpec, x0: np.ndarray, dt: float, n: int, p: int,
                          gen: np.random.Generator) -> np.ndarray:
    alpha, d = spec.alpha, spec.dim
    spec.require_drift_allowed(x0)
    drift_fn = spec.drift_at if spec.drift is not None else None
    if spec.is_uniform and alpha < 2.0:
        return _stable_like_block(_jump_diffusion_kernel(spec), x0, dt, n, p, gen, drift=drift_fn)

    values = np.empty((p, n + 1, d))
    values[:, 0, :] = x0
    state = np.tile(x0, (p, 1))
    cutoff = dt ** (1.0 / alpha)
    if alpha < 2.0:
        i_alpha = radial_cosine_integral(alpha)
        rate_factor = cutoff ** (-alpha) * dt / (alpha * i_alpha)
        small_factor = cutoff ** (2.0 - alpha) * dt / (i_alpha * (2.0 - alpha)) if alpha > 1.0 else 0.0
    for i in range(n):
        if drift_fn is not None and alpha <= 1.0:
            spec.require_drift_allowed(state)
        step = spec.drift_at(state) * dt
        w = spec.weights_at(state)
        if alpha == 2.0:
            if spec.is_uniform:
                scale = np.sqrt(2.0 * w * uniform_sphere_moment(2.0, d) * dt)
                step += scale[:, None] * gen.standard_normal((p, d))
            else:
                step += (np.sqrt(2.0 * w * dt) * gen.standard_normal(w.shape)) @ spec.directions
        else:
            k = w.shape[1]
            counts = gen.poisson(w * rate_factor)
            total = int(counts.sum())
            if total:
                owner = np.repeat(np.arange(p * k), counts.ravel())
                radii = cutoff * open_uniforms(gen, (total,)) ** (-1.0 / alpha)
                signs = np.where(gen.random(total) < 0.5, -1.0, 1.0)
                jumps = (signs * radii)[:, None] * spec.directions[owner % k]
                np.add.at(step, owner // k, jumps)
            if small_factor > 0.0:
                step += (np.sqrt(w * small_factor) * gen.standard_normal(w.shape)) @ spec.directions
        state = state + step
        values[:, i + 1, :] = state
    return values


# ---------------------------------------------------------------------------
# Subordination
# ---------------------------------------------------------------------------

def _subordinate_one(spec: Subordinated, x0: np.ndarray, T: float, n: int, stream: RngStream) -> np.ndarray:
    dt = T / n
    m = spec.refine * n
    if spec.clock == "identity":
        tau = dt * np.arange(n + 1)
        tau_end = T
    else:
        gen = stream.spawn("clock").generator()
        u = open_uniforms(gen, (n, 2))
        tau = np.concatenate([[0.0], np.cumsum(dt ** (1.0 / spec.rho)
                                               * positive_stable_from_uniforms(spec.rho, u[:, 0], u[:, 1]))])
        tau_end = float(tau[-1])
        limit = horizon_multiplier() * T ** (1.0 / spec.rho)
        if not tau_end <= limit:
            raise SimulationError(
                f"subordinator reached {tau_end:.3g}, beyond the horizon {limit:.3g}; "
                f"raise LAB_HORIZON_MULTIPLIER or shorten T")
    if tau_end <= 0.0:
        return np.tile(x0, (n + 1, 1))
    base = _simulate_block(spec.base, x0, tau_end, m, 1, stream.spawn("base"))[0]
    if spec.clock == "identity":
        idx = spec.refine * np.arange(n + 1)
    else:
        idx = np.clip(np.floor(tau / (tau_end / m) + 1e-9).astype(np.int64), 0, m)
    return base[idx]


# ---------------------------------------------------------------------------
# Public simulators
# ---------------------------------------------------------------------------

def _simulate_block(spec: ProcessSpec, x0: np.ndarray, T: float, n: int, p: int, stream: RngStream) -> np.ndarray:
    dt = _check_grid(T, n)
    if isinstance(spec, Subordinated):
        if p == 1:
            return _subordinate_one(spec, x0, T, n, stream)[None]
        return np.stack([_subordinate_one(spec, x0, T, n, stream.spawn("path", j)) for j in range(p)])
    gen = stream.generator()
    if isinstance(spec, StableLike):
        return _stable_like_block(spec.kernel, x0, dt, n, p, gen)
    if isinstance(spec, JumpDiffusion):
        return _jump_diffusion_block(spec.spec, x0, dt, n, p, gen)
    return _accumulate(x0, _levy_increments(spec, dt, gen, n, p))


def _to_path(values: np.ndarray, x0: np.ndarray, T: float, n: int) -> SamplePath:
    return SamplePath(t0=0.0, dt=T / n, values=values, start_x=x0)


def simulate(spec: ProcessSpec, x0: Optional[Sequence[float]], T: float, n_steps: int,
             rng: Union[RngStream, int]) -> SamplePath:
    """One path of any family. Identical arguments give a bit-identical path."""
    start = _start(x0, spec.dim)
    values = _simulate_block(spec, start, T, n_steps, 1, as_stream(rng))[0]
    return _to_path(values, start, T, n_steps)


def simulate_levy_path(spec: Union[StableLevy, BrownianMotion], x0: Optional[Sequence[float]], T: float,
                       n_steps: int, rng: Union[RngStream, int]) -> SamplePath:
    if not isinstance(spec, (StableLevy, BrownianMotion, ZeroProcess)):
        raise PreconditionError("simulate_levy_path takes stable or Brownian specs")
    return simulate(spec, x0, T, n_steps, rng)


def simulate_subordinator(rho: float, T: float, n_steps: int, rng: Union[RngStream, int]) -> SamplePath:
    return simulate(Subordinator(rho), None, T, n_steps, rng)


def subordinate_path(base: ProcessSpec, rho: float, T: float, n_steps: int, rng: Union[RngStream, int],
                     x0: Optional[Sequence[float]] = None, refine: int = 4, clock: str = "stable") -> SamplePath:
    """Y_t = X(tau_t), reading X at the last base-grid point not after tau_t."""
    return simulate(Subordinated(base, rho, refine=refine, clock=clock), x0, T, n_steps, rng)


def simulate_stable_like_sde(kernel: StableLikeKernel, x0: Optional[Sequence[float]], T: float, n_steps: int,
                             rng: Union[RngStream, int]) -> SamplePath:
    return simulate(StableLike(kernel), x0, T, n_steps, rng)


def simulate_jump_diffusion(spec: JumpDiffusionSpec, x0: Optional[Sequence[float]], T: float, n_steps: int,
                            rng: Union[RngStream, int]) -> SamplePath:
    return simulate(JumpDiffusion(spec), x0, T, n_steps, rng)


def simulate_reduced(spec: ProcessSpec, x0: Optional[Sequence[float]], T: float, n_steps: int, n_paths: int,
                     rng: Union[RngStream, int], reducer: Callable[[np.ndarray], np.ndarray],
                     threads: int = 1, chunk_size: int = CHUNK_SIZE) -> np.ndarray:
    """Simulate ``n_paths`` paths chunk by chunk and keep only ``reducer(chunk)``.

    Chunk c always uses the child stream ``rng.spawn("chunk", c)``, so the
    result does not depend on ``threads``. ``reducer`` maps a
    (paths, n_steps + 1, d) block to an array with one leading row per path.
    """
    if n_paths < 1:
        raise PreconditionError("n_paths must be >= 1")
    start = _start(x0, spec.dim)
    stream = as_stream(rng)
    sizes = [min(chunk_size, n_paths - lo) for lo in range(0, n_paths, chunk_size)]

    def run(chunk: int) -> np.ndarray:
        block = _simulate_block(spec, start, T, n_steps, sizes[chunk], stream.spawn("chunk", chunk))
        if not np.all(np.isfinite(block)):
            raise SimulationError(f"chunk {chunk} of {type(spec).__name__} contains non-finite values")
        return np.asarray(reducer(block))

    reduced = np.concatenate(ordered_map(run, range(len(sizes)), threads), axis=0)
    logger.debug(f"simulated {n_paths} paths of {type(spec).__name__} with {n_steps} steps")
    return reduced


def simulate_batch(spec: ProcessSpec, x0: Optional[Sequence[float]], T: float, n_steps: int, n_paths: int,
                   rng: Union[RngStream, int], threads: int = 1, chunk_size: int = CHUNK_SIZE) -> np.ndarray:
    """``n_paths`` independent paths as an (n_paths, n_steps + 1, d) array."""
    return simulate_reduced(spec, x0, T, n_steps, n_paths, rng, lambda block: block,
                            threads=threads, chunk_size=chunk_size)


def endpoint_sample(spec: ProcessSpec, x0: Optional[Sequence[float]], t: float, n_mc: int,
                    rng: Union[RngStream, int], n_steps: int = 1, threads: int = 1) -> np.ndarray:
    """Draws of X_t started at x0, shape (n_mc, d)."""
    return simulate_reduced(spec, x0, t, n_steps, n_mc, rng, lambda block: block[:, -1, :], threads=threads)
