"""Lévy exponents and state-dependent symbols

Convention: every evaluator returns psi with E exp(i<xi, X_t>) = exp(-t psi(xi)),
so Re psi >= 0 and psi(-xi) = conj(psi(xi)).
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special

from src.lab.errors import PreconditionError, QuadratureError, ResourceCapError
from src.lab.quadrature import (
    QuadratureConfig,
    geometric_edges,
    panel_rule,
    sphere_area,
    sphere_rule,
)
from src.lab.reports import BoundCheckReport

logger = logging.getLogger(__name__)

_UNIT_TOL = 1e-12
_PSD_TOL = 1e-12

KernelFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
WeightFn = Callable[[np.ndarray], np.ndarray]
DriftFn = Callable[[np.ndarray], np.ndarray]
ExponentFn = Callable[[np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# Closed-form constants
# ---------------------------------------------------------------------------

def uniform_sphere_moment(alpha: float, d: int) -> float:
    """Mean of |y_1|^alpha for y uniform on the unit sphere of R^d."""
    return float(special.gamma(d / 2.0) * special.gamma((alpha + 1.0) / 2.0)
                 / (math.sqrt(math.pi) * special.gamma((d + alpha) / 2.0)))


def radial_cosine_integral(alpha: float) -> float:
    """Integral of (1 - cos w) w^(-1-alpha) over (0, inf), alpha in (0, 2)."""
    return math.pi / (2.0 * special.gamma(1.0 + alpha) * math.sin(math.pi * alpha / 2.0))


def isotropic_density_constant(alpha: float, d: int) -> float:
    """K with  int (1 - cos<x, xi>) |x|^(-d-alpha) dx = K |xi|^alpha."""
    return sphere_area(d) * uniform_sphere_moment(alpha, d) * radial_cosine_integral(alpha)


def stable_density_constant_1d(alpha: float) -> float:
    """c_alpha with the one-sided Lévy density c_alpha |r|^(-1-alpha) of exponent |xi|^alpha."""
    return special.gamma(1.0 + alpha) * math.sin(math.pi * alpha / 2.0) / math.pi


def _as_rows(xi: np.ndarray, d: int) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(xi, dtype=float)
    single = arr.ndim == 0 or (arr.ndim == 1 and arr.shape[0] == d)
    rows = arr.reshape(-1, d)
    return rows, single


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StableSpectralSpec:
    """Index, spectral measure and shift of a stable Lévy process.

    Atomic measures carry ``directions`` (k, d) and ``weights`` (k,); the
    uniform measure on the sphere carries ``uniform_mass`` instead.
    """

    alpha: float
    dim: int
    directions: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    uniform_mass: float = 0.0
    shift: Optional[np.ndarray] = None

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise PreconditionError(f"stable index must lie in (0, 2], got {self.alpha}")
        if self.dim < 1:
            raise PreconditionError("dimension must be >= 1")
        shift = np.zeros(self.dim) if self.shift is None else np.asarray(self.shift, dtype=float).reshape(self.dim)
        object.__setattr__(self, "shift", shift)
        if self.directions is None:
            if self.weights is not None:
                raise PreconditionError("weights given without directions")
            if not self.uniform_mass > 0:
                raise PreconditionError("uniform spectral measure needs positive mass")
            return
        dirs = np.asarray(self.directions, dtype=float).reshape(-1, self.dim)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if dirs.shape[0] != weights.shape[0]:
            raise PreconditionError("directions and weights have different lengths")
        if np.any(weights < 0) or not weights.sum() > 0:
            raise PreconditionError("spectral weights must be >= 0 with positive total mass")
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(np.abs(norms - 1.0) > _UNIT_TOL):
            raise PreconditionError("spectral atoms must be unit vectors")
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def atomic(cls, alpha: float, atoms: Sequence[Tuple[Sequence[float], float]],
               shift: Optional[Sequence[float]] = None) -> "StableSpectralSpec":
        dirs = np.array([np.asarray(a, dtype=float) for a, _ in atoms])
        weights = np.array([w for _, w in atoms], dtype=float)
        return cls(alpha=alpha, dim=dirs.shape[1], directions=dirs, weights=weights, shift=shift)

    @classmethod
    def uniform(cls, alpha: float, dim: int, mass: float = 1.0,
                shift: Optional[Sequence[float]] = None) -> "StableSpectralSpec":
        if dim == 1:
            return cls(alpha=alpha, dim=1, directions=np.array([[1.0], [-1.0]]),
                       weights=np.array([mass / 2.0, mass / 2.0]), shift=shift)
        return cls(alpha=alpha, dim=dim, uniform_mass=mass, shift=shift)

    @property
    def is_uniform(self) -> bool:
        return self.directions is None

    @property
    def total_mass(self) -> float:
        return self.uniform_mass if self.is_uniform else float(self.weights.sum())

    @property
    def is_symmetric(self) -> bool:
        if self.is_uniform:
            return True
        for y, w in zip(self.directions, self.weights):
            mirror = np.all(np.abs(self.directions + y) <= 1e-12, axis=1)
            if not np.any(np.abs(self.weights[mirror] - w) <= 1e-12 * max(1.0, w)):
                return False
        return True

    def describe(self) -> Dict[str, Any]:
        info: Dict[str, Any] = {"alpha": self.alpha, "dim": self.dim, "shift": self.shift.tolist()}
        if self.is_uniform:
            info["spectral"] = {"uniform": self.uniform_mass}
        else:
            info["spectral"] = {"atoms": [{"direction": y.tolist(), "weight": float(w)}
                                          for y, w in zip(self.directions, self.weights)]}
        return info


@dataclass(frozen=True)
class IsotropicDensity:
    """Lévy measure c |x|^(-d-alpha) dx."""

    c: float
    alpha: float
    dim: int

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise PreconditionError(f"isotropic density needs alpha in (0, 2), got {self.alpha}")
        if not self.c > 0:
            raise PreconditionError("isotropic density constant must be positive")


@dataclass(frozen=True, eq=False)
class LevyTriplet:
    drift_a: np.ndarray
    gaussian_sigma: np.ndarray
    levy_measure: Union[None, StableSpectralSpec, IsotropicDensity] = None

    def __post_init__(self):
        a = np.asarray(self.drift_a, dtype=float).reshape(-1)
        d = a.shape[0]
        sigma = np.asarray(self.gaussian_sigma, dtype=float).reshape(d, d)
        if not np.allclose(sigma, sigma.T, atol=1e-14):
            raise PreconditionError("gaussian_sigma must be symmetric")
        if np.linalg.eigvalsh(sigma).min() < -_PSD_TOL:
            raise PreconditionError("gaussian_sigma must be nonnegative-definite")
        if self.levy_measure is not None and self.levy_measure.dim != d:
            raise PreconditionError("Lévy measure dimension does not match the drift")
        object.__setattr__(self, "drift_a", a)
        object.__setattr__(self, "gaussian_sigma", sigma)

    @property
    def dim(self) -> int:
        return self.drift_a.shape[0]

    @classmethod
    def brownian(cls, dim: int, sigma: float = 1.0) -> "LevyTriplet":
        return cls(np.zeros(dim), sigma ** 2 * np.eye(dim))


@dataclass(frozen=True, eq=False)
class StableLikeKernel:
    """Jump kernel kappa(x, z) |z|^(-d-alpha) with kappa0 <= kappa <= kappa1.

    ``kappa`` is vectorized: (n, d) states and (n, d) jumps give (n,) values.
    ``radial`` is False when kappa does not depend on |z|, which lets the
    symbol quadrature separate the radial integral.
    """

    alpha: float
    dim: int
    kappa: KernelFn
    kappa0: float
    kappa1: float
    kappa2: float = 0.0
    beta_holder: float = 1.0
    radial: bool = True
    description: Dict[str, Any] = field(default_factory=dict)

    kind = "stable-like"

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise PreconditionError(f"stable-like index must lie in (0, 2), got {self.alpha}")
        if not 0.0 < self.kappa0 <= self.kappa1:
            raise PreconditionError("kernel bounds must satisfy 0 < kappa0 <= kappa1")
        self._check_samples()

    def _check_samples(self, n: int = 128) -> None:
        gen = np.random.Generator(np.random.Philox(key=np.array([0, 0], dtype=np.uint64)))
        x = gen.normal(scale=3.0, size=(n, self.dim))
        y = x + gen.normal(scale=0.5, size=(n, self.dim))
        z = gen.standard_cauchy(size=(n, self.dim))
        k_xz = np.asarray(self.kappa(x, z), dtype=float)
        if np.any(k_xz < self.kappa0 * (1 - 1e-12)) or np.any(k_xz > self.kappa1 * (1 + 1e-12)):
            raise PreconditionError("kernel leaves [kappa0, kappa1] on sampled points")
        if not np.array_equal(k_xz, np.asarray(self.kappa(x, -z), dtype=float)):
            raise PreconditionError("kernel must satisfy kappa(x, z) = kappa(x, -z)")
        if self.kappa2 > 0:
            gap = np.abs(k_xz - np.asarray(self.kappa(y, z), dtype=float))
            bound = self.kappa2 * np.linalg.norm(x - y, axis=1) ** self.beta_holder
            if np.any(gap > bound * (1 + 1e-9) + 1e-14):
                raise PreconditionError("kernel violates its Hölder bound on sampled triples")

    def at(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        z = np.atleast_2d(np.asarray(z, dtype=float))
        x, z = np.broadcast_arrays(x, z)
        return np.asarray(self.kappa(np.ascontiguousarray(x), np.ascontiguousarray(z)), dtype=float)


def constant_kernel(alpha: float, dim: int, value: float = 1.0) -> StableLikeKernel:
    """kappa == value, the isotropic stable kernel."""
    return StableLikeKernel(
        alpha=alpha, dim=dim,
        kappa=lambda x, z: np.full(x.shape[0], float(value)),
        kappa0=value, kappa1=value, kappa2=0.0, beta_holder=1.0, radial=False,
        description={"form": "constant", "value": value},
    )


def oscillating_kernel(alpha: float, dim: int, base: float = 1.0, amplitude: float = 0.5) -> StableLikeKernel:
    """kappa(x, z) = base + amplitude * sin^2(x_1)."""
    if base <= 0 or amplitude < 0:
        raise PreconditionError("oscillating kernel needs base > 0 and amplitude >= 0")
    return StableLikeKernel(
        alpha=alpha, dim=dim,
        kappa=lambda x, z: base + amplitude * np.sin(x[:, 0]) ** 2,
        kappa0=base, kappa1=base + amplitude, kappa2=amplitude, beta_holder=1.0, radial=False,
        description={"form": "oscillating", "base": base, "amplitude": amplitude},
    )


@dataclass(frozen=True, eq=False)
class JumpDiffusionSpec:
    """Drift A(x) plus a state-dependent spectral measure M(x, ds).

    Atomic form: ``directions`` (k, d) and ``weights(x) -> (n, k)``.
    Uniform form: ``directions`` is None and ``weights(x) -> (n,)`` gives the mass.
    """

    alpha: float
    dim: int
    weights: WeightFn
    directions: Optional[np.ndarray] = None
    drift: Optional[DriftFn] = None
    description: Dict[str, Any] = field(default_factory=dict)
    mass_bounds: Optional[Tuple[float, float]] = None

    kind = "jump-diffusion"

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise PreconditionError(f"jump-diffusion index must lie in (0, 2], got {self.alpha}")
        if self.directions is not None:
            dirs = np.asarray(self.directions, dtype=float).reshape(-1, self.dim)
            if np.any(np.abs(np.linalg.norm(dirs, axis=1) - 1.0) > _UNIT_TOL):
                raise PreconditionError("spectral atoms must be unit vectors")
            object.__setattr__(self, "directions", dirs)

    @property
    def is_uniform(self) -> bool:
        return self.directions is None

    def drift_at(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.drift is None:
            return np.zeros_like(x)
        return np.asarray(self.drift(x), dtype=float).reshape(x.shape)

    def weights_at(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        w = np.asarray(self.weights(x), dtype=float)
        return w.reshape(x.shape[0]) if self.is_uniform else w.reshape(x.shape[0], -1)

    def require_drift_allowed(self, x: np.ndarray) -> None:
        if self.alpha <= 1.0 and np.any(self.drift_at(x) != 0.0):
            raise PreconditionError(
                f"stable jump diffusions with alpha <= 1 need A(x) == 0 (alpha={self.alpha})")


def jump_diffusion_atoms(alpha: float, directions: Sequence[Sequence[float]], weights: Sequence[float],
                         drift: Optional[Sequence[float]] = None, oscillation: float = 0.0,
                         reversion: float = 0.0) -> JumpDiffusionSpec:
    """Atomic jump diffusion with w_k(x) = w_k (1 + oscillation sin^2 x_1) and A(x) = drift - reversion x."""
    dirs = np.asarray(directions, dtype=float)
    dirs = dirs.reshape(len(weights), -1)
    dim = dirs.shape[1]
    base = np.asarray(weights, dtype=float)
    if np.any(base < 0):
        raise PreconditionError("jump-diffusion weights must be >= 0")

    def weight_fn(x: np.ndarray) -> np.ndarray:
        return base[None, :] * (1.0 + oscillation * np.sin(x[:, :1]) ** 2)

    return JumpDiffusionSpec(
        alpha=alpha, dim=dim, weights=weight_fn, directions=dirs,
        drift=_linear_drift(drift, reversion, dim),
        description={"atoms": [{"direction": d.tolist(), "weight": float(w)} for d, w in zip(dirs, base)],
                     "drift": None if drift is None else list(map(float, drift)),
                     "oscillation": oscillation, "reversion": reversion},
    )


def uniform_jump_diffusion(alpha: float, dim: int, mass: float = 1.0, drift: Optional[Sequence[float]] = None,
                           oscillation: float = 0.0, reversion: float = 0.0) -> JumpDiffusionSpec:
    """Uniform spectral measure of mass m(x) = mass (1 + oscillation sin^2 x_1)."""
    if not mass > 0:
        raise PreconditionError("uniform jump-diffusion mass must be positive")
    return JumpDiffusionSpec(
        alpha=alpha, dim=dim,
        weights=lambda x: mass * (1.0 + oscillation * np.sin(x[:, 0]) ** 2),
        directions=None, drift=_linear_drift(drift, reversion, dim),
        mass_bounds=(mass, mass * (1.0 + oscillation)),
        description={"uniform": mass, "drift": None if drift is None else list(map(float, drift)),
                     "oscillation": oscillation, "reversion": reversion},
    )


def _linear_drift(drift: Optional[Sequence[float]], reversion: float, dim: int) -> Optional[DriftFn]:
    if drift is None and reversion == 0.0:
        return None
    v = np.zeros(dim) if drift is None else np.asarray(drift, dtype=float).reshape(dim)
    return lambda x: v[None, :] - reversion * x


@dataclass(frozen=True, eq=False)
class StateDependentSymbol:
    """A symbol q(x, xi) together with its family and whether it is free of x."""

    kind: str
    dim: int
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    homogeneous: bool = False

    def __call__(self, x: np.ndarray, xi: np.ndarray) -> Union[complex, np.ndarray]:
        rows, single = _as_rows(xi, self.dim)
        x = np.asarray(x, dtype=float).reshape(self.dim)
        values = np.asarray(self.evaluator(x, rows), dtype=complex).reshape(-1)
        return complex(values[0]) if single else values

    def exponent(self, x: Optional[np.ndarray] = None) -> ExponentFn:
        """Freeze the state and return xi -> q(x, xi)."""
        frozen = np.zeros(self.dim) if x is None else np.asarray(x, dtype=float)
        return lambda xi: self(frozen, xi)


@dataclass(frozen=True)
class GrowthConditionSpec:
    """Two-sided power-law growth K5^-1 |xi|^(alpha - z') <= psi <= K5 |xi|^(alpha + z')."""

    alpha: float
    zeta_prime: float
    K5: float
    tau: float = 1.0
    global_lower: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise PreconditionError(f"growth index must lie in (0, 2], got {self.alpha}")
        if not self.zeta_prime > 0:
            raise PreconditionError("zeta_prime must be positive")
        if self.K5 < 1.0:
            raise PreconditionError("K5 must be >= 1")
        if self.tau <= 0:
            raise PreconditionError("tau must be positive")

    @property
    def zeta_exceeds_gap(self) -> bool:
        return self.alpha < 2.0 and self.zeta_prime >= 2.0 - self.alpha

    @property
    def upper_exponent(self) -> float:
        return 2.0 if self.alpha == 2.0 else self.alpha + self.zeta_prime

    @property
    def lower_exponent(self) -> float:
        return self.alpha - self.zeta_prime


def growth_zeta(alpha: float, zeta_prime: float) -> float:
    """The time-scaling slack zeta induced by the symbol slack zeta'."""
    if not 0.0 < zeta_prime < alpha:
        raise PreconditionError("growth_zeta needs 0 < zeta_prime < alpha")
    return zeta_prime / (alpha * (alpha - zeta_prime))


# ---------------------------------------------------------------------------
# Exponent evaluators
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _sphere_moment_quadrature(alpha: float, d: int, order: int = 64) -> float:
    """Surface integral of |<e1, s>|^alpha computed on the kink-aligned sphere grid."""
    dirs, weights = sphere_rule(d, order, pole=np.eye(d)[0])
    return float(weights @ np.abs(dirs[:, 0]) ** alpha)


def _atomic_stable_terms(alpha: float, theta: np.ndarray, weights: np.ndarray) -> np.ndarray:
    abs_theta = np.abs(theta)
    if alpha == 1.0:
        safe = np.where(abs_theta > 0, abs_theta, 1.0)
        log_term = np.where(abs_theta > 0, np.sign(theta) * np.log(safe), 0.0)
        terms = abs_theta * (1.0 + 1j * (math.pi / 2.0) * log_term)
    else:
        skew = 0.0 if alpha == 2.0 else math.tan(math.pi * alpha / 2.0)
        terms = abs_theta ** alpha * (1.0 - 1j * np.sign(theta) * skew)
    return terms @ weights


def eval_stable_exponent(spec: StableSpectralSpec, xi: np.ndarray) -> Union[complex, np.ndarray]:
    """Stable exponent from the spectral representation (alpha != 1 and alpha = 1 branches)."""
    rows, single = _as_rows(xi, spec.dim)
    if spec.is_uniform:
        moment = _sphere_moment_quadrature(spec.alpha, spec.dim)
        jump = spec.uniform_mass / sphere_area(spec.dim) * moment * np.linalg.norm(rows, axis=1) ** spec.alpha
        values = jump.astype(complex)
    else:
        theta = rows @ spec.directions.T
        values = _atomic_stable_terms(spec.alpha, theta, spec.weights)
    values = values + 1j * (rows @ spec.shift)
    return complex(values[0]) if single else values


def eval_levy_exponent(triplet: LevyTriplet, xi: np.ndarray) -> Union[complex, np.ndarray]:
    """Lévy-Khintchine exponent i<a, xi> + <xi, S xi>/2 + jump part."""
    rows, single = _as_rows(xi, triplet.dim)
    values = 1j * (rows @ triplet.drift_a) + 0.5 * np.einsum("ni,ij,nj->n", rows, triplet.gaussian_sigma, rows)
    measure = triplet.levy_measure
    if isinstance(measure, StableSpectralSpec):
        values = values + np.asarray(eval_stable_exponent(measure, rows))
    elif isinstance(measure, IsotropicDensity):
        k = isotropic_density_constant(measure.alpha, measure.dim)
        values = values + measure.c * k * np.linalg.norm(rows, axis=1) ** measure.alpha
    values = np.asarray(values, dtype=complex)
    return complex(values[0]) if single else values


def eval_jump_diffusion_symbol(spec: JumpDiffusionSpec, x: np.ndarray, xi: np.ndarray) -> Union[complex, np.ndarray]:
    """q(x, xi) = -i<A(x), xi> + integral of |<xi, s>|^alpha M(x, ds)."""
    if getattr(spec, "kind", None) != "jump-diffusion":
        raise PreconditionError("eval_jump_diffusion_symbol needs a jump-diffusion spec")
    rows, single = _as_rows(xi, spec.dim)
    x = np.asarray(x, dtype=float).reshape(1, spec.dim)
    spec.require_drift_allowed(x)
    drift = spec.drift_at(x)[0]
    if spec.is_uniform:
        mass = float(spec.weights_at(x)[0])
        jump = mass * uniform_sphere_moment(spec.alpha, spec.dim) * np.linalg.norm(rows, axis=1) ** spec.alpha
    else:
        w = spec.weights_at(x)[0]
        jump = np.abs(rows @ spec.directions.T) ** spec.alpha @ w
    values = jump - 1j * (rows @ drift)
    return complex(values[0]) if single else values


def _radial_nodes(quad: QuadratureConfig, order: int) -> Tuple[np.ndarray, np.ndarray]:
    inner = geometric_edges(quad.eps_in, math.pi)
    n_outer = max(1, int(math.ceil((quad.r_out - math.pi) / math.pi)))
    outer = np.linspace(math.pi, quad.r_out, n_outer + 1)
    return panel_rule(np.concatenate([inner, outer[1:]]), order)


def _tail_factor(alpha: float, w_out: float) -> float:
    """Asymptotic value of the integral of (1 - cos w) w^(-1-alpha) over (w_out, inf)."""
    cos_tail = -math.sin(w_out) * w_out ** (-1.0 - alpha) + (1.0 + alpha) * math.cos(w_out) * w_out ** (-2.0 - alpha)
    return w_out ** (-alpha) / alpha - cos_tail


def _stable_like_estimate(kernel: StableLikeKernel, x: np.ndarray, xi: np.ndarray,
                          quad: QuadratureConfig, level: int) -> float:
    d, alpha = kernel.dim, kernel.alpha
    dirs, dir_w = sphere_rule(d, quad.angular(level), pole=xi)
    proj = np.abs(dirs @ xi)
    keep = proj > 0
    dirs, dir_w, proj = dirs[keep], dir_w[keep], proj[keep]
    w_nodes, w_weights = _radial_nodes(quad, quad.order(level))
    radial = (1.0 - np.cos(w_nodes)) * w_nodes ** (-1.0 - alpha) * w_weights
    inner_factor = quad.eps_in ** (2.0 - alpha) / (2.0 * (2.0 - alpha))
    tail_factor = _tail_factor(alpha, quad.r_out)

    if not kernel.radial:
        kap = kernel.at(x, dirs)
        per_dir = kap * (radial.sum() + inner_factor + tail_factor)
    else:
        total = dirs.shape[0] * w_nodes.shape[0]
        if total > quad.max_nodes:
            raise ResourceCapError(f"stable-like symbol quadrature needs {total} nodes, cap is {quad.max_nodes}")
        z = (w_nodes[None, :, None] / proj[:, None, None]) * dirs[:, None, :]
        kap = kernel.at(x, z.reshape(-1, d)).reshape(dirs.shape[0], -1)
        k_in = kernel.at(x, (0.5 * quad.eps_in / proj)[:, None] * dirs)
        k_out = kernel.at(x, (quad.r_out / proj)[:, None] * dirs)
        per_dir = kap @ radial + k_in * inner_factor + k_out * tail_factor
    return float(dir_w @ (per_dir * proj ** alpha))


def eval_stable_like_symbol(kernel: StableLikeKernel, x: np.ndarray, xi: np.ndarray,
                            quad: Optional[QuadratureConfig] = None) -> complex:
    """Symbol of the stable-like generator by spherical-shell quadrature.

    Raises QuadratureError when successive refinement levels never agree to
    ``quad.tol`` relative.
    """
    quad = quad or QuadratureConfig()
    xi = np.asarray(xi, dtype=float).reshape(kernel.dim)
    x = np.asarray(x, dtype=float).reshape(kernel.dim)
    if not np.any(xi):
        return 0j
    previous = _stable_like_estimate(kernel, x, xi, quad, 0)
    for level in range(1, quad.max_levels + 1):
        current = _stable_like_estimate(kernel, x, xi, quad, level)
        if abs(current - previous) <= quad.tol * max(abs(current), 1e-300):
            return complex(current)
        previous = current
    raise QuadratureError("stable-like symbol quadrature did not converge", (previous, current))


def stable_like_symbol(kernel: StableLikeKernel, quad: Optional[QuadratureConfig] = None) -> StateDependentSymbol:
    def evaluate(x: np.ndarray, rows: np.ndarray) -> np.ndarray:
        return np.array([eval_stable_like_symbol(kernel, x, row, quad) for row in rows])

    return StateDependentSymbol("stable-like", kernel.dim, evaluate, homogeneous=kernel.kappa0 == kernel.kappa1)


def jump_diffusion_symbol(spec: JumpDiffusionSpec) -> StateDependentSymbol:
    return StateDependentSymbol("jump-diffusion", spec.dim,
                                lambda x, rows: eval_jump_diffusion_symbol(spec, x, rows))


def fit_symbol_constant(evaluator: Callable[[np.ndarray, np.ndarray], Any], xs: Sequence[np.ndarray],
                        xis: Sequence[np.ndarray], alpha: float) -> float:
    """Smallest C with |q(x, xi)| <= C |xi|^alpha on the sampled (x, xi) pairs."""
    best = 0.0
    for x in xs:
        for xi in xis:
            norm = float(np.linalg.norm(xi))
            if norm == 0.0:
                continue
            best = max(best, abs(complex(evaluator(np.asarray(x), np.asarray(xi)))) / norm ** alpha)
    return best


def check_growth_condition(exponent: ExponentFn, spec: GrowthConditionSpec,
                           xi_grid: Sequence[Sequence[float]]) -> BoundCheckReport:
    """Pointwise check of the two-sided growth condition on ``xi_grid``."""
    grid = np.atleast_2d(np.asarray(xi_grid, dtype=float))
    norms = np.linalg.norm(grid, axis=1)
    if not spec.global_lower and np.any(norms < spec.tau):
        raise PreconditionError(f"growth grid contains |xi| < tau = {spec.tau}")
    if np.any(norms == 0):
        raise PreconditionError("growth grid must not contain xi = 0")
    psi = np.asarray(exponent(grid), dtype=complex).reshape(-1)
    if np.any(np.abs(psi.imag) > 1e-10 * np.maximum(np.abs(psi), 1e-300)):
        raise PreconditionError("growth condition applies to symmetric (real) exponents only")
    values = psi.real
    lower = norms ** spec.lower_exponent / spec.K5
    upper = spec.K5 * norms ** spec.upper_exponent
    slack = 1e-12
    violations = [i for i in range(len(values))
                  if values[i] < lower[i] * (1 - slack) or values[i] > upper[i] * (1 + slack)]
    with np.errstate(divide="ignore"):
        k5_fit = max(1.0, float(np.max(values / norms ** spec.upper_exponent)),
                     float(np.max(norms ** spec.lower_exponent / values)))
    flags: List[str] = []
    if spec.zeta_exceeds_gap:
        logger.warning(f"zeta'={spec.zeta_prime} is not below 2 - alpha = {2 - spec.alpha}; reporting anyway")
        flags.append("zeta_prime_exceeds_gap")
    return BoundCheckReport(
        check="growth",
        grid=[{"xi": row.tolist(), "norm": float(n)} for row, n in zip(grid, norms)],
        lhs=values.tolist(),
        rhs=upper.tolist(),
        std_err=[0.0] * len(values),
        violations=violations,
        fitted_constants={"K5": k5_fit},
        flags=flags,
        extra={"lower": lower.tolist(), "alpha": spec.alpha, "zeta_prime": spec.zeta_prime, "K5": spec.K5},
    )
