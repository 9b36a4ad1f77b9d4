"""Process families and their symbols"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Union

import numpy as np

from src.lab.errors import PreconditionError
from src.lab.quadrature import QuadratureConfig
from src.lab.symbols import (
    JumpDiffusionSpec,
    StableLikeKernel,
    StableSpectralSpec,
    StateDependentSymbol,
    eval_stable_exponent,
    jump_diffusion_symbol,
    stable_like_symbol,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class StableLevy:
    spectral: StableSpectralSpec

    family = "stable"

    @property
    def dim(self) -> int:
        return self.spectral.dim


@dataclass(frozen=True)
class BrownianMotion:
    dim: int = 1
    sigma: float = 1.0

    family = "brownian"

    def __post_init__(self):
        if self.dim < 1 or not self.sigma > 0:
            raise PreconditionError("Brownian motion needs dim >= 1 and sigma > 0")


@dataclass(frozen=True)
class Subordinator:
    rho: float

    family = "subordinator"
    dim = 1

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise PreconditionError(f"subordinator index must lie in (0, 1), got {self.rho}")


@dataclass(frozen=True, eq=False)
class Subordinated:
    """Y_t = X(tau_t) for a rho-stable subordinator tau independent of X.

    ``clock="identity"`` replaces tau by tau_t = t and exists for testing.
    """

    base: Any
    rho: float
    refine: int = 4
    clock: str = "stable"

    family = "subordinated"

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise PreconditionError(f"subordinator index must lie in (0, 1), got {self.rho}")
        if self.refine < 1:
            raise PreconditionError("refine must be >= 1")
        if self.clock not in ("stable", "identity"):
            raise PreconditionError(f"unknown clock {self.clock!r}")
        if isinstance(self.base, (Subordinator, StableLike, JumpDiffusion)):
            raise PreconditionError("subordinated base must be a space-homogeneous Lévy family")

    @property
    def dim(self) -> int:
        return self.base.dim


@dataclass(frozen=True, eq=False)
class StableLike:
    kernel: StableLikeKernel

    family = "stable_like"

    @property
    def dim(self) -> int:
        return self.kernel.dim


@dataclass(frozen=True, eq=False)
class JumpDiffusion:
    spec: JumpDiffusionSpec

    family = "jump_diffusion"

    @property
    def dim(self) -> int:
        return self.spec.dim


@dataclass(frozen=True)
class ZeroProcess:
    """X_t = x for all t."""

    dim: int = 1

    family = "zero"


ProcessSpec = Union[StableLevy, BrownianMotion, Subordinator, Subordinated, StableLike, JumpDiffusion, ZeroProcess]


def is_space_homogeneous(spec: ProcessSpec) -> bool:
    if isinstance(spec, StableLike):
        return spec.kernel.kappa0 == spec.kernel.kappa1
    if isinstance(spec, JumpDiffusion):
        return False
    return True


def has_exact_increments(spec: ProcessSpec) -> bool:
    """Whether one simulation step already gives the exact law at the end time."""
    if isinstance(spec, Subordinated):
        return has_exact_increments(spec.base)
    return isinstance(spec, (StableLevy, BrownianMotion, Subordinator, ZeroProcess))


def natural_index(spec: ProcessSpec) -> Optional[float]:
    """Self-similarity index H for the families that have one."""
    if isinstance(spec, StableLevy):
        return 1.0 / spec.spectral.alpha
    if isinstance(spec, BrownianMotion):
        return 0.5
    if isinstance(spec, Subordinator):
        return 1.0 / spec.rho
    if isinstance(spec, Subordinated):
        base = natural_index(spec.base)
        return None if base is None else base / spec.rho
    if isinstance(spec, StableLike):
        return 1.0 / spec.kernel.alpha
    if isinstance(spec, JumpDiffusion):
        return 1.0 / spec.spec.alpha
    return None


def describe(spec: ProcessSpec) -> Dict[str, Any]:
    """JSON-ready description used in reports."""
    if isinstance(spec, StableLevy):
        return {"family": "stable", **spec.spectral.describe()}
    if isinstance(spec, BrownianMotion):
        return {"family": "brownian", "dim": spec.dim, "sigma": spec.sigma}
    if isinstance(spec, Subordinator):
        return {"family": "subordinator", "rho": spec.rho}
    if isinstance(spec, Subordinated):
        return {"family": "subordinated", "rho": spec.rho, "refine": spec.refine,
                "clock": spec.clock, "base": describe(spec.base)}
    if isinstance(spec, StableLike):
        return {"family": "stable_like", "alpha": spec.kernel.alpha, "dim": spec.kernel.dim,
                "kernel": dict(spec.kernel.description)}
    if isinstance(spec, JumpDiffusion):
        return {"family": "jump_diffusion", "alpha": spec.spec.alpha, "dim": spec.spec.dim,
                **spec.spec.description}
    if isinstance(spec, ZeroProcess):
        return {"family": "zero", "dim": spec.dim}
    raise PreconditionError(f"unknown process spec {type(spec).__name__}")


def symbol_of(spec: ProcessSpec, quad: Optional[QuadratureConfig] = None) -> StateDependentSymbol:
    """Symbol q(x, xi) of any process family."""
    if isinstance(spec, StableLevy):
        return StateDependentSymbol("stable", spec.dim,
                                    lambda x, rows: eval_stable_exponent(spec.spectral, rows), homogeneous=True)
    if isinstance(spec, BrownianMotion):
        scale = 0.5 * spec.sigma ** 2
        return StateDependentSymbol("brownian", spec.dim,
                                    lambda x, rows: scale * np.sum(rows ** 2, axis=1), homogeneous=True)
    if isinstance(spec, Subordinator):
        return StateDependentSymbol("subordinator", 1,
                                    lambda x, rows: (-1j * rows[:, 0]) ** spec.rho, homogeneous=True)
    if isinstance(spec, Subordinated):
        inner = symbol_of(spec.base, quad)

        def bochner(x: np.ndarray, rows: np.ndarray) -> np.ndarray:
            if spec.clock == "identity":
                return np.asarray(inner(x, rows), dtype=complex).reshape(-1)
            return np.asarray(inner(x, rows), dtype=complex).reshape(-1) ** spec.rho

        return StateDependentSymbol("subordinated", spec.dim, bochner, homogeneous=True)
    if isinstance(spec, StableLike):
        return stable_like_symbol(spec.kernel, quad)
    if isinstance(spec, JumpDiffusion):
        return jump_diffusion_symbol(spec.spec)
    if isinstance(spec, ZeroProcess):
        return StateDependentSymbol("zero", spec.dim, lambda x, rows: np.zeros(rows.shape[0]), homogeneous=True)
    raise PreconditionError(f"unknown process spec {type(spec).__name__}")
