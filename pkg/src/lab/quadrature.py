"""Fixed quadrature rules: Gauss-Legendre panels, endpoint-clustered rules and sphere grids"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy import special

from src.lab.errors import PreconditionError, ResourceCapError


@dataclass(frozen=True)
class QuadratureConfig:
    """Tuning knobs shared by the symbol and Parseval quadratures.

    ``eps_in`` and ``r_out`` are cut-offs in the dimensionless radial variable
    w = rho * |<s, xi>|; the inner ball is handled by a Taylor correction and
    the outer tail by its asymptotic expansion.
    """

    eps_in: float = 1e-3
    r_out: float = 2.0 * math.pi * 100
    tol: float = 1e-6
    max_levels: int = 20
    base_order: int = 6
    base_angular: int = 16
    max_nodes: int = 4_000_000

    def __post_init__(self):
        if not 0.0 < self.eps_in < self.r_out:
            raise PreconditionError(
                f"quadrature cut-offs must satisfy 0 < eps_in < r_out, got {self.eps_in}, {self.r_out}")
        if self.tol <= 0 or self.max_levels < 1:
            raise PreconditionError("quadrature tol must be positive and max_levels >= 1")

    def order(self, level: int) -> int:
        return self.base_order + 2 * level

    def angular(self, level: int) -> int:
        return self.base_angular + 8 * level


@lru_cache(maxsize=128)
def _leggauss(n: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panel_rule(edges: np.ndarray, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule with ``order`` nodes on each panel [edges[i], edges[i+1]]."""
    edges = np.asarray(edges, dtype=float)
    x, w = _leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def clustered_rule(a: float, b: float, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre under the sine map, which flattens endpoint kinks such as |u|^alpha."""
    x, w = _leggauss(order)
    v = 0.5 * (x + 1.0)
    g = v - np.sin(2.0 * np.pi * v) / (2.0 * np.pi)
    dg = 1.0 - np.cos(2.0 * np.pi * v)
    nodes = a + (b - a) * g
    weights = (b - a) * dg * 0.5 * w
    return nodes, weights


def geometric_edges(lo: float, hi: float, ratio: float = 2.0) -> np.ndarray:
    """Panel edges lo, lo*ratio, ..., hi (last panel shortened)."""
    if not 0 < lo < hi:
        raise PreconditionError(f"geometric panels need 0 < lo < hi, got {lo}, {hi}")
    count = max(1, int(math.ceil(math.log(hi / lo) / math.log(ratio))))
    edges = lo * ratio ** np.arange(count + 1, dtype=float)
    edges[-1] = hi
    return edges


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in R^d (2 for d = 1)."""
    return 2.0 * math.pi ** (d / 2.0) / special.gamma(d / 2.0)


def ball_volume(d: int, radius: float) -> float:
    return sphere_area(d) * radius ** d / d


def _orthonormal_frame(pole: np.ndarray) -> np.ndarray:
    """Rows: unit pole followed by an orthonormal completion."""
    d = pole.shape[0]
    norm = float(np.linalg.norm(pole))
    e = pole / norm if norm > 0 else np.eye(d)[0]
    basis = np.eye(d)
    pivot = int(np.argmin(np.abs(e)))
    seed = np.vstack([e, basis[pivot], basis]).T
    q, _ = np.linalg.qr(seed)
    frame = q[:, :d].T
    if frame[0] @ e < 0:
        frame = -frame
    return frame


def sphere_rule(d: int, order: int, pole: np.ndarray = None) -> Tuple[np.ndarray, np.ndarray]:
    """Directions and surface weights on the unit sphere of R^d, aligned with ``pole``.

    Nodes are clustered where <s, pole> = 0 so that integrands of the form
    |<s, xi>|^alpha * smooth(s) converge at the Gauss rate. Supported for d <= 3.
    """
    if pole is None:
        pole = np.eye(d)[0]
    pole = np.asarray(pole, dtype=float).reshape(d)
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    frame = _orthonormal_frame(pole)
    if d == 2:
        # angle measured from the kink direction frame[1]
        t1, w1 = clustered_rule(0.0, math.pi, order)
        theta = np.concatenate([t1, t1 + math.pi])
        weights = np.concatenate([w1, w1])
        dirs = np.cos(theta)[:, None] * frame[1] + np.sin(theta)[:, None] * frame[0]
        return dirs, weights
    if d == 3:
        u_pos, w_pos = clustered_rule(0.0, 1.0, order)
        u = np.concatenate([-u_pos[::-1], u_pos])
        wu = np.concatenate([w_pos[::-1], w_pos])
        n_phi = 2 * order
        phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
        wphi = np.full(n_phi, 2.0 * math.pi / n_phi)
        uu, pp = np.meshgrid(u, phi, indexing="ij")
        rho = np.sqrt(np.clip(1.0 - uu ** 2, 0.0, None))
        dirs = (uu[..., None] * frame[0]
                + (rho * np.cos(pp))[..., None] * frame[1]
                + (rho * np.sin(pp))[..., None] * frame[2])
        weights = np.outer(wu, wphi)
        return dirs.reshape(-1, 3), weights.ravel()
    raise PreconditionError(f"sphere quadrature is only available for d <= 3 (got d={d}); use atomic measures")


def tensor_rule(nodes_1d: np.ndarray, weights_1d: np.ndarray, d: int,
                max_nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor-product grid of a one-dimensional rule in R^d."""
    total = nodes_1d.size ** d
    if total > max_nodes:
        raise ResourceCapError(f"tensor quadrature needs {total} nodes, cap is {max_nodes}")
    grids = np.meshgrid(*([nodes_1d] * d), indexing="ij")
    wgrids = np.meshgrid(*([weights_1d] * d), indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([w.ravel() for w in wgrids], axis=-1), axis=-1)
    return points, weights
