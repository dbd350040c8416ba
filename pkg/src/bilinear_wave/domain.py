"""Grids, the Dirichlet Laplacian and the discrete norms used by the estimates.

Fields are plain numpy arrays.  A scalar field on a :class:`SpatialGrid` is a
1-D array of length ``grid.size`` holding the interior values (flattened in C
order for 2-D grids); a space-time field on a :class:`TimeGrid` has shape
``(time.steps + 1, grid.size)``.  Boundary values are implicitly zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ShapeError


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform tensor grid on an interval or rectangle ``[0, L_1] x [0, L_2]``.

    Parameters
    ----------
    n : tuple of int
        Interior point count per axis.
    extent : tuple of float
        Side length per axis.
    """

    n: tuple[int, ...]
    extent: tuple[float, ...]

    def __post_init__(self):
        n = tuple(int(k) for k in np.atleast_1d(self.n))
        extent = tuple(float(e) for e in np.atleast_1d(self.extent))
        if len(extent) == 1 and len(n) > 1:
            extent = extent * len(n)
        if len(n) not in (1, 2) or len(n) != len(extent):
            raise ValueError(f"need 1 or 2 axes with matching extents, got n={n}, extent={extent}")
        if min(n) < 1:
            raise ValueError("each axis needs at least one interior point")
        if min(extent) <= 0:
            raise ValueError("extents must be positive")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "extent", extent)

    @classmethod
    def interval(cls, n: int, length: float = 1.0) -> SpatialGrid:
        return cls((n,), (length,))

    @classmethod
    def rectangle(cls, nx: int, ny: int, lx: float = 1.0, ly: float = 1.0) -> SpatialGrid:
        return cls((nx, ny), (lx, ly))

    @property
    def dimension(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / (k + 1) for L, k in zip(self.extent, self.n))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list[np.ndarray]:
        """Interior node coordinates along each axis."""
        return [h * np.arange(1, k + 1) for h, k in zip(self.spacing, self.n)]

    def coordinates(self) -> list[np.ndarray]:
        """Flattened coordinate arrays, one per axis, each of length ``size``."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return [c.ravel() for c in mesh]

    def refined(self, times: int = 1) -> SpatialGrid:
        """Grid with the mesh width halved ``times`` times."""
        n = self.n
        for _ in range(times):
            n = tuple(2 * k + 1 for k in n)
        return SpatialGrid(n, self.extent)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_k = k * dt`` on the truncated horizon ``[0, horizon]``."""

    horizon: float
    steps: int

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.steps < 2:
            raise ValueError("need at least two time steps")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def nodes(self) -> np.ndarray:
        return self.dt * np.arange(self.steps + 1)

    def weights(self) -> np.ndarray:
        """Trapezoidal quadrature weights (already multiplied by ``dt``)."""
        w = np.full(self.steps + 1, self.dt)
        w[0] = w[-1] = 0.5 * self.dt
        return w

    def refined(self, times: int = 1) -> TimeGrid:
        return TimeGrid(self.horizon, self.steps * 2**times)

    def extended(self, factor: int) -> TimeGrid:
        """Same step size, horizon multiplied by ``factor``."""
        return TimeGrid(self.horizon * factor, self.steps * factor)


def check_scalar(v: np.ndarray, g: SpatialGrid) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (g.size,):
        raise ShapeError(f"scalar field has shape {v.shape}, grid expects ({g.size},)")
    return v


def check_spacetime(w: np.ndarray, tg: TimeGrid, g: SpatialGrid) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (tg.steps + 1, g.size):
        raise ShapeError(
            f"space-time field has shape {w.shape}, grids expect ({tg.steps + 1}, {g.size})"
        )
    return w


def laplacian_apply(v: np.ndarray, g: SpatialGrid) -> np.ndarray:
    """Central-difference Dirichlet Laplacian (3-point in 1-D, 5-point in 2-D).

    Works on a single scalar field or on a stack of them (last axis = space).
    """
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != g.size:
        raise ShapeError(f"field has {v.shape[-1]} spatial values, grid has {g.size}")
    lead = v.shape[:-1]
    u = v.reshape(lead + g.shape)
    out = np.zeros_like(u)
    for axis, h in enumerate(g.spacing):
        ax = len(lead) + axis
        padded = np.pad(u, [(0, 0)] * ax + [(1, 1)] + [(0, 0)] * (u.ndim - ax - 1))
        hi = np.take(padded, np.arange(2, padded.shape[ax]), axis=ax)
        lo = np.take(padded, np.arange(0, padded.shape[ax] - 2), axis=ax)
        out += (hi - 2.0 * u + lo) / h**2
    return out.reshape(v.shape)


@lru_cache(maxsize=32)
def laplacian_matrix(g: SpatialGrid) -> sp.csr_matrix:
    """Sparse matrix of :func:`laplacian_apply` (negative definite)."""
    ops = []
    for k, h in zip(g.n, g.spacing):
        ops.append(sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(k, k)) / h**2)
    if g.dimension == 1:
        return sp.csr_matrix(ops[0])
    ix, iy = (sp.identity(k) for k in g.n)
    return sp.csr_matrix(sp.kron(ops[0], iy) + sp.kron(ix, ops[1]))


def inner_l2(a: np.ndarray, b: np.ndarray, g: SpatialGrid) -> float:
    """Midpoint-rule L2 inner product over the interior cells."""
    a = check_scalar(a, g)
    b = check_scalar(b, g)
    return float(a @ b) * g.cell_volume


def norm_l2(v: np.ndarray, g: SpatialGrid) -> float:
    return float(np.sqrt(inner_l2(v, v, g)))


def norm_h10(v: np.ndarray, g: SpatialGrid) -> float:
    """Discrete gradient norm, with zero boundary neighbours."""
    u = check_scalar(v, g).reshape(g.shape)
    total = 0.0
    for axis, h in enumerate(g.spacing):
        pad = [(0, 0)] * g.dimension
        pad[axis] = (1, 1)
        d = np.diff(np.pad(u, pad), axis=axis) / h
        total += float(np.sum(d * d))
    return float(np.sqrt(total * g.cell_volume))


@lru_cache(maxsize=32)
def _neg_laplacian_factor(g: SpatialGrid):
    if g.dimension == 1:
        (k,), (h,) = g.n, g.spacing
        ab = np.empty((3, k))
        ab[0] = ab[2] = -1.0 / h**2
        ab[1] = 2.0 / h**2
        return lambda rhs: scipy.linalg.solve_banded((1, 1), ab, rhs)
    return spla.factorized(sp.csc_matrix(-laplacian_matrix(g)))


def solve_neg_laplacian(v: np.ndarray, g: SpatialGrid) -> np.ndarray:
    """Solve ``-Δ_h w = v`` with homogeneous Dirichlet data."""
    v = check_scalar(v, g)
    w = _neg_laplacian_factor(g)(v)
    if not np.all(np.isfinite(w)):
        raise FloatingPointError("Dirichlet Laplacian solve produced non-finite values")
    return w


def norm_hminus1(v: np.ndarray, g: SpatialGrid) -> float:
    """Dual norm ``sqrt(<v, (-Δ_h)^{-1} v>)``."""
    v = check_scalar(v, g)
    if not np.any(v):
        return 0.0
    return float(np.sqrt(max(inner_l2(v, solve_neg_laplacian(v, g), g), 0.0)))


def smallest_eigenvalue(g: SpatialGrid) -> float:
    """Smallest eigenvalue of ``-Δ_h`` (closed form on tensor grids)."""
    return float(
        sum(2.0 / h**2 * (1.0 - np.cos(np.pi * h / L)) for h, L in zip(g.spacing, g.extent))
    )


def poincare_constant(g: SpatialGrid) -> float:
    """Best constant in ``||v||^2 <= c ||grad v||^2`` for the discrete operator."""
    return 1.0 / smallest_eigenvalue(g)


def spacetime_inner(a: np.ndarray, b: np.ndarray, tg: TimeGrid, g: SpatialGrid) -> float:
    """Trapezoid-in-time, midpoint-in-space inner product on ``Q``."""
    a = check_spacetime(a, tg, g)
    b = check_spacetime(b, tg, g)
    return float(tg.weights() @ np.einsum("ki,ki->k", a, b)) * g.cell_volume


def spacetime_norm_l2(w: np.ndarray, tg: TimeGrid, g: SpatialGrid) -> float:
    return float(np.sqrt(spacetime_inner(w, w, tg, g)))


def slice_norms_l2(w: np.ndarray, g: SpatialGrid) -> np.ndarray:
    """Spatial L2 norm of every time slice."""
    w = np.asarray(w, dtype=float)
    return np.sqrt(np.einsum("ki,ki->k", w, w) * g.cell_volume)


def norm_linf_l2(w: np.ndarray, g: SpatialGrid) -> float:
    return float(slice_norms_l2(w, g).max())


def norm_linf(w: np.ndarray) -> float:
    return float(np.max(np.abs(w))) if np.size(w) else 0.0


def norm_l2_linf(w: np.ndarray, tg: TimeGrid) -> float:
    """``L2(0,T; L_inf)``: trapezoidal time sum of squared spatial max-norms."""
    m = np.max(np.abs(np.asarray(w, dtype=float)), axis=1)
    return float(np.sqrt(tg.weights() @ (m * m)))


def control_norm(w: np.ndarray, tg: TimeGrid) -> float:
    """Discrete surrogate of the ``L2(0,inf;L_inf) ∩ L_inf(Q)`` norm."""
    return max(norm_linf(w), norm_l2_linf(w, tg))


def forcing_norm(w: np.ndarray, tg: TimeGrid, g: SpatialGrid) -> float:
    """Discrete surrogate of the ``L_inf(0,inf;L2) ∩ L2(Q)`` norm."""
    return max(norm_linf_l2(w, g), spacetime_norm_l2(w, tg, g))
