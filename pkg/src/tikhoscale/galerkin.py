"""Galerkin discretisation with the normalised box basis.

Each cell of a uniform grid carries the basis function ``1/sqrt(ds)`` on the
cell, so expansion coefficients are samples scaled by ``sqrt(ds)`` and
matrix entries are ``sqrt(ds dt) H(s_i, t_j)`` under the midpoint rule.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import problem
from .errors import InputError
from .problem import KernelSpec

__all__ = [
    "Assembly",
    "Grid",
    "DiscreteSystem",
    "make_grid",
    "build_matrix",
    "data_coefficients",
    "coarse_indices",
    "downsample_matrix",
    "delta_sq",
    "assemble_system",
]


class Assembly(str, enum.Enum):
    MIDPOINT = "midpoint"
    EXACT = "exact"

    @classmethod
    def parse(cls, value) -> "Assembly":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InputError(f"unknown assembly {value!r}; expected 'midpoint' or 'exact'") from None


@dataclass(frozen=True)
class Grid:
    """Uniform midpoint grid of ``n`` cells on ``[0, 1]``."""

    n: int

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise InputError(f"grid size must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def ds(self) -> float:
        return 1.0 / self.n

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) / self.n

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.n + 1) / self.n


@dataclass(frozen=True)
class DiscreteSystem:
    A: np.ndarray
    b: np.ndarray
    grid_s: Grid
    grid_t: Grid
    assembly: Assembly

    def __post_init__(self):
        if self.A.shape != (self.grid_s.n, self.grid_t.n):
            raise InputError(f"matrix shape {self.A.shape} does not match the grids")
        if self.b.shape != (self.grid_s.n,):
            raise InputError(f"data length {self.b.shape} does not match the grids")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise InputError("system contains non-finite entries")


def make_grid(n: int) -> Grid:
    return Grid(n)


def build_matrix(spec: KernelSpec, grid_s: Grid, grid_t: Grid, assembly=Assembly.MIDPOINT) -> np.ndarray:
    """Assemble the ``n_s x n_t`` Galerkin matrix.

    Midpoint assembly evaluates the kernel at cell centres; exact assembly
    integrates the gravity kernel over each cell pair and requires
    ``ds == dt``.
    """
    assembly = Assembly.parse(assembly)
    if assembly is Assembly.EXACT:
        return problem.exact_element_matrix(spec, grid_s, grid_t)
    s = grid_s.midpoints[:, None]
    t = grid_t.midpoints[None, :]
    values = np.asarray(problem.kernel_eval(spec, s, t), dtype=float)
    values = np.broadcast_to(values, (grid_s.n, grid_t.n))
    return math.sqrt(grid_s.ds * grid_t.ds) * values


def data_coefficients(samples, ds: float) -> np.ndarray:
    """Box-basis coefficients ``b_i = g(s_i) sqrt(ds)``."""
    if not ds > 0:
        raise InputError(f"spacing must be positive, got {ds!r}")
    return np.asarray(samples, dtype=float) * math.sqrt(ds)


def coarse_indices(N: int, ell: int) -> np.ndarray:
    """Fine-grid indices sampled by a coarse grid of ``N // ell`` cells.

    For odd ``ell`` the coarse midpoints coincide with fine midpoints.  For
    even ``ell`` each coarse midpoint falls on a fine cell edge and the fine
    cell to its left is taken, which shifts the sample by ``ds_fine / 2``.
    """
    if isinstance(ell, bool) or int(ell) != ell or ell < 1:
        raise InputError(f"downsampling factor must be a positive integer, got {ell!r}")
    if N % ell:
        raise InputError(f"fine size {N} is not divisible by downsampling factor {ell}")
    return np.arange(N // ell) * ell + (ell - 1) // 2


def downsample_matrix(A_fine: np.ndarray, ell: int) -> np.ndarray:
    """Coarse matrix by sampling the fine one and rescaling by ``ell``.

    On uniform grids ``sqrt(ds_n dt_n) / sqrt(ds_N dt_N) == ell``.  Only
    square matrices (same grid in s and t) are handled.
    """
    A_fine = np.asarray(A_fine, dtype=float)
    if A_fine.ndim != 2 or A_fine.shape[0] != A_fine.shape[1]:
        raise InputError("downsampling needs a square matrix")
    idx = coarse_indices(A_fine.shape[0], ell)
    if ell == 1:
        return A_fine
    return float(ell) * A_fine[np.ix_(idx, idx)]


def delta_sq(spec: KernelSpec, A: np.ndarray) -> float:
    """Signed ``||H||**2 - ||A||_F**2``; negative values expose quadrature error."""
    A = np.asarray(A, dtype=float)
    return problem.kernel_norm_sq(spec) - float(np.sum(A * A))


def assemble_system(spec: KernelSpec, g_samples, n: int, assembly=Assembly.MIDPOINT) -> DiscreteSystem:
    """Matrix and data for an ``n``-cell grid, ``g`` sampled at its midpoints."""
    grid = make_grid(n)
    g_samples = np.asarray(g_samples, dtype=float)
    if g_samples.shape != (n,):
        raise InputError(f"expected {n} data samples, got shape {g_samples.shape}")
    assembly = Assembly.parse(assembly)
    A = build_matrix(spec, grid, grid, assembly)
    return DiscreteSystem(A, data_coefficients(g_samples, grid.ds), grid, grid, assembly)
