"""Coarse-to-fine regularised solves.

The regularisation parameter and the truncation rank are estimated on a
coarse system obtained by sampling the fine Galerkin matrix, then reused on
the fine grid, where only the leading ``p`` singular triplets are needed.

Noise-free data follow the plain transfer ``lambda_N = lambda_n``.  For data
with white noise of standard deviation ``zeta_e`` per sample, the data are
whitened by ``zeta_e`` and the search runs with coefficient variance
``ds_n``; the minimiser is the resolution-independent
``lambda_tilde = sqrt(ds) * lambda`` and is applied unchanged on the fine
grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Optional, Union

import numpy as np

from .errors import InputError
from .galerkin import (
    Assembly,
    Grid,
    build_matrix,
    coarse_indices,
    data_coefficients,
    downsample_matrix,
    make_grid,
)
from .problem import KernelSpec
from .regparam import (
    LambdaEstimate,
    Method,
    SearchConfig,
    estimate_lambda,
    estimate_lambda_tilde,
    filter_factor,
)
from .spectral import SVDFactors, SpectralSystem, factorize, numerical_rank

__all__ = [
    "NoiseFree",
    "White",
    "MultiscaleConfig",
    "RegularizedSolution",
    "MultiscaleSolver",
    "solve_truncated",
    "run_noise_free",
    "run_with_noise",
    "relative_error",
]


@dataclass(frozen=True)
class NoiseFree:
    pass


@dataclass(frozen=True)
class White:
    """Additive white noise with standard deviation ``zeta_e`` per sample."""

    zeta_e: float

    def __post_init__(self):
        if not (self.zeta_e > 0 and math.isfinite(self.zeta_e)):
            raise InputError(f"noise level zeta_e must be positive, got {self.zeta_e!r}")


NoiseMode = Union[NoiseFree, White]


@dataclass(frozen=True)
class MultiscaleConfig:
    N: int
    ell: int
    epsilon: float
    method: Method = Method.UPRE
    noise_mode: NoiseMode = field(default_factory=NoiseFree)
    search: SearchConfig = field(default_factory=SearchConfig)
    assembly: Assembly = Assembly.MIDPOINT

    def __post_init__(self):
        object.__setattr__(self, "method", Method.parse(self.method))
        object.__setattr__(self, "assembly", Assembly.parse(self.assembly))
        coarse_indices(self.N, self.ell)  # validates divisibility
        if self.N // self.ell < 2:
            raise InputError(f"coarse grid N/ell = {self.N // self.ell} must have at least 2 cells")
        if not self.epsilon > 0:
            raise InputError(f"rank precision epsilon must be positive, got {self.epsilon!r}")

    @property
    def n(self) -> int:
        return self.N // self.ell


@dataclass(frozen=True)
class RegularizedSolution:
    """Samples ``f(t_k)`` of the regularised source at the fine midpoints.

    ``lambda_tilde_used`` is the parameter that enters the filter factors
    together with the singular values the solve was given.
    """

    values: np.ndarray
    lambda_tilde_used: float
    p_used: int
    grid: Grid
    method: Optional[Method] = None
    estimate: Optional[LambdaEstimate] = None

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def solve_truncated(sys: SpectralSystem, lambda_tilde: float, p: int, grid_t: Grid) -> RegularizedSolution:
    """Filtered expansion over the first ``p`` triplets, mapped to samples of ``f``.

    With the normalised box basis ``f(t_k) = x_k / sqrt(dt)``.
    """
    if not lambda_tilde >= 0:
        raise InputError(f"lambda must be nonnegative, got {lambda_tilde!r}")
    if isinstance(p, bool) or int(p) != p or p < 0:
        raise InputError(f"rank must be a nonnegative integer, got {p!r}")
    if p > sys.k:
        raise InputError(f"rank {p} exceeds the {sys.k} available singular triplets")
    if sys.V.shape[0] != grid_t.n:
        raise InputError("grid does not match the solution dimension")
    p = int(p)
    sigma = sys.sigma[:p]
    coef = filter_factor(lambda_tilde, sigma) * sys.beta[:p] / sigma
    x = sys.V[:, :p] @ coef
    values = x / math.sqrt(grid_t.ds)
    return RegularizedSolution(values=values, lambda_tilde_used=float(lambda_tilde), p_used=p, grid=grid_t)


class MultiscaleSolver:
    """Holds the fine matrix and its factorisations for repeated solves.

    The fine SVD and the coarse SVDs depend only on the kernel and grid
    sizes, so one solver serves every noise realisation, method and rank
    precision for a given kernel and ``N``.
    """

    def __init__(self, spec: KernelSpec, N: int, assembly=Assembly.MIDPOINT, fine_matrix=None):
        self.spec = spec
        self.grid = make_grid(N)
        self.assembly = Assembly.parse(assembly)
        if fine_matrix is not None:
            fine_matrix = np.asarray(fine_matrix, dtype=float)
            if fine_matrix.shape != (N, N):
                raise InputError(f"fine matrix must be {N}x{N}")
            self.__dict__["fine_matrix"] = fine_matrix
        self._coarse: Dict[int, SVDFactors] = {}

    @property
    def N(self) -> int:
        return self.grid.n

    @cached_property
    def fine_matrix(self) -> np.ndarray:
        return build_matrix(self.spec, self.grid, self.grid, self.assembly)

    @cached_property
    def fine_factors(self) -> SVDFactors:
        return factorize(self.fine_matrix)

    def coarse_factors(self, ell: int) -> SVDFactors:
        if ell == 1:
            return self.fine_factors
        if ell not in self._coarse:
            self._coarse[ell] = factorize(downsample_matrix(self.fine_matrix, ell))
        return self._coarse[ell]

    def coarse_system(self, g, ell: int, zeta_e: Optional[float] = None) -> SpectralSystem:
        """Coarse spectral system from fine samples ``g``, whitened if ``zeta_e`` is given."""
        g = self._check_data(g)
        idx = coarse_indices(self.N, ell)
        ds = 1.0 / len(idx)
        scale = 1.0 if zeta_e is None else zeta_e
        b = data_coefficients(g[idx] / scale, ds)
        return self.coarse_factors(ell).project(b, scale=scale)

    def fine_system(self, g, p: int, zeta_e: Optional[float] = None) -> SpectralSystem:
        g = self._check_data(g)
        scale = 1.0 if zeta_e is None else zeta_e
        full = self.fine_factors
        if p > full.k:
            raise InputError(f"rank {p} exceeds the {full.k} positive singular values of the fine matrix")
        lead = SVDFactors(U=full.U[:, :p], sigma=full.sigma[:p], V=full.V[:, :p])
        return lead.project(data_coefficients(g / scale, self.grid.ds), scale=scale)

    def rank(self, ell: int, epsilon: float) -> int:
        return numerical_rank(self.coarse_factors(ell).sigma, epsilon)

    def estimate(self, g, ell: int, epsilon: float, method, search: SearchConfig, zeta_e: Optional[float] = None) -> LambdaEstimate:
        n = self.N // ell
        ds = 1.0 / n
        p = self.rank(ell, epsilon)
        if p < 1:
            raise InputError(f"no singular value of the n={n} system exceeds epsilon={epsilon}")
        sys = self.coarse_system(g, ell, zeta_e)
        if zeta_e is None:
            return estimate_lambda(method, sys, p, search.with_zeta_sq(1.0), n, ds)
        return estimate_lambda_tilde(method, sys, p, search, n, ds)

    def solve(self, g, ell: int, epsilon: float, method, search: Optional[SearchConfig] = None, zeta_e: Optional[float] = None) -> RegularizedSolution:
        method = Method.parse(method)
        search = search or SearchConfig()
        if zeta_e is not None and not zeta_e > 0:
            raise InputError(f"noise level zeta_e must be positive, got {zeta_e!r}")
        est = self.estimate(g, ell, epsilon, method, search, zeta_e)
        fine = self.fine_system(g, est.p, zeta_e)
        lam = est.lambda_ if zeta_e is None else est.lambda_tilde
        sol = solve_truncated(fine, lam, est.p, self.grid)
        return RegularizedSolution(
            values=sol.values,
            lambda_tilde_used=lam,
            p_used=est.p,
            grid=self.grid,
            method=method,
            estimate=est,
        )

    def _check_data(self, g) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        if g.shape != (self.N,):
            raise InputError(f"expected {self.N} fine data samples, got shape {g.shape}")
        if not np.all(np.isfinite(g)):
            raise InputError("data contain non-finite values")
        return g


def run_noise_free(cfg: MultiscaleConfig, spec: KernelSpec, g_samples, solver: Optional[MultiscaleSolver] = None) -> RegularizedSolution:
    """Coarse estimate with unit noise variance, fine solve with ``lambda_N = lambda_n``."""
    if not isinstance(cfg.noise_mode, NoiseFree):
        raise InputError("run_noise_free needs a NoiseFree configuration")
    solver = solver or MultiscaleSolver(spec, cfg.N, cfg.assembly)
    return solver.solve(g_samples, cfg.ell, cfg.epsilon, cfg.method, cfg.search)


def run_with_noise(cfg: MultiscaleConfig, spec: KernelSpec, g_obs, solver: Optional[MultiscaleSolver] = None) -> RegularizedSolution:
    """Whitened coarse estimate of ``lambda_tilde``, reused on the fine grid."""
    if not isinstance(cfg.noise_mode, White):
        raise InputError("run_with_noise needs a White noise configuration")
    solver = solver or MultiscaleSolver(spec, cfg.N, cfg.assembly)
    return solver.solve(g_obs, cfg.ell, cfg.epsilon, cfg.method, cfg.search, zeta_e=cfg.noise_mode.zeta_e)


def relative_error(sol: RegularizedSolution, truth) -> float:
    truth = np.asarray(truth, dtype=float)
    values = sol.values if isinstance(sol, RegularizedSolution) else np.asarray(sol, dtype=float)
    if truth.shape != values.shape:
        raise InputError(f"length mismatch: solution {values.shape}, truth {truth.shape}")
    ref = float(np.linalg.norm(truth))
    if ref == 0.0:
        raise InputError("relative error undefined for a zero reference")
    return float(np.linalg.norm(values - truth)) / ref
