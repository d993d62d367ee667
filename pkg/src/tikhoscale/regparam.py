"""Truncated parameter-choice functionals and the one-dimensional lambda search.

All four functionals are written in terms of the singular values ``sigma``
and projected data ``beta`` of the first ``p`` triplets, so a search costs
``O(p)`` per trial value.  The discrepancy-type rules (MDP, ADP) are solved
by minimising the absolute distance to their target rather than by root
finding.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import InputError, NumericError
from .spectral import SpectralSystem

__all__ = [
    "Method",
    "SearchConfig",
    "LambdaEstimate",
    "filter_factor",
    "eta",
    "truncated_tail",
    "functional_value",
    "objective_value",
    "default_lambda_grid",
    "estimate_lambda",
    "estimate_lambda_tilde",
    "scale_lambda",
    "unscale_lambda",
]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class Method(str, enum.Enum):
    MDP = "MDP"
    ADP = "ADP"
    UPRE = "UPRE"
    GCV = "GCV"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise InputError(f"unknown method {value!r}; expected one of {names}") from None


@dataclass(frozen=True)
class SearchConfig:
    """Search settings.

    When ``lambda_grid`` is None a log-spaced grid of ``grid_points`` values
    over ``[sigma_p * 10**-decades_below, sigma_1 * 10**decades_above]`` is
    built for each system.  ``zeta_sq`` is the noise variance per data
    coefficient; ``tau`` scales the MDP target ``zeta_sq * tau * p``.
    """

    lambda_grid: Optional[tuple] = None
    grid_points: int = 200
    decades_below: float = 2.0
    decades_above: float = 2.0
    refine_iters: int = 40
    zeta_sq: float = 1.0
    tau: float = 1.0

    def __post_init__(self):
        if self.lambda_grid is not None:
            grid = tuple(float(x) for x in np.ravel(self.lambda_grid))
            if len(grid) < 2:
                raise InputError("lambda grid needs at least two points")
            if any(not (x > 0 and math.isfinite(x)) for x in grid):
                raise InputError("lambda grid values must be positive and finite")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise InputError("lambda grid must be strictly ascending")
            object.__setattr__(self, "lambda_grid", grid)
        if self.grid_points < 2:
            raise InputError("need at least two grid points")
        if self.refine_iters < 0:
            raise InputError("refine_iters must be nonnegative")
        if not self.zeta_sq >= 0:
            raise InputError("zeta_sq must be nonnegative")
        if not self.tau > 0:
            raise InputError("tau must be positive")

    def with_zeta_sq(self, zeta_sq: float) -> "SearchConfig":
        return replace(self, zeta_sq=zeta_sq)


@dataclass(frozen=True)
class LambdaEstimate:
    method: Method
    lambda_: float
    lambda_tilde: float
    p: int
    functional_at_min: float
    grid_hit_boundary: bool


def filter_factor(lam, sigma):
    """Tikhonov filter ``sigma**2 / (lambda**2 + sigma**2)``."""
    sigma = np.asarray(sigma, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(sigma <= 0):
        raise InputError("filter factor needs sigma > 0")
    if np.any(lam < 0):
        raise InputError("lambda must be nonnegative")
    s2 = sigma * sigma
    out = s2 / (lam * lam + s2)
    return float(out) if out.ndim == 0 else out


def _complement(lam, a):
    # 1 - q computed directly; shape (len(lam), p)
    lam2 = (lam * lam)[:, None]
    return lam2 / (a * a + lam2)


def _check_p(p, length):
    if isinstance(p, bool) or int(p) != p or not 0 <= p <= length:
        raise InputError(f"rank p={p!r} outside [0, {length}]")
    return int(p)


def eta(lam, p: int, k: int, a, z):
    """``sum_{i<=p} z_i**2 (lambda**2 / (a_i**2 + lambda**2))**k``."""
    a = np.asarray(a, dtype=float)
    z = np.asarray(z, dtype=float)
    if a.shape != z.shape:
        raise InputError("a and z must have equal length")
    p = _check_p(p, a.shape[0])
    if k not in (1, 2):
        raise InputError(f"power k must be 1 or 2, got {k!r}")
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    w = _complement(lam_arr, a[:p]) ** k
    out = w @ (z[:p] ** 2)
    return float(out[0]) if np.ndim(lam) == 0 else out


def _terms(lam_arr, sys: SpectralSystem, p: int):
    sigma = sys.sigma[:p]
    beta2 = sys.beta[:p] ** 2
    comp = _complement(lam_arr, sigma)
    resid = (comp * comp) @ beta2
    qsum = p - comp.sum(axis=1)
    return comp, beta2, resid, qsum


def truncated_tail(sys: SpectralSystem, p: int) -> float:
    """Energy of the data beyond the first ``p`` components, from ``||b||**2``."""
    p = _check_p(p, sys.k)
    return max(sys.b_norm_sq - float(np.sum(sys.beta[:p] ** 2)), 0.0)


def functional_value(method, lam, sys: SpectralSystem, p: int, cfg: SearchConfig, N: int):
    """Evaluate the truncated functional; ``lam`` may be a scalar or an array.

    GCV uses the trace of ``I`` minus the truncated influence matrix,
    ``N - sum_{i<=p} q_i``, in the denominator, and recovers the energy of
    the discarded components from ``||b||**2 - sum_{i<=p} beta_i**2`` so the
    trailing triplets are never needed.
    """
    method = Method.parse(method)
    p = _check_p(p, sys.k)
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam_arr < 0):
        raise InputError("lambda must be nonnegative")
    comp, beta2, resid, qsum = _terms(lam_arr, sys, p)
    if method is Method.MDP:
        out = resid
    elif method is Method.ADP:
        out = comp @ beta2
    elif method is Method.UPRE:
        out = resid + 2.0 * cfg.zeta_sq * qsum
    else:
        if N < p:
            raise InputError(f"GCV needs N >= p, got N={N}, p={p}")
        tail = truncated_tail(sys, p)
        denom = N - qsum
        if np.any(denom <= 0):
            raise NumericError("GCV denominator vanished (lambda = 0 with p = N)")
        out = N * N * (resid + tail) / (denom * denom)
    return float(out[0]) if np.ndim(lam) == 0 else out


def objective_value(method, lam, sys: SpectralSystem, p: int, cfg: SearchConfig, N: int):
    """Quantity minimised by the search: the functional for UPRE and GCV,
    the distance to the target for MDP and ADP."""
    method = Method.parse(method)
    val = functional_value(method, lam, sys, p, cfg, N)
    if method is Method.MDP:
        return np.abs(val - cfg.zeta_sq * cfg.tau * p)
    if method is Method.ADP:
        return np.abs(val - cfg.zeta_sq * p)
    return val


def default_lambda_grid(sigma, p: int, cfg: SearchConfig) -> np.ndarray:
    if cfg.lambda_grid is not None:
        return np.asarray(cfg.lambda_grid, dtype=float)
    # built relative to sigma_1 so that rescaling the system rescales the grid exactly
    lo = sigma[p - 1] / sigma[0] * 10.0 ** (-cfg.decades_below)
    hi = 10.0 ** cfg.decades_above
    return sigma[0] * np.geomspace(lo, hi, cfg.grid_points)


def _golden(f, lo, hi, iters, scale=1.0):
    """Golden-section search on log(lambda / scale); returns the best point visited."""
    def at(x):
        return scale * math.exp(x)

    a, b = math.log(lo / scale), math.log(hi / scale)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(at(c)), f(at(d))
    best = min((fc, c), (fd, d))
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(at(c))
            best = min(best, (fc, c))
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(at(d))
            best = min(best, (fd, d))
    return at(best[1]), best[0]


def estimate_lambda(method, sys: SpectralSystem, p: int, cfg: SearchConfig, N: int, ds: float) -> LambdaEstimate:
    """Grid argmin followed by golden-section refinement in the adjacent cells.

    Ties on the grid go to the smallest lambda.  ``grid_hit_boundary`` is set
    when the grid argmin is an end point, in which case the true minimiser
    may lie outside the searched range.
    """
    method = Method.parse(method)
    p = _check_p(p, sys.k)
    if p < 1:
        raise InputError("parameter estimation needs rank p >= 1")
    grid = default_lambda_grid(sys.sigma, p, cfg)
    if grid.size == 0:
        raise InputError("empty lambda grid")
    values = objective_value(method, grid, sys, p, cfg, N)
    i = int(np.argmin(values))
    boundary = i == 0 or i == grid.size - 1
    lam, fmin = float(grid[i]), float(values[i])
    if cfg.refine_iters > 0:
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, grid.size - 1)]

        def f(x):
            return float(objective_value(method, x, sys, p, cfg, N))

        cand, fcand = _golden(f, lo, hi, cfg.refine_iters, scale=float(sys.sigma[0]))
        if fcand < fmin:
            lam, fmin = cand, fcand
    return LambdaEstimate(
        method=method,
        lambda_=lam,
        lambda_tilde=scale_lambda(lam, ds),
        p=p,
        functional_at_min=fmin,
        grid_hit_boundary=boundary,
    )


def estimate_lambda_tilde(method, sys: SpectralSystem, p: int, cfg: SearchConfig, N: int, ds: float) -> LambdaEstimate:
    """Search on unweighted coefficients with noise variance ``ds`` per coefficient.

    For unit-variance sample noise the box-basis coefficients carry variance
    ``ds``; the minimiser found this way is the scale-invariant parameter,
    and ``lambda_`` is recovered as ``lambda_tilde / sqrt(ds)``.
    """
    est = estimate_lambda(method, sys, p, cfg.with_zeta_sq(ds), N, 1.0)
    return replace(
        est,
        lambda_=unscale_lambda(est.lambda_, ds),
        lambda_tilde=est.lambda_,
    )


def scale_lambda(lam: float, ds: float) -> float:
    """Resolution-independent parameter ``sqrt(ds) * lambda``."""
    if not lam > 0 or not ds > 0:
        raise InputError("lambda and ds must be positive")
    return math.sqrt(ds) * lam


def unscale_lambda(lam_tilde: float, ds: float) -> float:
    if not lam_tilde > 0 or not ds > 0:
        raise InputError("lambda_tilde and ds must be positive")
    return lam_tilde / math.sqrt(ds)
