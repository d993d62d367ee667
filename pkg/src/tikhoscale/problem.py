"""Kernels and source functions on the unit square.

The gravity family ``H(s, t) = d / (d**2 + (s - t)**2) ** 1.5`` is the
reference test problem: its squared L2 norm and its integrals over grid
cells are known in closed form, so discretisation error can be measured
exactly.  Arbitrary kernels can be supplied as callables; they support only
midpoint assembly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Optional, Sequence

import numpy as np

from .errors import InputError, UnsupportedOperationError

if TYPE_CHECKING:
    from .galerkin import Grid

__all__ = [
    "KernelSpec",
    "SourceSpec",
    "kernel_eval",
    "kernel_norm_sq",
    "element_integral_exact",
    "exact_element_matrix",
    "source_eval",
    "DEFAULT_BREAKPOINTS",
    "DEFAULT_LEVELS",
]

GRAVITY = "gravity"
TABULATED = "tabulated"

SMOOTH_SINE = "smooth_sine"
PIECEWISE_CONSTANT = "piecewise_constant"

DEFAULT_BREAKPOINTS = (1.0 / 3.0, 2.0 / 3.0)
DEFAULT_LEVELS = (0.5, 1.5, 0.75)


@dataclass(frozen=True)
class KernelSpec:
    """A square-integrable kernel on ``[0, 1] x [0, 1]``.

    Use :meth:`gravity` or :meth:`tabulated` rather than the raw constructor.
    A tabulated callable must accept numpy arrays and broadcast.
    """

    family: str
    depth: Optional[float] = None
    func: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = field(
        default=None, compare=False
    )

    def __post_init__(self):
        if self.family == GRAVITY:
            if self.depth is None or not (self.depth > 0) or not math.isfinite(self.depth):
                raise InputError(f"gravity kernel needs a finite depth d > 0, got {self.depth!r}")
        elif self.family == TABULATED:
            if not callable(self.func):
                raise InputError("tabulated kernel needs a callable H(s, t)")
        else:
            raise InputError(f"unknown kernel family {self.family!r}")

    @classmethod
    def gravity(cls, d: float) -> "KernelSpec":
        return cls(GRAVITY, depth=float(d))

    @classmethod
    def tabulated(cls, func) -> "KernelSpec":
        return cls(TABULATED, func=func)

    @property
    def is_gravity(self) -> bool:
        return self.family == GRAVITY


@dataclass(frozen=True)
class SourceSpec:
    """Source function ``f(t)`` on ``[0, 1]``.

    ``SmoothSine`` is ``sin(pi t) + 0.5 sin(2 pi t)``.  ``PiecewiseConstant``
    takes the level of the interval containing ``t``; intervals are closed on
    the right, so a point sitting exactly on a breakpoint takes the level to
    its left.
    """

    family: str = SMOOTH_SINE
    breakpoints: tuple = ()
    levels: tuple = ()

    def __post_init__(self):
        if self.family == SMOOTH_SINE:
            return
        if self.family != PIECEWISE_CONSTANT:
            raise InputError(f"unknown source family {self.family!r}")
        bp = tuple(float(b) for b in self.breakpoints)
        lv = tuple(float(v) for v in self.levels)
        if any(not (0.0 < b < 1.0) for b in bp):
            raise InputError("breakpoints must lie strictly inside (0, 1)")
        if any(b1 <= b0 for b0, b1 in zip(bp, bp[1:])):
            raise InputError("breakpoints must be strictly increasing")
        if len(lv) != len(bp) + 1:
            raise InputError("need exactly one more level than breakpoints")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "levels", lv)

    @classmethod
    def smooth_sine(cls) -> "SourceSpec":
        return cls(SMOOTH_SINE)

    @classmethod
    def piecewise_constant(
        cls,
        breakpoints: Sequence[float] = DEFAULT_BREAKPOINTS,
        levels: Sequence[float] = DEFAULT_LEVELS,
    ) -> "SourceSpec":
        return cls(PIECEWISE_CONSTANT, tuple(breakpoints), tuple(levels))


def _check_unit(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise InputError(f"{name} must lie in [0, 1]")
    return arr


def kernel_eval(spec: KernelSpec, s, t):
    """Evaluate ``H(s, t)``; scalars give a float, arrays broadcast."""
    s_arr = _check_unit(s, "s")
    t_arr = _check_unit(t, "t")
    if spec.is_gravity:
        d = spec.depth
        u = s_arr - t_arr
        out = d / (d * d + u * u) ** 1.5
    else:
        out = np.asarray(spec.func(s_arr, t_arr), dtype=float)
        if not np.all(np.isfinite(out)):
            raise InputError("tabulated kernel returned non-finite values")
    if out.ndim == 0:
        return float(out)
    return out


def kernel_norm_sq(spec: KernelSpec) -> float:
    """Closed-form ``||H||**2`` over the unit square (gravity only)."""
    if not spec.is_gravity:
        raise UnsupportedOperationError(
            "analytic norm is only known for the gravity kernel; integrate numerically"
        )
    d = spec.depth
    return (3.0 * math.atan(1.0 / d) + d / (d * d + 1.0)) / (4.0 * d**3)


def _require_exact(spec: KernelSpec, grid_s: "Grid", grid_t: "Grid") -> float:
    if not spec.is_gravity:
        raise UnsupportedOperationError("exact element integrals exist only for the gravity kernel")
    if not math.isclose(grid_s.ds, grid_t.ds, rel_tol=1e-12, abs_tol=0.0):
        raise UnsupportedOperationError(
            "exact element integrals need equal spacing in s and t; use midpoint assembly"
        )
    return grid_s.ds


def _cell_integral(u, h, d):
    # Normalised double integral of the gravity kernel over the cell pair whose
    # left edges differ by u, i.e. (F(u+h) + F(u-h) - 2F(u)) / (d h) with
    # F(u) = sqrt(u^2 + d^2), rewritten as two first differences to avoid
    # cancellation on fine grids.
    f0 = np.hypot(u, d)
    fp = np.hypot(u + h, d)
    fm = np.hypot(u - h, d)
    second = (2.0 * u * h + h * h) / (fp + f0) + (h * h - 2.0 * u * h) / (fm + f0)
    return second / (d * h)


def element_integral_exact(spec: KernelSpec, grid_s: "Grid", grid_t: "Grid", i: int, j: int) -> float:
    """Exact Galerkin entry ``a_ij`` for the normalised box basis (0-based i, j)."""
    h = _require_exact(spec, grid_s, grid_t)
    if not (0 <= i < grid_s.n and 0 <= j < grid_t.n):
        raise InputError(f"cell index ({i}, {j}) outside a {grid_s.n}x{grid_t.n} grid")
    u = (i - j) * h
    return float(_cell_integral(u, h, spec.depth))


def exact_element_matrix(spec: KernelSpec, grid_s: "Grid", grid_t: "Grid") -> np.ndarray:
    h = _require_exact(spec, grid_s, grid_t)
    i = np.arange(grid_s.n)[:, None]
    j = np.arange(grid_t.n)[None, :]
    return _cell_integral((i - j) * h, h, spec.depth)


def source_eval(spec: SourceSpec, t):
    """Evaluate ``f(t)``; scalars give a float, arrays are mapped elementwise."""
    t_arr = _check_unit(t, "t")
    if spec.family == SMOOTH_SINE:
        out = np.sin(np.pi * t_arr) + 0.5 * np.sin(2.0 * np.pi * t_arr)
    else:
        idx = np.searchsorted(np.asarray(spec.breakpoints), t_arr, side="left")
        out = np.asarray(spec.levels)[idx]
    if np.ndim(out) == 0:
        return float(out)
    return out
