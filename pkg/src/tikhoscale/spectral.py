"""Singular systems, numerical rank and Picard diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, NamedTuple, Optional

import numpy as np
import scipy.linalg

from .errors import InputError, NumericError

__all__ = [
    "SVDFactors",
    "SpectralSystem",
    "PicardRow",
    "factorize",
    "decompose",
    "numerical_rank",
    "picard_table",
]


@dataclass(frozen=True)
class SVDFactors:
    """The ``k`` dominant singular triplets of a matrix, sign-normalised.

    Kept separate from the data so one factorisation serves many right-hand
    sides (noise realisations, whitening scales).
    """

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def k(self) -> int:
        return self.sigma.shape[0]

    def project(self, b, scale: float = 1.0) -> "SpectralSystem":
        """Spectral system for data ``b``; the matrix is taken as ``A / scale``.

        ``b`` is used as given, so a caller whitening by a scalar divides
        the data itself and passes the same factor here.
        """
        b = np.asarray(b, dtype=float)
        if b.shape != (self.n,):
            raise InputError(f"data length {b.shape} does not match system size {self.n}")
        if not scale > 0:
            raise InputError(f"scale must be positive, got {scale!r}")
        beta = self.U.T @ b
        return SpectralSystem(
            sigma=self.sigma / scale if scale != 1.0 else self.sigma,
            beta=beta,
            V=self.V,
            b_norm_sq=float(b @ b),
            n=self.n,
            U=self.U,
        )


@dataclass(frozen=True)
class SpectralSystem:
    """Singular values, projected data ``beta = U^T b`` and right vectors."""

    sigma: np.ndarray
    beta: np.ndarray
    V: np.ndarray
    b_norm_sq: float
    n: int
    U: Optional[np.ndarray] = None

    @property
    def k(self) -> int:
        return self.sigma.shape[0]

    def __post_init__(self):
        if self.beta.shape != self.sigma.shape:
            raise InputError("sigma and beta lengths differ")
        if self.V.shape != (self.V.shape[0], self.k):
            raise InputError("V must have one column per singular value")
        if self.k > self.n:
            raise InputError("more singular triplets than the system size")
        if np.any(self.sigma <= 0) or np.any(np.diff(self.sigma) > 0):
            raise InputError("singular values must be positive and nonincreasing")

    def scaled(self, factor: float) -> "SpectralSystem":
        """System for ``A / factor`` and ``b / factor`` (scalar whitening)."""
        if not factor > 0:
            raise InputError(f"scale factor must be positive, got {factor!r}")
        return SpectralSystem(
            sigma=self.sigma / factor,
            beta=self.beta / factor,
            V=self.V,
            b_norm_sq=self.b_norm_sq / factor**2,
            n=self.n,
            U=self.U,
        )


def _fix_signs(U, Vt):
    # Largest-magnitude entry of each left vector made positive; argmax picks
    # the lowest index among ties.
    rows = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[rows, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, Vt * signs[:, None]


def factorize(A, k: Optional[int] = None) -> SVDFactors:
    """Dominant ``k`` singular triplets (all positive ones when ``k`` is None).

    A dense LAPACK factorisation is computed and truncated; triplets whose
    singular value is exactly zero are dropped.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError("expected a square matrix")
    if not np.all(np.isfinite(A)):
        raise InputError("matrix has non-finite entries")
    n = A.shape[0]
    if k is not None:
        if isinstance(k, bool) or int(k) != k or not 1 <= k <= n:
            raise InputError(f"k must be an integer in [1, {n}], got {k!r}")
        k = int(k)
    try:
        U, s, Vt = scipy.linalg.svd(A, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        U, s, Vt = scipy.linalg.svd(A, full_matrices=False, lapack_driver="gesvd")
    keep = int(np.count_nonzero(s > 0))
    if keep == 0:
        raise NumericError("matrix has no positive singular values")
    if k is not None:
        keep = min(keep, k)
    U, Vt = _fix_signs(U[:, :keep], Vt[:keep])
    return SVDFactors(
        U=np.ascontiguousarray(U),
        sigma=s[:keep].copy(),
        V=np.ascontiguousarray(Vt.T),
    )


def decompose(A, b, k: Optional[int] = None) -> SpectralSystem:
    return factorize(A, k).project(b)


def numerical_rank(sigma, epsilon: float) -> int:
    """Number of singular values strictly above ``epsilon``."""
    sigma = np.asarray(sigma, dtype=float)
    if not epsilon > 0:
        raise InputError(f"precision must be positive, got {epsilon!r}")
    if np.any(np.diff(sigma) > 0):
        raise InputError("singular values must be sorted nonincreasing")
    return int(np.count_nonzero(sigma > epsilon))


class PicardRow(NamedTuple):
    i: int
    sigma: float
    abs_beta: float
    ratio: float


def picard_table(sys: SpectralSystem) -> List[PicardRow]:
    """Rows ``(i, sigma_i, |beta_i|, |beta_i| / sigma_i)`` with 1-based ``i``."""
    ab = np.abs(sys.beta)
    ratio = ab / sys.sigma
    return [
        PicardRow(i + 1, float(s), float(a), float(r))
        for i, (s, a, r) in enumerate(zip(sys.sigma, ab, ratio))
    ]
