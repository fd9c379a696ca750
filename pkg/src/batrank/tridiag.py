"""Tridiagonal precision algebra for the random-walk year prior.

The year effects carry a backwards simple random walk pinned at the final
year, whose implied precision matrix is tridiagonal with leading diagonal
(1, 2, ..., 2) and off-diagonals -1.  Everything here is O(n): quadratic
forms, banded Cholesky, triangular solves and Gaussian sampling with a
tridiagonal precision.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cholesky_banded, solve_banded


@dataclass(frozen=True)
class TridiagPrecision:
    """Symmetric tridiagonal matrix stored as its diagonal and off-diagonal."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        if self.diag.ndim != 1 or self.offdiag.ndim != 1:
            raise ValueError("diag and offdiag must be vectors")
        if self.offdiag.size != max(self.diag.size - 1, 0):
            raise ValueError("offdiag must have one entry fewer than diag")

    @property
    def n(self) -> int:
        return self.diag.size

    def add_diag(self, extra: np.ndarray) -> "TridiagPrecision":
        return TridiagPrecision(self.diag + extra, self.offdiag)

    def scale(self, factor: float) -> "TridiagPrecision":
        return TridiagPrecision(self.diag * factor, self.offdiag * factor)


@dataclass(frozen=True)
class TridiagCholesky:
    """Lower-bidiagonal factor L with L @ L.T equal to the source matrix."""

    diag: np.ndarray
    sub: np.ndarray

    @property
    def n(self) -> int:
        return self.diag.size

    def log_det_half(self) -> float:
        """log det(L) = 0.5 * log det(L L^T)."""
        return float(np.sum(np.log(self.diag)))


def build_Q(n: int) -> TridiagPrecision:
    """Structure matrix of the pinned backwards random walk.

    First diagonal entry 1, the rest 2, off-diagonals -1; the final effect
    is pinned to zero outside the matrix, which is why the last diagonal
    entry is 2 rather than 1.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    diag = np.full(n, 2.0)
    diag[0] = 1.0
    return TridiagPrecision(diag=diag, offdiag=np.full(n - 1, -1.0))


def mat_vec(Q: TridiagPrecision, v: np.ndarray) -> np.ndarray:
    """Q @ v in O(n)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (Q.n,):
        raise ValueError(f"vector has shape {v.shape}, expected ({Q.n},)")
    out = Q.diag * v
    if Q.n > 1:
        out[:-1] += Q.offdiag * v[1:]
        out[1:] += Q.offdiag * v[:-1]
    return out


def quad_form(Q: TridiagPrecision, v: np.ndarray) -> float:
    """v^T Q v; non-negative for positive definite Q."""
    v = np.asarray(v, dtype=float)
    if v.shape != (Q.n,):
        raise ValueError(f"vector has shape {v.shape}, expected ({Q.n},)")
    total = float(np.sum(Q.diag * v * v))
    if Q.n > 1:
        total += 2.0 * float(np.sum(Q.offdiag * v[:-1] * v[1:]))
    return total


def chol(Q: TridiagPrecision) -> TridiagCholesky:
    """Banded Cholesky; raises LinAlgError when the matrix is not SPD."""
    band = np.zeros((2, Q.n))
    band[0] = Q.diag
    band[1, :-1] = Q.offdiag
    factor = cholesky_banded(band, lower=True)
    if not np.all(factor[0] > 0.0):
        raise LinAlgError("non-positive pivot: matrix is not positive definite")
    return TridiagCholesky(diag=factor[0].copy(), sub=factor[1, :-1].copy())


def solve(factor: TridiagCholesky, rhs: np.ndarray) -> np.ndarray:
    """Solve (L L^T) x = rhs by forward then back substitution."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (factor.n,):
        raise ValueError(f"rhs has shape {rhs.shape}, expected ({factor.n},)")
    y = _solve_lower(factor, rhs)
    return solve_upper(factor, y)


def _solve_lower(factor: TridiagCholesky, rhs: np.ndarray) -> np.ndarray:
    band = np.zeros((2, factor.n))
    band[0] = factor.diag
    band[1, :-1] = factor.sub
    return solve_banded((1, 0), band, rhs)


def solve_upper(factor: TridiagCholesky, rhs: np.ndarray) -> np.ndarray:
    """Solve L^T x = rhs (the half-solve used when sampling)."""
    rhs = np.asarray(rhs, dtype=float)
    band = np.zeros((2, factor.n))
    band[1] = factor.diag
    band[0, 1:] = factor.sub
    return solve_banded((0, 1), band, rhs)


def sample_mvn_tridiag(mean: np.ndarray, precision: TridiagPrecision,
                       rng: np.random.Generator) -> np.ndarray:
    """Draw from N(mean, precision^-1).

    With precision = L L^T, the draw is mean + L^-T z for standard normal z,
    whose covariance is (L L^T)^-1. Deterministic given the generator state.
    """
    mean = np.asarray(mean, dtype=float)
    factor = chol(precision)
    if mean.shape != (factor.n,):
        raise ValueError(f"mean has shape {mean.shape}, expected ({factor.n},)")
    z = rng.standard_normal(factor.n)
    return mean + solve_upper(factor, z)
