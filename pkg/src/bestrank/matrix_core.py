"""Dense linear algebra used throughout the package.

Matrices are plain two-dimensional ``float64`` numpy arrays. Every public
function validates its input through :func:`as_matrix`, which rejects
non-finite values and empty shapes.
"""

from __future__ import annotations

import warnings
from typing import NamedTuple

import numpy as np

from .errors import InputError

_GAP_RTOL = 1e-12


class DegenerateGapWarning(UserWarning):
    """Emitted when sigma_r == sigma_{r+1}, i.e. the best rank-r approximation is not unique."""


class SvdResult(NamedTuple):
    """Thin SVD ``A = U @ diag(sigma) @ V.T`` with a fixed sign convention."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    def reconstruct(self, r=None):
        k = len(self.sigma) if r is None else r
        return (self.U[:, :k] * self.sigma[:k]) @ self.V[:, :k].T


class NormSuite(NamedTuple):
    fro: float
    spectral: float
    l1_entrywise: float
    max_entry: float


class FactorPair(NamedTuple):
    """Factors ``(x, y)`` of ``B = x @ y.T`` with ``x`` d1-by-r and ``y`` d2-by-r."""

    x: np.ndarray
    y: np.ndarray

    @property
    def rank(self):
        return self.x.shape[1]

    def product(self):
        return self.x @ self.y.T

    def stacked(self):
        return np.vstack([self.x, self.y])


def as_matrix(A, name="matrix"):
    """Return ``A`` as a finite 2-D float64 array, raising :class:`InputError` otherwise."""
    arr = np.asarray(A, dtype=np.float64)
    if arr.ndim != 2:
        raise InputError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InputError(f"{name} must have at least one row and one column")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite values")
    return arr


def check_rank(r, shape):
    if isinstance(r, bool) or int(r) != r:
        raise InputError(f"rank must be an integer, got {r!r}")
    r = int(r)
    if not 1 <= r <= min(shape):
        raise InputError(f"rank {r} outside [1, {min(shape)}] for shape {shape}")
    return r


def svd_deterministic(A):
    """Thin SVD of ``A`` with a reproducible sign convention.

    For each singular pair, the entry of largest magnitude in the left
    singular vector is made nonnegative (ties go to the smallest row index,
    which is what ``argmax`` returns).
    """
    A = as_matrix(A)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    V = Vt.T
    lead = np.argmax(np.abs(U), axis=0)
    signs = np.where(U[lead, np.arange(U.shape[1])] < 0, -1.0, 1.0)
    U = U * signs
    V = V * signs
    return SvdResult(U, s, V)


def gap_is_degenerate(sigma, r):
    """True when ``sigma[r-1]`` and ``sigma[r]`` coincide, so A_r is not unique.

    A vanishing sigma_r means A already has rank < r and A_r = A is unique,
    so that case is not flagged.
    """
    if r >= len(sigma):
        return False
    scale = sigma[0] * max(64, len(sigma)) * np.finfo(float).eps
    s_r, s_next = sigma[r - 1], sigma[r]
    return s_r > scale and (s_r - s_next) <= _GAP_RTOL * s_r


def truncate_svd(svd, r):
    """Rank-``r`` reconstruction from an existing :class:`SvdResult`."""
    if gap_is_degenerate(svd.sigma, r):
        warnings.warn(
            f"sigma_{r} == sigma_{r + 1}: best rank-{r} approximation is not unique; "
            "returning the SVD-order truncation",
            DegenerateGapWarning,
            stacklevel=3,
        )
    return svd.reconstruct(r)


def truncate_rank(A, r):
    """Best rank-``r`` approximation ``A_r = U_r Sigma_r V_r^T`` (Eckart-Young).

    Issues :class:`DegenerateGapWarning` when sigma_r == sigma_{r+1}.
    """
    A = as_matrix(A)
    r = check_rank(r, A.shape)
    return truncate_svd(svd_deterministic(A), r)


def norm_suite(A):
    A = as_matrix(A)
    return NormSuite(
        fro=float(np.linalg.norm(A)),
        spectral=float(np.linalg.norm(A, 2)),
        l1_entrywise=float(np.abs(A).sum()),
        max_entry=float(np.abs(A).max()),
    )


def row_col_norms(A):
    """Euclidean norms of every row and every column of ``A``."""
    A = as_matrix(A)
    return np.linalg.norm(A, axis=1), np.linalg.norm(A, axis=0)


def procrustes_distance(F, F_star):
    """Rotation-minimized distance ``min_R ||F - F_star R||_F`` over orthogonal R.

    Both arguments are :class:`FactorPair` instances (their stacked factors are
    compared) or already-stacked arrays.
    """
    F = F.stacked() if isinstance(F, FactorPair) else np.asarray(F, dtype=float)
    G = F_star.stacked() if isinstance(F_star, FactorPair) else np.asarray(F_star, dtype=float)
    if F.shape != G.shape:
        raise InputError(f"factor shapes differ: {F.shape} vs {G.shape}")
    W, _, Zt = np.linalg.svd(G.T @ F)
    R = W @ Zt
    return float(np.linalg.norm(F - G @ R))
