"""Matrix kernels: thin SVD, trace norm, singular value thresholding and
the orthogonal Procrustes solution."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg

__all__ = [
    "SvdError",
    "SvdResult",
    "RANK_RTOL",
    "thin_svd",
    "trace_norm",
    "svt",
    "procrustes",
    "numerical_rank",
]

#: Singular values at or above this fraction of the largest one count
#: towards the numerical rank.
RANK_RTOL = 0.01


class SvdError(RuntimeError):
    """Raised when neither LAPACK driver converges."""


class SvdResult(NamedTuple):
    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


def thin_svd(a: np.ndarray) -> SvdResult:
    """Thin SVD ``a = u @ diag(s) @ v.T`` with ``k = min(m, n)`` columns.

    Tries the divide-and-conquer driver first and falls back to the
    QR-iteration driver, which converges in cases gesdd gives up on.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains NaN or Inf")
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError:
        try:
            u, s, vt = scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise SvdError(f"SVD of {a.shape} matrix did not converge") from exc
    return SvdResult(u, s, vt.T)


def trace_norm(a: np.ndarray) -> float:
    """Sum of singular values."""
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0:
        return 0.0
    try:
        s = np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError:
        s = thin_svd(a).s
    return float(s.sum())


def svt(a: np.ndarray, threshold: float, return_singular_values: bool = False):
    """Singular value thresholding, the proximal map of ``threshold * ||.||_tr``.

    Parameters
    ----------
    a : ndarray
        Input matrix.
    threshold : float
        Nonnegative shrinkage amount.
    return_singular_values : bool
        Also return the singular values of ``a`` (before shrinkage) and the
        left singular vectors, which rank estimation reuses.

    Returns
    -------
    z : ndarray
        ``u @ diag(max(s - threshold, 0)) @ v.T``.
    """
    if threshold < 0:
        raise ValueError(f"threshold must be nonnegative, got {threshold}")
    u, s, v = thin_svd(a)
    shrunk = np.maximum(s - threshold, 0.0)
    keep = int(np.count_nonzero(shrunk))
    z = (u[:, :keep] * shrunk[:keep]) @ v[:, :keep].T
    if return_singular_values:
        return z, s, u
    return z


def procrustes(a: np.ndarray) -> np.ndarray:
    """Orthonormal-column ``U`` maximizing ``trace(U.T @ a)``, i.e. ``Û V̂ᵀ``."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < a.shape[1]:
        raise ValueError(f"expected a tall matrix, got shape {a.shape}")
    u, _, v = thin_svd(a)
    return u @ v.T


def numerical_rank(s: np.ndarray, rtol: float = RANK_RTOL) -> int:
    """Count singular values ``>= rtol * max(s)``; zero for a zero matrix."""
    s = np.asarray(s)
    if s.size == 0:
        return 0
    top = float(np.max(s))
    if top <= 0.0:
        return 0
    return int(np.count_nonzero(s >= rtol * top))
