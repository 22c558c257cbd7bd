"""Spectral primitives: thin SVD, soft thresholding, tail sums, and TSVT.

TSVT (tail singular value thresholding) soft-thresholds only the singular
values beyond a protected leading block of size k, leaving the top k and all
singular subspaces untouched.  It is the proximal map of
``tau * tail_sum(., k)``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class SvdError(RuntimeError):
    """Raised when the underlying dense SVD fails to converge."""


class SpectralDecomposition(NamedTuple):
    """Thin SVD of a D x N matrix.

    left_vectors : (D, r) orthonormal columns
    singular_values : (r,) nonincreasing, nonnegative
    right_vectors : (N, r) orthonormal columns, r = min(D, N)
    """

    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray


def thin_svd(a: np.ndarray) -> SpectralDecomposition:
    """Thin SVD adapter over the dense LAPACK routine.

    Args:
        a: finite-valued real matrix, shape (D, N).

    Returns:
        SpectralDecomposition with r = min(D, N) triplets, singular values
        sorted nonincreasing.

    Raises:
        ValueError: non-finite entries.
        SvdError: the underlying routine failed to converge.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as e:  # pragma: no cover - LAPACK-dependent
        raise SvdError(f"SVD failed to converge on matrix of shape {a.shape}") from e
    return SpectralDecomposition(u, s, vt.T)


def soft_threshold(x: np.ndarray, tau: float) -> np.ndarray:
    """Elementwise shrinkage sign(x) * max(|x| - tau, 0).

    Args:
        x: real array.
        tau: threshold, must be >= 0.
    """
    if tau < 0:
        raise ValueError(f"threshold must be nonnegative, got {tau}")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


def tail_sum(a: np.ndarray, k: int) -> float:
    """Sum of the singular values of `a` beyond index k.

    Equals the nuclear norm minus the Ky-Fan(k) norm; 0 when k >= min(D, N).
    """
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    a = np.asarray(a, dtype=float)
    if k >= min(a.shape):
        return 0.0
    s = np.linalg.svd(a, compute_uv=False)
    return float(np.sum(s[k:]))


def tsvt(a: np.ndarray, tau: float, k: int) -> np.ndarray:
    """Tail singular value thresholding.

    Returns the matrix whose singular values are
    (s_1, ..., s_k, soft(s_{k+1}), ...) with the singular subspaces of `a`
    preserved.  k=0 is classical singular value thresholding; tau=0 or an
    empty tail returns `a` unchanged.
    """
    result, _ = tsvt_with_values(a, tau, k)
    return result


def tsvt_with_values(a: np.ndarray, tau: float, k: int) -> tuple[np.ndarray, np.ndarray | None]:
    """tsvt plus the output's singular values (None when no SVD was needed).

    The caller can reuse the values to evaluate tail_sum of the result
    without a second decomposition.
    """
    if tau < 0:
        raise ValueError(f"threshold must be nonnegative, got {tau}")
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    a = np.asarray(a, dtype=float)
    # Identity cases: zero threshold, or no tail to shrink.
    if tau == 0.0 or k >= min(a.shape):
        return a, None
    u, s, vt = _svd_factors(a)
    s_new = s.copy()
    s_new[k:] = np.maximum(s_new[k:] - tau, 0.0)
    return (u * s_new) @ vt, s_new


def _svd_factors(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    try:
        return np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as e:  # pragma: no cover - LAPACK-dependent
        raise SvdError(f"SVD failed to converge on matrix of shape {a.shape}") from e


def spectral_norm(a: np.ndarray) -> float:
    """Largest singular value."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False)[0])
