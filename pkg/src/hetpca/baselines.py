"""Comparison estimators: PCA, subset PCA, weighted PCA, and robust PCA."""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

from .linalg import soft_threshold, thin_svd
from .model import DataMatrix, SubspaceEstimate


def _values(y) -> np.ndarray:
    return y.values if isinstance(y, DataMatrix) else np.asarray(y, dtype=float)


def pca(y, k: int) -> SubspaceEstimate:
    """Top-k left singular vectors of the data matrix."""
    yv = _values(y)
    if k > min(yv.shape):
        raise ValueError(f"k={k} exceeds min(D, N)={min(yv.shape)}")
    dec = thin_svd(yv)
    denoised = (dec.left_vectors[:, :k] * dec.singular_values[:k]) @ dec.right_vectors[:, :k].T
    return SubspaceEstimate(
        basis=dec.left_vectors[:, :k],
        singular_values=dec.singular_values[:k],
        denoised=denoised,
    )


def pca_subset(y, keep: Sequence[int], k: int) -> SubspaceEstimate:
    """PCA on a retained subset of columns."""
    yv = _values(y)
    keep = np.asarray(keep, dtype=int)
    if keep.size < 1:
        raise ValueError("keep must retain at least one column")
    sub = yv[:, keep]
    if k > min(sub.shape):
        raise ValueError(f"k={k} exceeds min(D, |keep|)={min(sub.shape)}")
    return pca(sub, k)


def wpca(y, variances: np.ndarray, k: int) -> SubspaceEstimate:
    """Weighted PCA: top-k eigenvectors of sum_i (1/nu_i) y_i y_i^T.

    Computed as the left singular vectors of Y scaled columnwise by
    1/sqrt(nu_i); requires known variances.
    """
    yv = _values(y)
    nu = np.asarray(variances, dtype=float)
    if nu.shape[0] != yv.shape[1]:
        raise ValueError(f"expected {yv.shape[1]} variances, got {nu.shape[0]}")
    if np.any(nu <= 0):
        raise ValueError("variances must be positive")
    weighted = yv * (1.0 / np.sqrt(nu))[None, :]
    dec = thin_svd(weighted)
    basis = dec.left_vectors[:, :k]
    # Denoised estimate in the original (unweighted) coordinates.
    denoised = basis @ (basis.T @ yv)
    return SubspaceEstimate(
        basis=basis,
        singular_values=dec.singular_values[:k],
        denoised=denoised,
        estimated_variances=nu.copy(),
    )


class RpcaDivergence(RuntimeError):
    """Robust PCA failed to reach the target residual."""


def rpca(
    y,
    sparsity_weight: float | None = None,
    tol: float = 1e-7,
    max_iters: int = 1000,
) -> Tuple[np.ndarray, np.ndarray]:
    """Robust PCA via inexact augmented Lagrangian: Y = L + S.

    min ||L||_* + sparsity_weight * ||S||_1  s.t.  Y = L + S, solved by
    alternating singular value thresholding on L and entrywise shrinkage on
    S, with the customary geometric penalty continuation (this baseline
    only).

    Args:
        y: data matrix.
        sparsity_weight: entrywise L1 weight; default 1 / sqrt(max(D, N)).
        tol: relative Frobenius residual target.
        max_iters: iteration cap.

    Returns:
        (low_rank, sparse) matrices with ||Y - L - S||_F <= tol * ||Y||_F.

    Raises:
        RpcaDivergence: residual target not reached within max_iters.
    """
    yv = _values(y)
    d, n = yv.shape
    if sparsity_weight is None:
        sparsity_weight = 1.0 / np.sqrt(max(d, n))
    if sparsity_weight <= 0:
        raise ValueError(f"sparsity_weight must be positive, got {sparsity_weight}")

    y_norm = float(np.linalg.norm(yv))
    if y_norm == 0.0:
        return np.zeros_like(yv), np.zeros_like(yv)
    spec = float(np.linalg.svd(yv, compute_uv=False)[0])
    # Standard dual initialization: Y scaled so the dual is feasible.
    dual_scale = max(spec, float(np.max(np.abs(yv))) / sparsity_weight)
    dual = yv / dual_scale
    mu = 1.25 / spec
    rho = 1.5
    mu_cap = mu * 1e7

    low_rank = np.zeros_like(yv)
    sparse = np.zeros_like(yv)
    for _ in range(1, max_iters + 1):
        sparse = soft_threshold(yv - low_rank + dual / mu, sparsity_weight / mu)
        u, s, vt = np.linalg.svd(yv - sparse + dual / mu, full_matrices=False)
        s_shrunk = np.maximum(s - 1.0 / mu, 0.0)
        low_rank = (u * s_shrunk) @ vt
        gap = yv - low_rank - sparse
        dual = dual + mu * gap
        mu = min(mu * rho, mu_cap)
        if float(np.linalg.norm(gap)) <= tol * y_norm:
            return low_rank, sparse
    raise RpcaDivergence(
        f"relative residual {float(np.linalg.norm(gap)) / y_norm:.3g} > {tol} "
        f"after {max_iters} iterations"
    )


def rpca_subspace(y, k: int, sparsity_weight: float | None = None) -> SubspaceEstimate:
    """Robust PCA followed by top-k extraction from the low-rank part."""
    low_rank, _ = rpca(y, sparsity_weight)
    return pca(low_rank, k)
