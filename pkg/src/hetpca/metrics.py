"""Subspace-affinity error and variance-recovery diagnostics."""

from __future__ import annotations

import numpy as np

_ORTHO_TOL = 1e-6  # boundary tolerance: accept bases from iterative methods


def _check_orthonormal(u: np.ndarray, name: str) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim != 2:
        raise ValueError(f"{name} must be a 2-d basis matrix, got shape {u.shape}")
    gram = u.T @ u
    if not np.allclose(gram, np.eye(u.shape[1]), atol=_ORTHO_TOL):
        worst = float(np.max(np.abs(gram - np.eye(u.shape[1]))))
        raise ValueError(f"{name} columns are not orthonormal (max deviation {worst:.3g})")
    return u


def affinity_error(u_true: np.ndarray, u_est: np.ndarray) -> float:
    """Normalized projector distance between two subspaces.

    ||P_true - P_est||_F / ||P_true||_F where P = U U^T; equals
    sqrt(k1 + k2 - 2 ||U1^T U2||_F^2) / sqrt(k1).  Range [0, sqrt(2)] for
    equal dimensions; invariant to right-rotation of either basis.

    Args:
        u_true: (D, k) orthonormal columns (tolerance 1e-6, validated).
        u_est: (D, k') orthonormal columns.
    """
    u_true = _check_orthonormal(u_true, "u_true")
    u_est = _check_orthonormal(u_est, "u_est")
    if u_true.shape[0] != u_est.shape[0]:
        raise ValueError(
            f"ambient dimensions differ: {u_true.shape[0]} vs {u_est.shape[0]}"
        )
    k1 = u_true.shape[1]
    # k1 + k2 - 2 sum cos^2 = ||(I-P1)U2||_F^2 + ||(I-P2)U1||_F^2; the
    # residual form avoids the cancellation that caps the cross-term form
    # near 1e-8 for nearly identical subspaces.
    r1 = u_est - u_true @ (u_true.T @ u_est)
    r2 = u_true - u_est @ (u_est.T @ u_true)
    sq = float(np.sum(r1 * r1) + np.sum(r2 * r2))
    return float(np.sqrt(sq) / np.sqrt(k1))


def variance_recovery_error(true_vars: np.ndarray, est_vars: np.ndarray) -> float:
    """Median relative variance error: median_i |est_i - true_i| / true_i."""
    t = np.asarray(true_vars, dtype=float)
    e = np.asarray(est_vars, dtype=float)
    if t.shape != e.shape:
        raise ValueError(f"length mismatch: {t.shape} vs {e.shape}")
    return float(np.median(np.abs(e - t) / t))
