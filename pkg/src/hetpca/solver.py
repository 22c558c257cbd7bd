"""Alternating-direction solver for heteroscedastic low-rank estimation.

Splits the data as Y = X + Z (low-rank part plus noise part) under an
augmented Lagrangian with penalty mu, and alternates:

    Z: per-column ridge step against the current variances,
    X: tail singular value thresholding,
    dual ascent on the coupling residual,
    (unknown-variance modes) closed-form variance re-estimation + mu refresh.

Three noise modes: KnownNoise (variances given), PerSampleNoise (one unknown
variance per column), GroupedNoise (one unknown variance per declared group).
"""

from __future__ import annotations

import warnings as _warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .linalg import SvdError, thin_svd, tsvt, tsvt_with_values
from .model import (
    DataMatrix,
    FixedSafe,
    GroupedNoise,
    KnownNoise,
    Manual,
    MuPolicy,
    NoiseModel,
    PerSampleNoise,
    SolverConfig,
    SolverState,
    SubspaceEstimate,
    augmented_lagrangian,
)


class SolverError(RuntimeError):
    """Fatal solver failure (divergence or SVD breakdown), with iteration."""


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one solve.

    Attributes:
        estimate: the subspace estimate extracted from the final iterate.
        iterations_used: loop iterations completed.
        final_primal_residual: ||Y - X - Z||_F at exit.
        converged: residual dropped below tol_residual * ||Y||_F in budget.
        residual_history: per-iteration primal residual norms.
        lagrangian_history: per-iteration augmented Lagrangian values.
        warnings: non-fatal contract notes (e.g. unsafe Manual mu).
    """

    estimate: SubspaceEstimate
    iterations_used: int
    final_primal_residual: float
    converged: bool
    residual_history: list = field(default_factory=list)
    lagrangian_history: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


def update_z(
    x: np.ndarray,
    dual: np.ndarray,
    y: np.ndarray,
    variances: np.ndarray,
    mu: float,
) -> np.ndarray:
    """Noise-part update: ridge step, columnwise closed form.

    Z = [mu (Y - X) + dual] scaled per column by 1 / (1/nu_i + mu).
    """
    scale = 1.0 / (1.0 / variances + mu)
    return (mu * (y - x) + dual) * scale[None, :]


def update_x(
    z: np.ndarray,
    dual: np.ndarray,
    y: np.ndarray,
    mu: float,
    lam: float,
    k: int,
) -> np.ndarray:
    """Low-rank update: TSVT of the penalty-centered target."""
    return tsvt(y - z + dual / mu, lam / mu, k)


def update_dual(
    dual: np.ndarray,
    y: np.ndarray,
    x: np.ndarray,
    z: np.ndarray,
    mu: float,
) -> np.ndarray:
    """Ascent step on the coupling residual."""
    return dual + mu * (y - x - z)


def update_variances_per_sample(z: np.ndarray, d: int, floor: float) -> np.ndarray:
    """Closed-form per-sample variances: nu_i = max(||z_i||^2 / D, floor)."""
    colsq = np.sum(z * z, axis=0)
    return np.maximum(colsq / d, floor)


def update_variances_grouped(
    z: np.ndarray,
    assignment: Sequence,
    d: int,
    floor: float,
) -> np.ndarray:
    """Group-shared variances: nu_g = max(||Z_g||_F^2 / (D n_g), floor).

    Broadcast to every member of the group.  Singleton groups reduce exactly
    to the per-sample update (same column-energy code path).
    """
    assignment = np.asarray(assignment)
    if assignment.shape[0] != z.shape[1]:
        raise ValueError(
            f"assignment length {assignment.shape[0]} != sample count {z.shape[1]}"
        )
    colsq = np.sum(z * z, axis=0)
    out = np.empty(z.shape[1])
    for gid in np.unique(assignment):
        members = assignment == gid
        n_g = int(np.count_nonzero(members))
        if n_g == 0:
            raise ValueError(f"group {gid!r} is empty")
        out[members] = max(float(np.sum(colsq[members])) / (d * n_g), floor)
    return out


def choose_mu(
    variances: np.ndarray,
    policy: MuPolicy,
    known_mode: bool = False,
    warning_sink: Optional[list] = None,
) -> float:
    """Penalty weight from the policy.

    FixedSafe: mu = multiplier * max_i(1 / nu_i).  Manual: passthrough; in
    known-variance mode a Manual mu at or below twice the inverse-variance
    bound violates the convergence margin and is recorded as a warning
    (non-fatal).
    """
    inv_bound = float(np.max(1.0 / np.asarray(variances, dtype=float)))
    if isinstance(policy, FixedSafe):
        return policy.multiplier * inv_bound
    if isinstance(policy, Manual):
        if known_mode and policy.mu <= 2.0 * inv_bound:
            msg = (
                f"Manual mu={policy.mu} is at or below the safe bound "
                f"2*max(1/nu)={2.0 * inv_bound:.6g}; convergence margin not guaranteed"
            )
            if warning_sink is not None:
                warning_sink.append(msg)
            else:
                _warnings.warn(msg, RuntimeWarning, stacklevel=2)
        return policy.mu
    raise TypeError(f"unknown mu policy: {policy!r}")


def _initial_variances(noise: NoiseModel, n: int, floor: float) -> np.ndarray:
    if isinstance(noise, KnownNoise):
        v = np.asarray(noise.variances, dtype=float)
        if v.shape[0] != n:
            raise ValueError(f"expected {n} variances, got {v.shape[0]}")
        if np.any(v < floor):
            raise ValueError(
                f"known variances must be >= variance_floor={floor}; min is {v.min():.3g}"
            )
        return v.copy()
    return np.ones(n)


def _grouped_or_sample_update(
    noise: NoiseModel, z: np.ndarray, d: int, floor: float
) -> np.ndarray:
    if isinstance(noise, GroupedNoise):
        return update_variances_grouped(z, noise.assignment, d, floor)
    return update_variances_per_sample(z, d, floor)


def solve(
    y: DataMatrix | np.ndarray,
    noise: NoiseModel,
    config: SolverConfig,
    output_rank: Optional[int] = None,
    init: str = "auto",
) -> SolveReport:
    """Run the alternating solver and extract the subspace estimate.

    Args:
        y: data matrix (DataMatrix or plain array).
        noise: KnownNoise, PerSampleNoise, or GroupedNoise.
        config: SolverConfig (lam, rank_hint, mu policy, floor, budgets).
        output_rank: subspace dimension for the returned basis.  Required
            when rank_hint = 0 (pure nuclear-norm mode); defaults to
            rank_hint otherwise.
        init: iterate initialization.
            "data": X0 = Y, Z0 = 0, variances 1 (known variances used as
                given).  The reference initialization.
            "warm": X0 = rank-r truncation of Y, Z0 = Y - X0, unknown
                variances seeded from the truncation residuals.  Repairs
                joint variance estimation when samples are few.
            "auto" (default): "data" for known variances, "warm" otherwise.

    Returns:
        SolveReport; the estimate's basis has output_rank (or rank_hint)
        columns from the SVD of the final low-rank iterate.

    Raises:
        ValueError: inconsistent arguments.
        SolverError: non-finite iterates or SVD breakdown, with iteration.
    """
    if isinstance(y, DataMatrix):
        ym = y
    else:
        ym = DataMatrix(np.asarray(y, dtype=float))
    yv = ym.values
    d, n = yv.shape
    known = isinstance(noise, KnownNoise)
    if isinstance(noise, GroupedNoise) and len(noise.assignment) != n:
        raise ValueError(
            f"group assignment length {len(noise.assignment)} != sample count {n}"
        )

    basis_rank = output_rank if output_rank is not None else config.rank_hint
    if basis_rank < 1:
        raise ValueError(
            "output_rank must be supplied (>=1) when rank_hint is 0"
            if config.rank_hint == 0
            else f"output rank must be >= 1, got {basis_rank}"
        )
    if basis_rank > min(d, n):
        raise ValueError(f"output rank {basis_rank} exceeds min(D, N) = {min(d, n)}")

    if init not in ("auto", "data", "warm"):
        raise ValueError(f"init must be 'auto', 'data', or 'warm', got {init!r}")
    if init == "auto":
        init = "data" if known else "warm"

    report_warnings: list = []
    floor = config.variance_floor

    if init == "warm":
        dec = thin_svd(yv)
        r = basis_rank
        x = (dec.left_vectors[:, :r] * dec.singular_values[:r]) @ dec.right_vectors[:, :r].T
        z = yv - x
        if known:
            variances = _initial_variances(noise, n, floor)
        else:
            variances = _grouped_or_sample_update(noise, z, d, floor)
    else:
        x = yv.copy()
        z = np.zeros_like(yv)
        variances = _initial_variances(noise, n, floor)

    dual = np.zeros_like(yv)
    mu = choose_mu(variances, config.mu_policy, known_mode=known, warning_sink=report_warnings)
    state = SolverState(denoised=x, residual=z, dual=dual, variances=variances, mu=mu)

    y_norm = float(np.linalg.norm(yv))
    tol = config.tol_residual * y_norm
    converged = False
    residual_norm = float(np.linalg.norm(yv - x - z))
    # Guard for the cold start in unknown modes: Z stays identically zero for
    # one pass (X0 = Y), and an energy-based variance update there would
    # floor every sample and freeze the weighting.  Skip updates until the
    # noise part carries signal.
    residual_split_active = bool(z.any())

    for it in range(1, config.max_iters + 1):
        z = update_z(x, state.dual, yv, state.variances, state.mu)
        target = yv - z + state.dual / state.mu
        try:
            x, sv_after = tsvt_with_values(target, config.lam / state.mu, config.rank_hint)
        except SvdError as e:
            raise SolverError(f"SVD breakdown at iteration {it}") from e
        gap = yv - x - z
        state.dual = state.dual + state.mu * gap

        if not known and it % config.variance_update_period == 0:
            if not residual_split_active:
                residual_split_active = bool(z.any())
            if residual_split_active:
                state.variances = _grouped_or_sample_update(noise, z, d, floor)
                state.mu = choose_mu(state.variances, config.mu_policy)

        state.denoised = x
        state.residual = z
        state.iteration = it
        residual_norm = float(np.linalg.norm(gap))
        if not np.isfinite(residual_norm):
            raise SolverError(f"non-finite iterate at iteration {it}")
        state.primal_residual_history.append(residual_norm)
        tail_value = float(np.sum(sv_after[config.rank_hint:])) if sv_after is not None else 0.0
        state.lagrangian_history.append(
            augmented_lagrangian(state, yv, config, tail_value=tail_value)
        )
        if residual_norm <= tol:
            converged = True
            break

    try:
        dec = thin_svd(state.denoised)
    except SvdError as e:
        raise SolverError(
            f"SVD breakdown extracting the basis after {state.iteration} iterations"
        ) from e
    estimate = SubspaceEstimate(
        basis=dec.left_vectors[:, :basis_rank],
        singular_values=dec.singular_values[:basis_rank],
        denoised=state.denoised,
        estimated_variances=state.variances.copy(),
    )
    return SolveReport(
        estimate=estimate,
        iterations_used=state.iteration,
        final_primal_residual=residual_norm,
        converged=converged,
        residual_history=state.primal_residual_history,
        lagrangian_history=state.lagrangian_history,
        warnings=report_warnings,
    )
