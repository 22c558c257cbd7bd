"""Problem description, solver configuration, and shared result types.

The estimation model: columns y_i of a D x N matrix Y are noisy samples from
a k-dimensional subspace, each with its own (possibly unknown) noise variance
nu_i.  The solver splits Y into a low-rank part and a noise part under an
augmented Lagrangian; these types are shared by the solver, the baselines,
and the experiment harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .linalg import tail_sum


class DataMatrix:
    """Wrapper for the D x N data matrix with basic validation.

    Attributes:
        values: (D, N) float array, all entries finite.
        ambient_dim: D.
        n_samples: N.
    """

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2:
            raise ValueError(f"expected a 2-d matrix, got shape {values.shape}")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"matrix must be at least 1 x 1, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("data matrix contains non-finite entries")
        self.values = values

    @property
    def ambient_dim(self) -> int:
        return self.values.shape[0]

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class KnownNoise:
    """Per-sample noise variances supplied by the caller (length N, positive)."""

    variances: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.variances, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("variances must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("variances must be finite and positive")
        object.__setattr__(self, "variances", v)


@dataclass(frozen=True)
class PerSampleNoise:
    """Unknown variances, one per sample, estimated jointly by the solver."""


@dataclass(frozen=True)
class GroupedNoise:
    """Unknown variances shared within known sample groups.

    assignment: length-N sequence of group ids; every group must be nonempty
    (ids are arbitrary hashables, typically small ints).
    """

    assignment: Sequence

    def __post_init__(self):
        assignment = tuple(self.assignment)
        if len(assignment) < 1:
            raise ValueError("assignment must cover at least one sample")
        object.__setattr__(self, "assignment", assignment)


NoiseModel = Union[KnownNoise, PerSampleNoise, GroupedNoise]


@dataclass(frozen=True)
class FixedSafe:
    """Penalty policy mu = multiplier * max_i(1 / nu_i), multiplier > 2.

    The strict inequality keeps the convergence margin of the known-variance
    theory; refreshed from the current variance estimate in unknown modes.
    """

    multiplier: float = 2.5

    def __post_init__(self):
        if not self.multiplier > 2:
            raise ValueError(f"multiplier must be > 2, got {self.multiplier}")


@dataclass(frozen=True)
class Manual:
    """Fixed user-chosen penalty value, passed through unchanged."""

    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")


MuPolicy = Union[FixedSafe, Manual]


@dataclass(frozen=True)
class SolverConfig:
    """Solver knobs.

    Attributes:
        lam: regularization weight on the tail singular values (>= 0;
            0 turns the spectral penalty off).
        rank_hint: protected leading rank k; 0 selects pure nuclear-norm
            shrinkage (no protected block).
        mu_policy: FixedSafe (default, multiplier 2.5) or Manual.
        variance_floor: lower bound enforced on every variance estimate.
        max_iters: iteration cap.
        tol_residual: stop when ||Y - X - Z||_F <= tol_residual * ||Y||_F.
        variance_update_period: update unknown variances every this many
            iterations (after the dual step).
    """

    lam: float
    rank_hint: int
    mu_policy: MuPolicy = FixedSafe()
    variance_floor: float = 1e-6
    max_iters: int = 2000
    tol_residual: float = 1e-7
    variance_update_period: int = 1

    def __post_init__(self):
        if not self.lam >= 0 or not math.isfinite(self.lam):
            raise ValueError(f"lam must be finite and >= 0, got {self.lam}")
        if self.rank_hint < 0:
            raise ValueError(f"rank_hint must be >= 0, got {self.rank_hint}")
        if not self.variance_floor > 0:
            raise ValueError(f"variance_floor must be positive, got {self.variance_floor}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.tol_residual > 0:
            raise ValueError(f"tol_residual must be positive, got {self.tol_residual}")
        if self.variance_update_period < 1:
            raise ValueError(
                f"variance_update_period must be >= 1, got {self.variance_update_period}"
            )


@dataclass
class SolverState:
    """Mutable iterate bundle for one solve.

    Attributes:
        denoised: current low-rank estimate (X).
        residual: current noise-split estimate (Z).
        dual: scaled dual matrix for the coupling constraint Y = X + Z.
        variances: current per-sample variance vector (>= floor).
        mu: current penalty weight.
        iteration: iterations completed.
        primal_residual_history: ||Y - X - Z||_F per iteration.
        lagrangian_history: augmented Lagrangian value per iteration.
    """

    denoised: np.ndarray
    residual: np.ndarray
    dual: np.ndarray
    variances: np.ndarray
    mu: float
    iteration: int = 0
    primal_residual_history: list = field(default_factory=list)
    lagrangian_history: list = field(default_factory=list)


@dataclass(frozen=True)
class SubspaceEstimate:
    """Estimated subspace plus diagnostics.

    Attributes:
        basis: (D, k) orthonormal columns.
        singular_values: leading k singular values of the denoised matrix.
        denoised: (D, N) low-rank estimate.
        estimated_variances: per-sample variance estimates (None for methods
            that do not produce them).
    """

    basis: np.ndarray
    singular_values: np.ndarray
    denoised: np.ndarray
    estimated_variances: Optional[np.ndarray] = None


def cost(
    y: DataMatrix | np.ndarray,
    x: np.ndarray,
    variances: np.ndarray,
    lam: float,
    k: int,
) -> float:
    """Joint objective: spectral tail penalty + weighted fit + log-volume.

    lam * tail_sum(x, k) + 0.5 * ||(y - x) diag(nu)^-1/2||_F^2
                         + (D / 2) * sum_i log(nu_i)

    Args:
        y: data matrix (DataMatrix or array).
        x: candidate low-rank matrix, same shape.
        variances: per-sample positive variances, length N.
        lam: nonnegative penalty weight.
        k: protected leading rank.
    """
    yv = y.values if isinstance(y, DataMatrix) else np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    nu = np.asarray(variances, dtype=float)
    if np.any(nu <= 0):
        raise ValueError("variances must be positive")
    d = yv.shape[0]
    resid = yv - x
    fit = 0.5 * float(np.sum((resid * resid) / nu))
    logdet = 0.5 * d * float(np.sum(np.log(nu)))
    penalty = lam * tail_sum(x, k) if lam != 0.0 else 0.0
    return penalty + fit + logdet


def augmented_lagrangian(
    state: SolverState,
    y: DataMatrix | np.ndarray,
    config: SolverConfig,
    tail_value: Optional[float] = None,
) -> float:
    """Augmented Lagrangian at the current state.

    cost terms with the fit evaluated on the noise split Z, plus the dual
    inner product and the quadratic penalty on the coupling residual:

        lam * tail_sum(X, k) + 0.5 * ||Z diag(nu)^-1/2||_F^2
        + (D / 2) * sum log nu + <dual, Y - X - Z>
        + (mu / 2) * ||Y - X - Z||_F^2

    Args:
        tail_value: optional precomputed tail_sum(X, rank_hint) so callers
            holding the singular values can skip a decomposition.
    """
    yv = y.values if isinstance(y, DataMatrix) else np.asarray(y, dtype=float)
    nu = state.variances
    d = yv.shape[0]
    z = state.residual
    fit = 0.5 * float(np.sum((z * z) / nu))
    logdet = 0.5 * d * float(np.sum(np.log(nu)))
    if config.lam == 0.0:
        penalty = 0.0
    else:
        if tail_value is None:
            tail_value = tail_sum(state.denoised, config.rank_hint)
        penalty = config.lam * tail_value
    gap = yv - state.denoised - z
    coupling = float(np.sum(state.dual * gap)) + 0.5 * state.mu * float(np.sum(gap * gap))
    return penalty + fit + logdet + coupling
