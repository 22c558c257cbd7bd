"""Low-rank subspace estimation for column-wise heteroscedastic data.

Library layout:
    linalg    - SVD adapter, soft thresholding, tail sums, TSVT prox
    model     - data/config/result types, objective, augmented Lagrangian
    solver    - the alternating solver (known / per-sample / grouped noise)
    baselines - PCA, subset PCA, weighted PCA, robust PCA
    synth     - seeded two-group synthetic data
    metrics   - subspace affinity error, variance recovery error
    harness   - sweeps, cross-validation, CSV artifacts
    cli       - command-line driver (`hetpca`)
"""

from .baselines import pca, pca_subset, rpca, rpca_subspace, wpca
from .linalg import (
    SpectralDecomposition,
    SvdError,
    soft_threshold,
    spectral_norm,
    tail_sum,
    thin_svd,
    tsvt,
)
from .metrics import affinity_error, variance_recovery_error
from .model import (
    DataMatrix,
    FixedSafe,
    GroupedNoise,
    KnownNoise,
    Manual,
    PerSampleNoise,
    SolverConfig,
    SolverState,
    SubspaceEstimate,
    augmented_lagrangian,
    cost,
)
from .solver import (
    SolveReport,
    SolverError,
    choose_mu,
    solve,
    update_dual,
    update_variances_grouped,
    update_variances_per_sample,
    update_x,
    update_z,
)
from .synth import SynthSpec, derive_seed, generate

__version__ = "0.1.0"

__all__ = [
    "DataMatrix",
    "FixedSafe",
    "GroupedNoise",
    "KnownNoise",
    "Manual",
    "PerSampleNoise",
    "SolveReport",
    "SolverConfig",
    "SolverError",
    "SolverState",
    "SpectralDecomposition",
    "SubspaceEstimate",
    "SvdError",
    "SynthSpec",
    "affinity_error",
    "augmented_lagrangian",
    "choose_mu",
    "cost",
    "derive_seed",
    "generate",
    "pca",
    "pca_subset",
    "rpca",
    "rpca_subspace",
    "solve",
    "soft_threshold",
    "spectral_norm",
    "tail_sum",
    "thin_svd",
    "tsvt",
    "update_dual",
    "update_variances_grouped",
    "update_variances_per_sample",
    "update_x",
    "update_z",
    "variance_recovery_error",
    "wpca",
]
