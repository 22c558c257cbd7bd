"""Seeded generator for two-group heteroscedastic synthetic datasets.

A random k-dimensional subspace basis is drawn (left singular vectors of a
uniform random matrix), coordinates are uniform on [-coord_range,
coord_range], and each sample gets additive isotropic Gaussian noise whose
variance depends on its group.

Reproducibility: all randomness comes from counter-based Philox streams.
Stream keys are seed*4 + {0: basis, 1: coordinates, 2: noise}, so the three
ingredients can be varied independently.  Gaussians are produced by a
Box-Muller transform of Philox uniforms, never by a platform-dependent
normal sampler, so the same seed yields bit-identical data everywhere.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Tuple

import numpy as np

from .model import DataMatrix

_BASIS_STREAM = 0
_COORD_STREAM = 1
_NOISE_STREAM = 2


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one synthetic dataset.

    Attributes:
        ambient_dim: D, sample dimension.
        subspace_dim: k, true subspace dimension.
        group_sizes: (n1, n2) samples per group; n2 may be 0.
        group_variances: (nu1, nu2) noise variance per group.
        coord_range: coordinates drawn uniform on [-coord_range, coord_range].
        seed: 64-bit base seed.
    """

    ambient_dim: int = 100
    subspace_dim: int = 10
    group_sizes: Tuple[int, int] = (10, 90)
    group_variances: Tuple[float, float] = (1.0, 100.0)
    coord_range: float = 100.0
    seed: int = 0

    def __post_init__(self):
        if self.subspace_dim > self.ambient_dim:
            raise ValueError("subspace_dim must be <= ambient_dim")
        if self.subspace_dim < 1 or self.ambient_dim < 1:
            raise ValueError("dimensions must be >= 1")
        n1, n2 = self.group_sizes
        if n1 < 0 or n2 < 0 or n1 + n2 < 1:
            raise ValueError("need at least one sample across the two groups")
        if min(self.group_variances) <= 0:
            raise ValueError("group variances must be positive")
        if self.coord_range <= 0:
            raise ValueError("coord_range must be positive")


def _stream(seed: int, which: int) -> np.random.Generator:
    # Distinct Philox keys per ingredient; keys are 128-bit so seed*4+w never collides.
    return np.random.Generator(np.random.Philox(key=int(seed) * 4 + which))


def _box_muller(gen: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    """Standard normals from uniforms; deterministic transform, both partners used."""
    n = int(np.prod(shape))
    m = (n + 1) // 2
    u1 = 1.0 - gen.random(m)  # keep log() away from 0
    u2 = gen.random(m)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:n]
    return z.reshape(shape)


def generate(spec: SynthSpec) -> Tuple[DataMatrix, np.ndarray, np.ndarray, np.ndarray]:
    """Draw one dataset.

    Returns:
        (data, basis_true, variances_true, assignment) where data.values is
        D x N with group-1 columns first, basis_true is the D x k orthonormal
        subspace basis, variances_true is length N, and assignment holds
        group ids (1 or 2) per column.
    """
    d, k = spec.ambient_dim, spec.subspace_dim
    n1, n2 = spec.group_sizes
    n = n1 + n2

    basis_gen = _stream(spec.seed, _BASIS_STREAM)
    coord_gen = _stream(spec.seed, _COORD_STREAM)
    noise_gen = _stream(spec.seed, _NOISE_STREAM)

    a = basis_gen.random((d, k))
    basis_true = np.linalg.svd(a, full_matrices=False)[0]

    coords = coord_gen.uniform(-spec.coord_range, spec.coord_range, (k, n))
    clean = basis_true @ coords

    variances_true = np.concatenate(
        [np.full(n1, spec.group_variances[0]), np.full(n2, spec.group_variances[1])]
    )
    noise = _box_muller(noise_gen, (d, n)) * np.sqrt(variances_true)[None, :]
    assignment = np.concatenate([np.full(n1, 1, dtype=int), np.full(n2, 2, dtype=int)])
    return DataMatrix(clean + noise), basis_true, variances_true, assignment


def derive_seed(base_seed: int, *parts) -> int:
    """Stable 63-bit seed from a base seed and arbitrary labels.

    Hash-based (BLAKE2b) so trial streams for different cells/trials are
    independent and platform-stable.
    """
    text = repr((int(base_seed),) + tuple(parts)).encode()
    digest = hashlib.blake2b(text, digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def export_csv(spec: SynthSpec, matrix_path, sidecar_path=None, include_truth: bool = False):
    """Write the generated matrix as CSV (one column per sample) + JSON sidecar.

    Args:
        spec: dataset parameters.
        matrix_path: output CSV for the D x N matrix.
        sidecar_path: metadata JSON (defaults to matrix_path + '.meta.json').
        include_truth: also store the true basis, variances, and assignment
            in the sidecar.
    """
    data, basis_true, variances_true, assignment = generate(spec)
    matrix_path = Path(matrix_path)
    with matrix_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for row in data.values:
            writer.writerow([repr(float(v)) for v in row])
    meta = {"spec": asdict(spec)}
    if include_truth:
        meta["basis_true"] = basis_true.tolist()
        meta["variances_true"] = variances_true.tolist()
        meta["assignment"] = assignment.tolist()
    if sidecar_path is None:
        sidecar_path = matrix_path.with_suffix(matrix_path.suffix + ".meta.json")
    Path(sidecar_path).write_text(json.dumps(meta, indent=2), encoding="utf-8")
    return matrix_path, Path(sidecar_path)


def read_matrix_csv(path) -> DataMatrix:
    """Read a matrix CSV written by export_csv (plain numeric rows)."""
    rows = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for line_no, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError as e:
                raise ValueError(f"{path}: line {line_no}: non-numeric entry") from e
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    return DataMatrix(np.asarray(rows))
