"""Synthetic data generator: determinism, statistics, and CSV round-trips."""

import json

import numpy as np
import pytest

from hetpca.synth import (
    SynthSpec,
    derive_seed,
    export_csv,
    generate,
    read_matrix_csv,
)


class TestSpecValidation:
    def test_defaults(self):
        spec = SynthSpec()
        assert spec.ambient_dim == 100
        assert spec.subspace_dim == 10
        assert spec.group_sizes == (10, 90)
        assert spec.group_variances == (1.0, 100.0)
        assert spec.coord_range == 100.0

    def test_subspace_dim_bounded(self):
        with pytest.raises(ValueError):
            SynthSpec(ambient_dim=5, subspace_dim=6)

    def test_nonpositive_variance_rejected(self):
        with pytest.raises(ValueError):
            SynthSpec(group_variances=(1.0, 0.0))

    def test_needs_samples(self):
        with pytest.raises(ValueError):
            SynthSpec(group_sizes=(0, 0))


class TestGenerate:
    def test_shapes_and_assignment(self):
        data, basis, variances, assignment = generate(SynthSpec(seed=1))
        assert data.values.shape == (100, 100)
        assert basis.shape == (100, 10)
        assert variances.shape == (100,)
        assert np.array_equal(assignment[:10], np.ones(10, dtype=int))
        assert np.array_equal(assignment[10:], np.full(90, 2, dtype=int))
        assert np.allclose(variances[:10], 1.0) and np.allclose(variances[10:], 100.0)

    def test_basis_orthonormal(self):
        _, basis, _, _ = generate(SynthSpec(seed=2))
        assert np.max(np.abs(basis.T @ basis - np.eye(10))) < 1e-10

    def test_same_seed_bit_identical(self):
        a = generate(SynthSpec(seed=3))
        b = generate(SynthSpec(seed=3))
        assert np.array_equal(a[0].values, b[0].values)
        assert np.array_equal(a[1], b[1])

    def test_different_seeds_differ(self):
        a = generate(SynthSpec(seed=4))[0].values
        b = generate(SynthSpec(seed=5))[0].values
        assert not np.array_equal(a, b)

    def test_near_noiseless_variant_is_effectively_rank_k(self):
        spec = SynthSpec(group_variances=(1e-12, 1e-12), seed=6)
        data, _, _, _ = generate(spec)
        s = np.linalg.svd(data.values, compute_uv=False)
        assert s[10] / s[9] <= 1e-4

    def test_noise_statistics_match_request(self):
        # Estimate each group's variance from energy off the true subspace;
        # law-of-large-numbers bound at the default sizes.
        for seed in (7, 8):
            data, basis, _, _ = generate(SynthSpec(seed=seed))
            resid = data.values - basis @ (basis.T @ data.values)
            per_sample = np.sum(resid**2, axis=0) / (100 - 10)
            for cols, nu in (((slice(0, 10)), 1.0), ((slice(10, 100)), 100.0)):
                estimate = float(np.mean(per_sample[cols]))
                assert abs(estimate - nu) / nu <= 0.2

    def test_group_one_columns_first(self):
        spec = SynthSpec(group_variances=(1e-10, 100.0), seed=9)
        data, basis, _, _ = generate(spec)
        resid = data.values - basis @ (basis.T @ data.values)
        energy = np.sum(resid**2, axis=0)
        assert energy[:10].max() < energy[10:].min()

    def test_single_group(self):
        data, _, variances, assignment = generate(
            SynthSpec(group_sizes=(12, 0), seed=10)
        )
        assert data.values.shape == (100, 12)
        assert np.all(assignment == 1)
        assert np.allclose(variances, 1.0)


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(13, "x", 2) == derive_seed(13, "x", 2)

    def test_frozen_values(self):
        # Regression pins: the harness's trial streams must never silently move.
        assert derive_seed(0, "a") == 8898938347678966206
        assert derive_seed(0, 1, 4, 0) == 1369540341044781393
        assert derive_seed(7, "cv", (10, 90), (1.0, 100.0), 3) == 7461926278975447819

    def test_distinct_labels_distinct_seeds(self):
        seeds = {derive_seed(0, i, j) for i in range(8) for j in range(8)}
        assert len(seeds) == 64

    def test_nonnegative_63_bit(self):
        for i in range(50):
            s = derive_seed(1, i)
            assert 0 <= s < 2**63


class TestCsvRoundTrip:
    def test_export_and_read_bit_identical(self, tmp_path):
        spec = SynthSpec(ambient_dim=12, subspace_dim=2, group_sizes=(3, 5),
                         group_variances=(1.0, 9.0), seed=11)
        matrix_path, sidecar = export_csv(spec, tmp_path / "m.csv")
        data, _, _, _ = generate(spec)
        loaded = read_matrix_csv(matrix_path)
        assert np.array_equal(loaded.values, data.values)
        meta = json.loads(sidecar.read_text())
        assert meta["spec"]["ambient_dim"] == 12
        assert tuple(meta["spec"]["group_sizes"]) == (3, 5)

    def test_sidecar_truth_payload(self, tmp_path):
        spec = SynthSpec(ambient_dim=8, subspace_dim=2, group_sizes=(2, 2), seed=12)
        _, sidecar = export_csv(spec, tmp_path / "m.csv", include_truth=True)
        meta = json.loads(sidecar.read_text())
        _, basis, variances, assignment = generate(spec)
        assert np.allclose(np.asarray(meta["basis_true"]), basis)
        assert np.allclose(np.asarray(meta["variances_true"]), variances)
        assert meta["assignment"] == assignment.tolist()

    def test_read_rejects_non_numeric_with_line_number(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("1.0,2.0\n3.0,oops\n")
        with pytest.raises(ValueError, match="line 2"):
            read_matrix_csv(bad)

    def test_read_rejects_empty(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        with pytest.raises(ValueError, match="empty"):
            read_matrix_csv(empty)
