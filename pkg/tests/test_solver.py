"""Solver update-operator contracts and end-to-end solve behavior."""

import numpy as np
import pytest

from hetpca.baselines import pca
from hetpca.metrics import affinity_error
from hetpca.model import (
    FixedSafe,
    GroupedNoise,
    KnownNoise,
    Manual,
    PerSampleNoise,
    SolverConfig,
)
from hetpca.solver import (
    choose_mu,
    solve,
    update_dual,
    update_variances_grouped,
    update_variances_per_sample,
    update_x,
    update_z,
)
from hetpca.synth import SynthSpec, generate


class TestUpdateZ:
    def test_unit_variance_zero_dual_halves_gap(self):
        rng = np.random.default_rng(0)
        y = rng.standard_normal((4, 5))
        x = rng.standard_normal((4, 5))
        out = update_z(x, np.zeros_like(y), y, np.ones(5), mu=1.0)
        assert np.allclose(out, (y - x) / 2.0, atol=1e-15)

    def test_perfect_fit_dual_passthrough(self):
        rng = np.random.default_rng(1)
        y = rng.standard_normal((3, 4))
        m = rng.standard_normal((3, 4))
        out = update_z(y.copy(), m, y, np.ones(4), mu=3.0)
        assert np.allclose(out, m / 4.0, atol=1e-15)

    def test_columnwise_scaling(self):
        y = np.ones((2, 3))
        x = np.zeros((2, 3))
        variances = np.array([1.0, 0.5, 0.25])
        out = update_z(x, np.zeros_like(y), y, variances, mu=2.0)
        expect = 2.0 / (1.0 / variances + 2.0)
        assert np.allclose(out, np.broadcast_to(expect, (2, 3)), atol=1e-15)


class TestUpdateX:
    def test_matches_tsvt_of_target(self):
        from hetpca.linalg import tsvt

        rng = np.random.default_rng(2)
        y = rng.standard_normal((5, 6))
        z = rng.standard_normal((5, 6))
        dual = rng.standard_normal((5, 6))
        out = update_x(z, dual, y, mu=2.0, lam=1.2, k=2)
        assert np.array_equal(out, tsvt(y - z + dual / 2.0, 0.6, 2))

    def test_zero_weight_passthrough(self):
        rng = np.random.default_rng(3)
        y = rng.standard_normal((4, 4))
        z = rng.standard_normal((4, 4))
        out = update_x(z, np.zeros_like(y), y, mu=1.0, lam=0.0, k=1)
        assert np.allclose(out, y - z, atol=1e-15)


class TestUpdateDual:
    def test_ascent_step(self):
        rng = np.random.default_rng(4)
        y, x, z = (rng.standard_normal((3, 3)) for _ in range(3))
        dual = rng.standard_normal((3, 3))
        out = update_dual(dual, y, x, z, mu=2.5)
        assert np.allclose(out, dual + 2.5 * (y - x - z), atol=1e-15)

    def test_consistent_split_is_fixed_point(self):
        rng = np.random.default_rng(5)
        y = rng.standard_normal((3, 4))
        x = rng.standard_normal((3, 4))
        dual = rng.standard_normal((3, 4))
        assert np.array_equal(update_dual(dual, y, x, y - x, mu=7.0), dual)


class TestVarianceUpdates:
    def test_per_sample_constant_column(self):
        z = np.full((4, 1), 2.0)
        assert update_variances_per_sample(z, 4, 1e-6)[0] == pytest.approx(4.0)

    def test_per_sample_unit_column_large_ambient(self):
        z = np.zeros((100, 1))
        z[0, 0] = 1.0
        assert update_variances_per_sample(z, 100, 1e-6)[0] == pytest.approx(0.01)

    def test_per_sample_floor(self):
        z = np.zeros((10, 3))
        out = update_variances_per_sample(z, 10, 1e-6)
        assert np.all(out == 1e-6)

    def test_grouped_pools_energy(self):
        z = np.array([[1.0, 0.0, 3.0], [1.0, 2.0, 0.0]])
        out = update_variances_grouped(z, [1, 1, 2], 2, 1e-6)
        # group 1: (1+1+0+4) / (2*2) = 1.5 ; group 2: 9 / (2*1) = 4.5
        assert np.allclose(out, [1.5, 1.5, 4.5])

    def test_grouped_singletons_match_per_sample_bitwise(self):
        rng = np.random.default_rng(6)
        z = rng.standard_normal((7, 5))
        grouped = update_variances_grouped(z, list(range(5)), 7, 1e-6)
        sample = update_variances_per_sample(z, 7, 1e-6)
        assert np.array_equal(grouped, sample)

    def test_grouped_length_mismatch(self):
        with pytest.raises(ValueError):
            update_variances_grouped(np.ones((2, 3)), [1, 1], 2, 1e-6)


class TestChooseMu:
    def test_fixed_safe_uniform(self):
        assert choose_mu(np.array([1.0, 1.0]), FixedSafe(2.5)) == pytest.approx(2.5)

    def test_fixed_safe_tracks_smallest_variance(self):
        assert choose_mu(np.array([0.25, 100.0]), FixedSafe(2.5)) == pytest.approx(10.0)

    def test_manual_passthrough(self):
        assert choose_mu(np.array([1.0, 2.0]), Manual(7.0)) == pytest.approx(7.0)

    def test_manual_unsafe_known_mode_records_warning(self):
        sink = []
        mu = choose_mu(np.ones(3), Manual(1.5), known_mode=True, warning_sink=sink)
        assert mu == 1.5
        assert len(sink) == 1 and "safe bound" in sink[0]

    def test_manual_safe_known_mode_silent(self):
        sink = []
        choose_mu(np.ones(3), Manual(7.0), known_mode=True, warning_sink=sink)
        assert sink == []

    def test_manual_unsafe_unknown_mode_silent(self):
        sink = []
        choose_mu(np.ones(3), Manual(1.5), known_mode=False, warning_sink=sink)
        assert sink == []


def small_instance(seed=0):
    spec = SynthSpec(
        ambient_dim=30,
        subspace_dim=3,
        group_sizes=(10, 30),
        group_variances=(1.0, 25.0),
        seed=seed,
    )
    return generate(spec)


class TestSolve:
    def test_noiseless_exact_recovery(self):
        rng = np.random.default_rng(7)
        basis = np.linalg.qr(rng.standard_normal((20, 2)))[0]
        y = basis @ rng.uniform(-5, 5, size=(2, 15))
        cfg = SolverConfig(lam=2.0 * np.linalg.norm(y, 2), rank_hint=2)
        report = solve(y, KnownNoise(np.full(15, 1e-4)), cfg)
        assert report.converged
        assert affinity_error(report.estimate.basis, basis) <= 1e-6

    def test_zero_weight_returns_data(self):
        rng = np.random.default_rng(8)
        y = rng.standard_normal((6, 8))
        cfg = SolverConfig(lam=0.0, rank_hint=3)
        report = solve(y, KnownNoise(np.ones(8)), cfg)
        assert report.converged
        assert np.linalg.norm(report.estimate.denoised - y) <= 1e-12 * np.linalg.norm(y)

    def test_beats_pca_on_heteroscedastic_instance(self):
        data, basis_true, variances, _ = small_instance(seed=1)
        lam = 2.0 * np.linalg.norm(data.values, 2)
        cfg = SolverConfig(lam=lam, rank_hint=3, tol_residual=1e-6)
        report = solve(data, KnownNoise(variances), cfg)
        ours = affinity_error(report.estimate.basis, basis_true)
        theirs = affinity_error(pca(data.values, 3).basis, basis_true)
        assert ours < theirs

    def test_report_fields_consistent(self):
        data, _, variances, _ = small_instance(seed=2)
        cfg = SolverConfig(lam=np.linalg.norm(data.values, 2), rank_hint=3,
                           tol_residual=1e-5)
        report = solve(data, KnownNoise(variances), cfg)
        assert len(report.residual_history) == report.iterations_used
        assert len(report.lagrangian_history) == report.iterations_used
        assert report.final_primal_residual == report.residual_history[-1]
        assert report.estimate.basis.shape == (30, 3)
        assert np.all(np.diff(report.estimate.singular_values) <= 0)

    def test_weight_irrelevant_when_protected_rank_saturates(self):
        rng = np.random.default_rng(9)
        y = rng.standard_normal((8, 6))
        noise = KnownNoise(np.ones(6))
        outs = []
        for lam in (0.5, 50.0):
            cfg = SolverConfig(lam=lam * np.linalg.norm(y, 2), rank_hint=6)
            outs.append(solve(y, noise, cfg).estimate.denoised)
        assert np.linalg.norm(outs[0] - outs[1]) <= 1e-8 * np.linalg.norm(y)

    def test_rotation_invariance(self):
        data, _, variances, _ = small_instance(seed=3)
        y = data.values
        q = np.linalg.qr(np.random.default_rng(10).standard_normal((30, 30)))[0]
        cfg = SolverConfig(lam=2.0 * np.linalg.norm(y, 2), rank_hint=3,
                           tol_residual=1e-9)
        base = solve(y, KnownNoise(variances), cfg)
        rotated = solve(q @ y, KnownNoise(variances), cfg)
        assert affinity_error(rotated.estimate.basis, q @ base.estimate.basis) <= 1e-6

    def test_singleton_groups_match_per_sample_bitwise(self):
        for seed in (4, 5):
            data, _, _, _ = small_instance(seed=seed)
            cfg = SolverConfig(lam=0.5 * np.linalg.norm(data.values, 2), rank_hint=3,
                               tol_residual=1e-6)
            a = solve(data, PerSampleNoise(), cfg)
            b = solve(data, GroupedNoise(tuple(range(data.n_samples))), cfg)
            assert a.iterations_used == b.iterations_used
            assert np.array_equal(a.estimate.denoised, b.estimate.denoised)
            assert np.array_equal(a.estimate.basis, b.estimate.basis)
            assert np.array_equal(a.estimate.estimated_variances,
                                  b.estimate.estimated_variances)

    def test_estimated_variances_respect_floor(self):
        rng = np.random.default_rng(11)
        y = rng.standard_normal((10, 4)) @ rng.standard_normal((4, 8))
        y[:, 0] = 0.0
        cfg = SolverConfig(lam=0.3 * max(np.linalg.norm(y, 2), 1.0), rank_hint=2,
                           max_iters=50)
        report = solve(y, PerSampleNoise(), cfg)
        assert np.all(report.estimate.estimated_variances >= 1e-6 * (1 - 1e-12))

    def test_cold_start_does_not_floor_variances(self):
        # With X0 = Y the first noise part is identically zero; variance
        # updates must wait for a nonzero split instead of flooring everything.
        data, _, _, _ = small_instance(seed=6)
        cfg = SolverConfig(lam=np.linalg.norm(data.values, 2), rank_hint=3,
                           max_iters=5)
        report = solve(data, PerSampleNoise(), cfg, init="data")
        assert not np.allclose(report.estimate.estimated_variances, 1e-6)

    def test_warm_start_converges_and_estimates_variances(self):
        data, basis_true, variances, _ = small_instance(seed=7)
        cfg = SolverConfig(lam=0.5 * np.linalg.norm(data.values, 2), rank_hint=3,
                           tol_residual=1e-6)
        report = solve(data, PerSampleNoise(), cfg, init="warm")
        assert report.converged
        err = affinity_error(report.estimate.basis, basis_true)
        assert err < affinity_error(pca(data.values, 3).basis, basis_true) * 1.05
        # noisy group should be recognized as noisier on average
        est = report.estimate.estimated_variances
        assert np.mean(est[10:]) > np.mean(est[:10])

    def test_grouped_mode_pools_groups(self):
        data, _, variances, assignment = small_instance(seed=8)
        cfg = SolverConfig(lam=0.5 * np.linalg.norm(data.values, 2), rank_hint=3,
                           tol_residual=1e-6)
        report = solve(data, GroupedNoise(assignment), cfg)
        est = report.estimate.estimated_variances
        assert np.unique(est).size <= 2
        assert est[-1] > est[0]

    def test_manual_unsafe_mu_recorded_in_report(self):
        data, _, variances, _ = small_instance(seed=9)
        cfg = SolverConfig(lam=np.linalg.norm(data.values, 2), rank_hint=3,
                           mu_policy=Manual(1.0), max_iters=200)
        report = solve(data, KnownNoise(variances), cfg)
        assert any("safe bound" in w for w in report.warnings)

    def test_output_rank_required_for_pure_nuclear(self):
        y = np.random.default_rng(12).standard_normal((6, 6))
        cfg = SolverConfig(lam=1.0, rank_hint=0)
        with pytest.raises(ValueError):
            solve(y, KnownNoise(np.ones(6)), cfg)
        report = solve(y, KnownNoise(np.ones(6)), cfg, output_rank=2)
        assert report.estimate.basis.shape == (6, 2)

    def test_output_rank_cannot_exceed_min_dim(self):
        y = np.random.default_rng(13).standard_normal((4, 6))
        cfg = SolverConfig(lam=1.0, rank_hint=5)
        with pytest.raises(ValueError):
            solve(y, KnownNoise(np.ones(6)), cfg)

    def test_bad_init_rejected(self):
        y = np.ones((3, 3))
        cfg = SolverConfig(lam=1.0, rank_hint=1)
        with pytest.raises(ValueError):
            solve(y, KnownNoise(np.ones(3)), cfg, init="bogus")

    def test_known_variance_length_checked(self):
        y = np.ones((3, 4))
        cfg = SolverConfig(lam=1.0, rank_hint=1)
        with pytest.raises(ValueError):
            solve(y, KnownNoise(np.ones(3)), cfg)

    def test_lagrangian_decreases_after_burn_in(self):
        data, _, variances, _ = small_instance(seed=14)
        cfg = SolverConfig(lam=2.0 * np.linalg.norm(data.values, 2), rank_hint=3,
                           tol_residual=1e-6)
        report = solve(data, KnownNoise(variances), cfg)
        lag = np.asarray(report.lagrangian_history)
        diffs = np.diff(lag[4:])
        assert np.all(diffs <= 1e-8)
