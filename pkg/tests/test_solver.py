"""Tests for the block-Hankel least-squares spectral estimator."""

import math

import numpy as np
import pytest

from modmd import (
    DegenerateInputError,
    EigenvalueShortfallError,
    HankelPair,
    ModmdConfig,
    MultiObservableSignal,
    PauliString,
    PauliSum,
    StateVector,
    build_hankel,
    build_reference_superposition,
    build_tfim,
    diagonalize,
    estimate_eigenstate,
    exact_signal,
    extract_eigen,
    forecast,
    ground_energy_error_bound,
    residual,
    run_modmd,
    select_time_step,
    shift_and_scale,
    solve_system_matrix,
    to_dense,
    truncated_pinv,
)


def mode_signal(phases, coeffs, dt, n_steps):
    """Multi-observable sum-of-phases signal ``sum_j c_ij e^{-i E_j k dt}``."""
    phases = np.asarray(phases, dtype=float)
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    k = np.arange(n_steps)
    basis = np.exp(-1j * np.outer(phases, k * dt))
    return MultiObservableSignal(
        coeffs.shape[0], dt, coeffs @ basis, mode="complex"
    )


def tfim6_problem():
    """Scaled 6-qubit chain with a sparse reference, ~0.34 ground overlap."""
    h = build_tfim(6, 1.0, 1.0)
    scaled, shift = shift_and_scale(h)
    spec = diagonalize(to_dense(scaled))
    phi0 = build_reference_superposition(
        6, ["000000", "111111", "100000", "000111"]
    )
    return spec, shift, phi0


class TestBuildHankel:
    def test_single_observable_layout(self):
        signal = MultiObservableSignal(
            1, 1.0, np.arange(4, dtype=float)[None, :], mode="real"
        )
        pair = build_hankel(signal, d=2, K=1)
        np.testing.assert_array_equal(pair.x, [[0.0, 1.0], [1.0, 2.0]])
        np.testing.assert_array_equal(pair.xp, [[1.0, 2.0], [2.0, 3.0]])

    def test_block_row_ordering(self):
        # row a * n_obs + i must hold observable i delayed by a steps
        vals = np.arange(10.0).reshape(2, 5)
        signal = MultiObservableSignal(2, 0.5, vals, mode="real")
        pair = build_hankel(signal, d=2, K=2)
        assert pair.x.shape == (4, 3)
        np.testing.assert_array_equal(pair.x[0], vals[0, 0:3])
        np.testing.assert_array_equal(pair.x[1], vals[1, 0:3])
        np.testing.assert_array_equal(pair.x[2], vals[0, 1:4])
        np.testing.assert_array_equal(pair.x[3], vals[1, 1:4])
        np.testing.assert_array_equal(pair.xp[2], vals[0, 2:5])

    def test_shift_relation(self):
        rng = np.random.default_rng(0)
        vals = rng.standard_normal((3, 12))
        signal = MultiObservableSignal(3, 0.7, vals, mode="real")
        pair = build_hankel(signal, d=3, K=7)
        np.testing.assert_array_equal(pair.x[:, 1:], pair.xp[:, :-1])

    def test_insufficient_samples_rejected(self):
        signal = MultiObservableSignal(1, 1.0, np.ones((1, 5)), mode="real")
        with pytest.raises(ValueError, match="requires 6"):
            build_hankel(signal, d=2, K=3)

    def test_invalid_window_rejected(self):
        signal = MultiObservableSignal(1, 1.0, np.ones((1, 8)), mode="real")
        with pytest.raises(ValueError):
            build_hankel(signal, d=0, K=3)
        with pytest.raises(ValueError):
            build_hankel(signal, d=2, K=0)


class TestTruncatedPinv:
    def test_rank_counts_strictly_above_cutoff(self):
        m = np.diag([1.0, 0.5, 1e-6])
        pinv = truncated_pinv(m, 1e-2)
        assert pinv.rank == 2
        np.testing.assert_allclose(pinv.singular_values, [1.0, 0.5, 1e-6])

    def test_boundary_value_discarded(self):
        # sigma exactly at threshold * sigma_max must be dropped
        pinv = truncated_pinv(np.diag([1.0, 0.01]), 0.01)
        assert pinv.rank == 1

    def test_matches_dense_pinv_when_full_rank(self):
        rng = np.random.default_rng(1)
        m = rng.standard_normal((5, 8))
        pinv = truncated_pinv(m, 1e-12)
        np.testing.assert_allclose(
            pinv.as_matrix(), np.linalg.pinv(m), atol=1e-10
        )

    def test_projector_identity_at_small_threshold(self):
        rng = np.random.default_rng(2)
        m = rng.standard_normal((4, 9)) + 1j * rng.standard_normal((4, 9))
        pinv = truncated_pinv(m, 1e-13)
        np.testing.assert_allclose(m @ pinv.as_matrix() @ m, m, atol=1e-10)

    def test_zero_matrix_rejected(self):
        with pytest.raises(DegenerateInputError):
            truncated_pinv(np.zeros((3, 3)), 1e-2)

    def test_rank_monotone_in_threshold(self):
        rng = np.random.default_rng(3)
        u, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        m = u @ np.diag([1.0, 0.3, 0.1, 0.03, 0.01, 0.003]) @ u.T
        ranks = [truncated_pinv(m, t).rank for t in (1e-4, 5e-3, 5e-2, 0.5)]
        assert ranks == sorted(ranks, reverse=True)
        assert ranks[0] == 6 and ranks[-1] == 1

    def test_invalid_threshold_rejected(self):
        with pytest.raises(ValueError):
            truncated_pinv(np.eye(2), 0.0)
        with pytest.raises(ValueError):
            truncated_pinv(np.eye(2), 1.0)
        with pytest.raises(ValueError):
            truncated_pinv(np.ones(3), 0.1)


class TestSolveSystemMatrix:
    def test_single_mode_recovers_multiplier(self):
        lam = np.exp(-1j * 0.8) * 0.999
        signal = mode_signal([0.8], [[1.0]], 1.0, 8)
        vals = signal.values * (0.999 ** np.arange(8))
        signal = MultiObservableSignal(1, 1.0, vals, mode="complex")
        pair = build_hankel(signal, d=1, K=5)
        a = solve_system_matrix(pair, 1e-10)
        assert a.shape == (1, 1)
        assert a[0, 0] == pytest.approx(lam, abs=1e-9)

    def test_two_modes_match_linear_prediction_roots(self):
        """Cross-check against the companion-polynomial route: the same
        eigenvalues must arise as roots of the order-2 linear prediction."""
        phases = [0.5, 1.3]
        signal = mode_signal(phases, [[1.0, 0.6]], 1.0, 12)
        s = signal.values[0]
        pair = build_hankel(signal, d=2, K=6)
        a = solve_system_matrix(pair, 1e-10)
        eig = np.sort_complex(np.linalg.eigvals(a))

        lhs = np.array([[s[0], s[1]], [s[1], s[2]]])
        rhs = np.array([s[2], s[3]])
        c = np.linalg.solve(lhs, rhs)
        roots = np.sort_complex(np.roots([1.0, -c[1], -c[0]]))
        np.testing.assert_allclose(eig, roots, atol=1e-8)


class TestExtractEigen:
    def test_diagonal_propagator(self):
        a = np.diag([np.exp(-1j * 0.3), np.exp(-1j * 0.7)])
        est = extract_eigen(a, dt=1.0, n_eig=2)
        np.testing.assert_allclose(est.energies, [0.3, 0.7], atol=1e-12)
        np.testing.assert_allclose(est.magnitudes, [1.0, 1.0], atol=1e-12)
        assert not est.ill_conditioned

    def test_energy_scaling_with_dt(self):
        a = np.diag([np.exp(-1j * 0.3)])
        est = extract_eigen(a, dt=0.5, n_eig=1)
        assert est.energies[0] == pytest.approx(0.6)

    def test_magnitude_floor_drops_noise_modes(self):
        a = np.diag([np.exp(-1j * 0.5), 0.1])
        est = extract_eigen(a, dt=1.0, n_eig=1, magnitude_floor=0.2)
        assert est.n_eig == 1
        assert est.energies[0] == pytest.approx(0.5)

    def test_shortfall_carries_survivors(self):
        a = np.diag([np.exp(-1j * 0.5), 0.05])
        with pytest.raises(EigenvalueShortfallError) as info:
            extract_eigen(a, dt=2.0, n_eig=2)
        err = info.value
        assert err.requested == 2
        assert len(err.survivors) == 1
        assert err.energies[0] == pytest.approx(0.25)

    def test_conjugate_pair_merge_keeps_nonnegative_phase(self):
        a = np.diag([np.exp(1j * 0.4), np.exp(-1j * 0.4)])
        est = extract_eigen(a, dt=1.0, n_eig=1, merge_conjugates=True)
        assert est.n_eig == 1
        # the nonnegative-phase member encodes the negative energy branch
        assert est.energies[0] == pytest.approx(-0.4)

    def test_merge_leaves_unpaired_values_alone(self):
        a = np.diag([np.exp(1j * 0.4), np.exp(-1j * 0.9)])
        est = extract_eigen(a, dt=1.0, n_eig=2, merge_conjugates=True)
        np.testing.assert_allclose(est.energies, [-0.4, 0.9], atol=1e-12)

    def test_left_vectors_satisfy_eigen_relation(self):
        rng = np.random.default_rng(7)
        v = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        lam = np.exp(-1j * np.array([0.2, 0.6, 1.1, 1.9]))
        a = v @ np.diag(lam) @ np.linalg.inv(v)
        est = extract_eigen(a, dt=1.0, n_eig=4)
        for j in range(4):
            row = est.left_vectors[j]
            np.testing.assert_allclose(
                row @ a, est.eigenvalues[j] * row, atol=1e-9
            )

    def test_invalid_arguments_rejected(self):
        with pytest.raises(ValueError):
            extract_eigen(np.eye(2, dtype=complex), dt=0.0, n_eig=1)
        with pytest.raises(ValueError):
            extract_eigen(np.eye(2, dtype=complex), dt=1.0, n_eig=0)


class TestRunModmd:
    def test_exact_recovery_property(self):
        """Noiseless multi-mode signals give back every generating phase."""
        rng = np.random.default_rng(101)
        for _ in range(10):
            n_obs = int(rng.integers(1, 4))
            m = int(rng.integers(1, 6))
            while True:
                phases = np.sort(rng.uniform(-3.0, 3.0, size=m))
                if m == 1 or np.min(np.diff(phases)) > 1e-3:
                    break
            coeffs = rng.standard_normal((n_obs, m)) + 1j * rng.standard_normal(
                (n_obs, m)
            )
            coeffs[np.abs(coeffs) < 0.3] += 0.5
            d = max(math.ceil(m / n_obs), 1) + int(rng.integers(0, 3))
            K = max(2 * m, d) + 5
            signal = mode_signal(phases, coeffs, 1.0, K + d + 1)
            config = ModmdConfig(
                d=d, K=K, dt=1.0, svd_threshold=1e-10, n_eig=m
            )
            est = run_modmd(signal, config)
            np.testing.assert_allclose(np.sort(est.energies), phases, atol=1e-7)

    def test_energies_sorted_ascending(self):
        signal = mode_signal([0.3, 0.9, 1.4], [[1.0, 0.8, 0.6]], 1.0, 30)
        est = run_modmd(
            signal, ModmdConfig(d=3, K=20, dt=1.0, svd_threshold=1e-10, n_eig=3)
        )
        assert np.all(np.diff(est.energies) > 0)

    def test_rank_diagnostics_populated(self):
        signal = mode_signal([0.3, 0.9], [[1.0, 0.8]], 1.0, 30)
        est = run_modmd(
            signal, ModmdConfig(d=2, K=20, dt=1.0, svd_threshold=1e-10, n_eig=2)
        )
        assert est.retained_rank == 2
        assert len(est.singular_values) == 2

    def test_observable_permutation_invariance(self):
        rng = np.random.default_rng(11)
        phases = [0.4, 1.0, 1.7]
        coeffs = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        signal = mode_signal(phases, coeffs, 1.0, 24)
        perm = MultiObservableSignal(
            3, 1.0, signal.values[[2, 0, 1]], mode="complex"
        )
        config = ModmdConfig(d=2, K=16, dt=1.0, svd_threshold=1e-10, n_eig=3)
        np.testing.assert_allclose(
            run_modmd(signal, config).energies,
            run_modmd(perm, config).energies,
            atol=1e-8,
        )

    def test_energy_shift_equivariance(self):
        """Adding a constant to the generator shifts every estimate by it.

        The shifted signal is the original multiplied by a global phase
        ramp exp(-i c k dt)."""
        rng = np.random.default_rng(12)
        phases = np.array([0.2, 0.8])
        coeffs = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        signal = mode_signal(phases, coeffs, 1.0, 20)
        c = 0.45
        ramp = np.exp(-1j * c * np.arange(20))
        shifted = MultiObservableSignal(
            2, 1.0, signal.values * ramp, mode="complex"
        )
        config = ModmdConfig(d=2, K=12, dt=1.0, svd_threshold=1e-10, n_eig=2)
        base = run_modmd(signal, config).energies
        moved = run_modmd(shifted, config).energies
        np.testing.assert_allclose(moved, base + c, atol=1e-8)

    def test_retained_rank_monotone_in_threshold(self):
        rng = np.random.default_rng(13)
        phases = np.sort(rng.uniform(-2.0, 2.0, size=5))
        coeffs = rng.standard_normal((2, 5)) * [[1.0], [0.5]]
        signal = mode_signal(phases, coeffs, 1.0, 40)
        noisy = MultiObservableSignal(
            2,
            1.0,
            signal.values + 1e-5 * rng.standard_normal((2, 40)),
            mode="complex",
        )
        ranks = []
        for thr in (1e-8, 1e-4, 1e-2, 0.3):
            config = ModmdConfig(d=4, K=30, dt=1.0, svd_threshold=thr, n_eig=1)
            ranks.append(run_modmd(noisy, config).retained_rank)
        assert ranks == sorted(ranks, reverse=True)

    def test_aggressive_threshold_raises_shortfall(self):
        signal = mode_signal([0.3, 0.9, 1.5], [[1.0, 0.7, 0.5]], 1.0, 30)
        config = ModmdConfig(d=3, K=20, dt=1.0, svd_threshold=0.999, n_eig=3)
        with pytest.raises(EigenvalueShortfallError):
            run_modmd(signal, config)

    def test_real_mode_ground_energy_on_spin_chain(self):
        """Physical end-to-end check: recentered 6-qubit chain, identity
        observable, real signal; ground energy back to solver precision."""
        spec, shift, phi0 = tfim6_problem()
        ident = PauliSum.from_terms(6, [(1.0, PauliString.identity(6))])
        signal = exact_signal(spec, phi0, [ident], 1.0, 141, mode="real")
        config = ModmdConfig(d=40, K=100, dt=1.0, svd_threshold=1e-12, n_eig=1)
        est = run_modmd(signal, config)
        physical = shift.to_original(est.energies[0])
        exact_e0 = shift.to_original(spec.energies[0])
        assert abs(physical - exact_e0) <= 1e-6

    def test_ground_energy_never_far_below_true_minimum(self):
        """Estimated phases stay within the generating phase hull, so the
        lowest estimate cannot undershoot E0 in the noiseless case."""
        rng = np.random.default_rng(14)
        for _ in range(8):
            m = int(rng.integers(2, 5))
            phases = np.sort(rng.uniform(-2.5, 2.5, size=m))
            if np.min(np.diff(phases)) < 1e-2:
                continue
            coeffs = rng.standard_normal((2, m)) + 0.5
            signal = mode_signal(phases, coeffs, 1.0, 30)
            config = ModmdConfig(
                d=m, K=20, dt=1.0, svd_threshold=1e-10, n_eig=1
            )
            est = run_modmd(signal, config)
            assert est.energies[0] >= phases[0] - 1e-6


class TestResidual:
    def test_consistent_fit_has_negligible_residual(self):
        signal = mode_signal([0.4, 1.2], [[1.0, 0.7]], 1.0, 24)
        pair = build_hankel(signal, d=2, K=16)
        a = solve_system_matrix(pair, 1e-12)
        assert residual(a, pair) <= 1e-10

    def test_zero_propagator_gives_unit_residual(self):
        signal = mode_signal([0.4], [[1.0]], 1.0, 10)
        pair = build_hankel(signal, d=1, K=6)
        assert residual(np.zeros((1, 1)), pair) == pytest.approx(1.0)

    def test_noise_raises_residual(self):
        rng = np.random.default_rng(15)
        signal = mode_signal([0.4, 1.2], [[1.0, 0.7]], 1.0, 40)
        noisy = MultiObservableSignal(
            1,
            1.0,
            signal.values + 0.05 * rng.standard_normal((1, 40)),
            mode="complex",
        )
        clean_pair = build_hankel(signal, d=2, K=30)
        noisy_pair = build_hankel(noisy, d=2, K=30)
        a_clean = solve_system_matrix(clean_pair, 1e-12)
        a_noisy = solve_system_matrix(noisy_pair, 1e-12)
        assert residual(a_noisy, noisy_pair) > residual(a_clean, clean_pair)

    def test_zero_target_rejected(self):
        pair = HankelPair(
            x=np.ones((1, 3)), xp=np.zeros((1, 3)), n_observables=1, d=1, dt=1.0
        )
        with pytest.raises(DegenerateInputError):
            residual(np.ones((1, 1)), pair)


class TestForecast:
    @staticmethod
    def fitted(signal, d, K):
        pair = build_hankel(signal, d, K)
        return solve_system_matrix(pair, 1e-12), pair

    def test_zero_horizon_empty_block(self):
        signal = mode_signal([0.4], [[1.0]], 1.0, 10)
        a, pair = self.fitted(signal, 1, 6)
        out = forecast(a, pair, 0)
        assert out.shape == (1, 0)

    def test_first_column_matches_last_sample_when_consistent(self):
        signal = mode_signal([0.4, 1.1], [[1.0, 0.6], [0.3, 0.9]], 1.0, 20)
        a, pair = self.fitted(signal, 2, 10)
        out = forecast(a, pair, 1)
        # column 0 is absolute step K + d = 12, the final observed sample
        np.testing.assert_allclose(out[:, 0], signal.values[:, 12], atol=1e-9)

    def test_consistent_extrapolation_reproduces_future(self):
        phases = [0.4, 1.1, 2.0]
        coeffs = [[1.0, 0.6, 0.2], [0.3, 0.9, 0.5]]
        long = mode_signal(phases, coeffs, 1.0, 60)
        short = MultiObservableSignal(
            2, 1.0, long.values[:, :21], mode="complex"
        )
        a, pair = self.fitted(short, 3, 17)
        out = forecast(a, pair, 40)
        np.testing.assert_allclose(out, long.values[:, 20:60], atol=1e-7)

    def test_propagator_shape_checked(self):
        signal = mode_signal([0.4], [[1.0]], 1.0, 10)
        _, pair = self.fitted(signal, 2, 6)
        with pytest.raises(ValueError):
            forecast(np.eye(3), pair, 4)

    def test_negative_horizon_rejected(self):
        signal = mode_signal([0.4], [[1.0]], 1.0, 10)
        a, pair = self.fitted(signal, 1, 6)
        with pytest.raises(ValueError):
            forecast(a, pair, -1)


class TestEstimateEigenstate:
    def test_spin_chain_low_states_high_fidelity(self):
        spec, _, phi0 = tfim6_problem()
        base = build_tfim(6, 1.0, 1.0)
        scaled, _ = shift_and_scale(base)
        obs = [
            PauliSum.from_terms(6, [(1.0, PauliString.identity(6))]),
            scaled,
        ]
        signal = exact_signal(spec, phi0, obs, 1.0, 121, mode="complex")
        config = ModmdConfig(d=20, K=100, dt=1.0, svd_threshold=1e-10, n_eig=3)
        est = run_modmd(signal, config)
        for n in range(3):
            state = estimate_eigenstate(est, n, spec, phi0, obs)
            fidelity = abs(np.vdot(spec.eigenvectors[:, n], state.amplitudes))
            assert fidelity >= 0.99

    def test_eigenstate_reference_is_fixed_point(self):
        spec, _, _ = tfim6_problem()
        phi0 = StateVector(6, spec.eigenvectors[:, 0].copy())
        ident = PauliSum.from_terms(6, [(1.0, PauliString.identity(6))])
        signal = exact_signal(spec, phi0, [ident], 1.0, 12, mode="complex")
        config = ModmdConfig(d=2, K=9, dt=1.0, svd_threshold=1e-8, n_eig=1)
        est = run_modmd(signal, config)
        state = estimate_eigenstate(est, 0, spec, phi0, [ident])
        assert abs(np.vdot(spec.eigenvectors[:, 0], state.amplitudes)) >= 1.0 - 1e-9

    def test_result_is_normalized(self):
        spec, _, phi0 = tfim6_problem()
        ident = PauliSum.from_terms(6, [(1.0, PauliString.identity(6))])
        signal = exact_signal(spec, phi0, [ident], 1.0, 61, mode="complex")
        config = ModmdConfig(d=10, K=50, dt=1.0, svd_threshold=1e-10, n_eig=2)
        est = run_modmd(signal, config)
        state = estimate_eigenstate(est, 1, spec, phi0, [ident])
        assert np.linalg.norm(state.amplitudes) == pytest.approx(1.0)

    def test_index_out_of_range_rejected(self):
        spec, _, phi0 = tfim6_problem()
        ident = PauliSum.from_terms(6, [(1.0, PauliString.identity(6))])
        signal = exact_signal(spec, phi0, [ident], 1.0, 61, mode="complex")
        config = ModmdConfig(d=10, K=50, dt=1.0, svd_threshold=1e-10, n_eig=2)
        est = run_modmd(signal, config)
        with pytest.raises(ValueError):
            estimate_eigenstate(est, 2, spec, phi0, [ident])

    def test_observable_count_mismatch_rejected(self):
        spec, _, phi0 = tfim6_problem()
        ident = PauliSum.from_terms(6, [(1.0, PauliString.identity(6))])
        signal = exact_signal(spec, phi0, [ident], 1.0, 61, mode="complex")
        config = ModmdConfig(d=10, K=50, dt=1.0, svd_threshold=1e-10, n_eig=1)
        est = run_modmd(signal, config)
        with pytest.raises(ValueError):
            estimate_eigenstate(est, 0, spec, phi0, [ident, ident, ident])


class TestSelectTimeStep:
    def test_no_gap_information_fallback(self):
        # spread pi -> dt = 2 pi / (2 pi) = 1
        assert select_time_step(-math.pi / 2, math.pi / 2) == pytest.approx(1.0)

    def test_symmetric_ninety_percent_window(self):
        dt = select_time_step(-0.9 * math.pi, 0.9 * math.pi)
        assert dt == pytest.approx(1.0 / 1.8)

    def test_gap_bounds_extend_the_step(self):
        # spread 4 with first gap bounded by 1: dt = 2 pi / 5
        dt = select_time_step(0.0, 4.0, gap_bounds=(1.0,))
        assert dt == pytest.approx(2.0 * math.pi / 5.0)
        assert dt > select_time_step(0.0, 4.0)

    def test_no_wraparound_guarantee(self):
        rng = np.random.default_rng(16)
        for _ in range(20):
            lo, hi = np.sort(rng.uniform(-10, 10, size=2))
            if hi - lo < 1e-3:
                continue
            gaps = tuple(rng.uniform(0.05, 2.0, size=int(rng.integers(0, 4))))
            dt = select_time_step(lo, hi, gap_bounds=gaps)
            assert dt * (hi - lo) < 2.0 * math.pi

    def test_safety_scales_linearly(self):
        full = select_time_step(0.0, 3.0)
        half = select_time_step(0.0, 3.0, safety=0.5)
        assert half == pytest.approx(full / 2.0)

    def test_invalid_arguments_rejected(self):
        with pytest.raises(ValueError):
            select_time_step(1.0, 1.0)
        with pytest.raises(ValueError):
            select_time_step(0.0, 1.0, safety=0.0)
        with pytest.raises(ValueError):
            select_time_step(0.0, 1.0, gap_bounds=(-0.1,))


class TestGroundEnergyErrorBound:
    def test_perfect_overlap_gives_zero(self):
        assert ground_energy_error_bound(3, 0.5, -1.0, -0.2, 1.0, 1.0) == 0.0

    def test_single_shift_closed_form(self):
        # at d=1 the gap amplification drops out entirely
        e0, e1, emax, dt, overlap = -1.0, -0.3, 1.5, 0.4, 0.6
        expected = abs(math.sin((emax - e0) * dt)) / dt * (1 - overlap) / overlap
        got = ground_energy_error_bound(1, dt, e0, e1, emax, overlap)
        assert got == pytest.approx(expected)

    def test_bound_shrinks_geometrically_with_shifts(self):
        vals = [
            ground_energy_error_bound(d, 0.5, -1.0, -0.2, 1.2, 0.5)
            for d in range(1, 8)
        ]
        ratios = np.array(vals[:-1]) / np.array(vals[1:])
        amplification = (1.0 + 3.0 * 0.8 * 0.5 / (2 * math.pi)) ** 2
        np.testing.assert_allclose(ratios, amplification, rtol=1e-12)

    def test_invalid_arguments_rejected(self):
        with pytest.raises(ValueError):
            ground_energy_error_bound(0, 0.5, -1.0, 0.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            ground_energy_error_bound(2, 0.0, -1.0, 0.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            ground_energy_error_bound(2, 0.5, 0.0, 0.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            ground_energy_error_bound(2, 0.5, -1.0, 0.0, 1.0, 0.0)
