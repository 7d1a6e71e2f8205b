import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from massart_halfspace import (
    MarginalSampler,
    PsgdConfig,
    PsgdDivergenceError,
    SurrogateSpec,
    population_estimates,
    psgd_run,
    psgd_run_batch,
    sample_gradients,
    stationarity_certificate,
    theoretical_iteration_count,
    theoretical_step_size,
)

E1_3 = np.array([1.0, 0.0, 0.0])


def _zero_oracle(w, rng):
    return np.zeros_like(w)


class TestConfigValidation:
    def test_rejects_bad_steps(self):
        with pytest.raises(ValueError):
            PsgdConfig(steps=0, step_size=0.1)
        with pytest.raises(ValueError):
            PsgdConfig(steps=2.0, step_size=0.1)

    def test_rejects_bad_step_size(self):
        with pytest.raises(ValueError):
            PsgdConfig(steps=5, step_size=0.0)
        with pytest.raises(ValueError):
            PsgdConfig(steps=5, step_size=float("inf"))

    def test_rejects_bad_record_every(self):
        with pytest.raises(ValueError):
            PsgdConfig(steps=5, step_size=0.1, record_every=0)


class TestSingleRun:
    def test_zero_oracle_freezes_iterates(self):
        traj = psgd_run(_zero_oracle, PsgdConfig(steps=10, step_size=0.5), w0=E1_3)
        assert np.allclose(traj.iterates, E1_3, atol=0)
        assert len(traj) == 11
        assert np.array_equal(traj.step_indices, np.arange(11))

    def test_one_step_hand_trace(self):
        # hand trace: v = e1 - 1.0 * e2, projected back to the sphere
        e2 = np.array([0.0, 1.0, 0.0])
        traj = psgd_run(lambda w, rng: e2, PsgdConfig(steps=1, step_size=1.0), w0=E1_3)
        expected = (E1_3 - e2) / math.sqrt(2.0)
        assert np.allclose(traj.final(), expected, atol=1e-15)

    def test_default_start_is_first_axis(self):
        traj = psgd_run(_zero_oracle, PsgdConfig(steps=1, step_size=0.1), dim=4)
        assert np.array_equal(traj.iterates[0], np.array([1.0, 0.0, 0.0, 0.0]))

    def test_needs_w0_or_dim(self):
        with pytest.raises(ValueError):
            psgd_run(_zero_oracle, PsgdConfig(steps=1, step_size=0.1))

    def test_rejects_non_unit_start(self):
        with pytest.raises(ValueError):
            psgd_run(_zero_oracle, PsgdConfig(steps=1, step_size=0.1), w0=np.array([1.0, 1.0]))

    def test_deterministic_across_runs(self):
        def noisy(w, rng):
            return rng.standard_normal(w.shape[0])

        cfg = PsgdConfig(steps=50, step_size=0.05, seed=7)
        a = psgd_run(noisy, cfg, w0=E1_3)
        b = psgd_run(noisy, cfg, w0=E1_3)
        assert np.array_equal(a.iterates, b.iterates)
        c = psgd_run(noisy, PsgdConfig(steps=50, step_size=0.05, seed=8), w0=E1_3)
        assert not np.array_equal(a.iterates, c.iterates)

    def test_unit_norm_invariant(self):
        def noisy(w, rng):
            return rng.standard_normal(w.shape[0])

        traj = psgd_run(noisy, PsgdConfig(steps=200, step_size=0.3, seed=3), w0=E1_3)
        norms = np.linalg.norm(traj.iterates, axis=1)
        assert np.max(np.abs(norms - 1.0)) <= 1e-12

    def test_record_every_thins_and_keeps_final(self):
        traj = psgd_run(_zero_oracle, PsgdConfig(steps=10, step_size=0.1, record_every=4), w0=E1_3)
        assert np.array_equal(traj.step_indices, [0, 4, 8, 10])
        traj2 = psgd_run(_zero_oracle, PsgdConfig(steps=8, step_size=0.1, record_every=4), w0=E1_3)
        assert np.array_equal(traj2.step_indices, [0, 4, 8])

    def test_grad_norm_recording(self):
        e2 = np.array([0.0, 1.0, 0.0])
        traj = psgd_run(
            lambda w, rng: 2.0 * e2,
            PsgdConfig(steps=3, step_size=0.1, record_grad_norms=True),
            w0=E1_3,
        )
        assert math.isnan(traj.grad_norms[0])
        assert traj.grad_norms[1] == pytest.approx(2.0, abs=1e-15)

    def test_nonfinite_gradient_aborts_with_step(self):
        def explode(w, rng):
            return np.full(w.shape[0], np.nan)

        with pytest.raises(PsgdDivergenceError) as info:
            psgd_run(explode, PsgdConfig(steps=5, step_size=0.1), w0=E1_3)
        assert info.value.step == 1

    def test_zero_update_aborts(self):
        def radial(w, rng):
            return w / 0.1  # v = w - 0.1 * (w/0.1) = 0

        with pytest.raises(PsgdDivergenceError):
            psgd_run(radial, PsgdConfig(steps=1, step_size=0.1), w0=E1_3)

    def test_orthogonal_gradients_never_shrink_preprojection(self):
        # with gradients orthogonal to w the projection only ever
        # contracts, so a huge step size still cannot diverge
        def ortho(w, rng):
            g = rng.standard_normal(w.shape[0])
            g -= (g @ w) * w
            return 100.0 * g

        traj = psgd_run(ortho, PsgdConfig(steps=100, step_size=1.0, seed=5), w0=E1_3)
        assert np.all(np.isfinite(traj.iterates))


class TestBatchRun:
    def test_matches_single_run_with_shared_stream(self):
        def batch_oracle(W, rng):
            return np.tile(np.array([0.0, 1.0, 0.0]), (W.shape[0], 1)) * 0.3

        def single_oracle(w, rng):
            return np.array([0.0, 1.0, 0.0]) * 0.3

        starts = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        cfg = PsgdConfig(steps=20, step_size=0.2, seed=11, record_every=5)
        batch = psgd_run_batch(batch_oracle, cfg, starts)
        assert batch.iterates.shape == (5, 2, 3)
        for row in range(2):
            solo = psgd_run(single_oracle, cfg, w0=starts[row])
            # batched norms accumulate in a different order than the
            # scalar path, so agreement is to rounding, not bitwise
            assert np.allclose(batch.iterates[:, row, :], solo.iterates, rtol=0, atol=1e-12)

    def test_rejects_bad_shapes_and_norms(self):
        cfg = PsgdConfig(steps=1, step_size=0.1)
        with pytest.raises(ValueError):
            psgd_run_batch(lambda W, rng: W, cfg, np.ones(3))
        with pytest.raises(ValueError):
            psgd_run_batch(lambda W, rng: W, cfg, np.ones((2, 3)))

    def test_divergence_names_the_row(self):
        def poison(W, rng):
            G = np.zeros_like(W)
            G[1] = np.inf
            return G

        starts = np.eye(3)
        with pytest.raises(PsgdDivergenceError) as info:
            psgd_run_batch(poison, PsgdConfig(steps=2, step_size=0.1), starts)
        assert "row 1" in str(info.value)


class TestTheoreticalSchedules:
    def test_step_size_hand_values(self):
        assert theoretical_step_size(1.0, 2.0, 1.0, 1) == 1.0
        assert theoretical_step_size(1.0, 1.0, 1.0, 4) == pytest.approx(
            0.7071067811865476, abs=1e-16
        )

    def test_step_size_quarter_steps_halves(self):
        b1 = theoretical_step_size(3.0, 5.0, 2.0, 100)
        b4 = theoretical_step_size(3.0, 5.0, 2.0, 400)
        assert b4 == pytest.approx(b1 / 2.0, rel=1e-15)

    def test_step_size_validation(self):
        with pytest.raises(ValueError):
            theoretical_step_size(0.0, 1.0, 1.0, 1)
        with pytest.raises(ValueError):
            theoretical_step_size(1.0, 1.0, 1.0, 0)

    def test_iteration_count_hand_values(self):
        assert theoretical_iteration_count(1.0, 1.0, 1.0, 0.0, 1.0, 0.5) == 2
        # hand arithmetic: ceil((2 + 8*ln(e))/0.5^4) = ceil(10/0.0625)
        assert theoretical_iteration_count(1.0, 1.0, 1.0, 1.0, 0.5, math.exp(-1.0)) == 160

    def test_iteration_count_eps_scaling(self):
        t1 = theoretical_iteration_count(2.0, 3.0, 1.0, 1.5, 0.2, 0.1)
        t2 = theoretical_iteration_count(2.0, 3.0, 1.0, 1.5, 0.1, 0.1)
        # scaling is exact up to the two independent ceilings
        assert 16 * (t1 - 1) < t2 <= 16 * t1

    def test_iteration_count_validation(self):
        with pytest.raises(ValueError):
            theoretical_iteration_count(1.0, 1.0, 1.0, 1.0, 0.0, 0.5)
        with pytest.raises(ValueError):
            theoretical_iteration_count(1.0, 1.0, 1.0, 1.0, 0.5, 1.0)
        with pytest.raises(ValueError):
            theoretical_iteration_count(1.0, 1.0, 1.0, -1.0, 0.5, 0.5)


class TestStationarityCertificate:
    def _traj(self, iterates):
        arr = np.asarray(iterates, dtype=np.float64)
        return type(psgd_run(_zero_oracle, PsgdConfig(steps=1, step_size=1.0), w0=E1_3))(
            step_indices=np.arange(arr.shape[0], dtype=np.int64), iterates=arr
        )

    def test_single_iterate(self):
        traj = psgd_run(_zero_oracle, PsgdConfig(steps=1, step_size=1.0, record_every=5), w0=E1_3)
        cert = stationarity_certificate(traj, lambda w: (float(w[0]), 0.01))
        assert cert.step_index in (0, 1)

    def test_picks_argmin(self):
        traj = self._traj([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
        cert = stationarity_certificate(traj, lambda w: (abs(float(w[0]) - 0.0), 0.0))
        assert cert.step_index == 1
        assert cert.grad_norm == 0.0

    def test_tie_breaks_to_smallest_index(self):
        traj = self._traj([[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
        cert = stationarity_certificate(traj, lambda w: (0.5, 0.1))
        assert cert.step_index == 0

    def test_rejects_batch_trajectory(self):
        batch = psgd_run_batch(
            lambda W, rng: np.zeros_like(W), PsgdConfig(steps=1, step_size=1.0), np.eye(2)
        )
        with pytest.raises(ValueError):
            stationarity_certificate(batch, lambda w: (0.0, 0.0))

    def test_target_certifies_near_stationary_under_clean_labels(self):
        target = np.array([1.0, 0.0, 0.0, 0.0])
        xs = MarginalSampler(kind="standard_gaussian", dim=4, seed=61).sample(50_000)
        ys = np.sign(xs @ target)
        ys[ys == 0] = 1.0
        spec = SurrogateSpec("sigmoid", 0.1)

        def estimator(w):
            est = population_estimates(w, xs, ys, spec)
            return est.gradient_norm, est.gradient_norm_stderr

        off = np.array([0.8, 0.6, 0.0, 0.0])
        traj = self._traj([off, target, [0.0, 1.0, 0.0, 0.0]])
        cert = stationarity_certificate(traj, estimator)
        assert cert.step_index == 1
        assert cert.grad_norm <= 3 * cert.stderr


class TestMeanStationarity:
    def test_average_squared_gradient_tracks_bound(self):
        # smooth synthetic objective f(w) = 1 - <a, w/||w||>^2 with known
        # gradient; average squared trajectory gradient should land within
        # 2x of sqrt(L*B*R/(2T)) at the matching theoretical step size
        a = np.array([0.6, -0.8, 0.0])
        L, B, R = 2.0, 4.0, 1.0
        T = 400

        def true_grad(w):
            m = float(a @ w)
            return -2.0 * m * (a - m * w)

        def oracle(w, rng):
            return true_grad(w) + 0.1 * rng.standard_normal(3)

        beta = theoretical_step_size(L, B, R, T)
        traj = psgd_run(oracle, PsgdConfig(steps=T, step_size=beta, seed=17), w0=E1_3)
        mean_sq = float(np.mean([float(np.dot(g, g)) for g in map(true_grad, traj.iterates)]))
        bound = math.sqrt(L * B * R / (2.0 * T))
        if mean_sq > bound:
            assert mean_sq <= 2.0 * bound

    @given(st.integers(0, 10**4))
    @settings(max_examples=20, deadline=None)
    def test_synthetic_objective_progress(self, seed):
        # gradient descent on f(w) = 1 - <a, w>^2 should reduce the value
        a = np.array([0.0, 1.0, 0.0])

        def oracle(w, rng):
            m = float(a @ w)
            return -2.0 * m * (a - m * w) + 0.01 * rng.standard_normal(3)

        start = np.array([0.8, 0.6, 0.0])
        traj = psgd_run(oracle, PsgdConfig(steps=300, step_size=0.05, seed=seed), w0=start)
        assert 1 - float(a @ traj.final()) ** 2 < 1 - 0.6**2
