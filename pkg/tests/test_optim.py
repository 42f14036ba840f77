import math

import numpy as np
import pytest
from scipy.stats import chisquare

from svrgkit.core import RandomSource
from svrgkit.losses import LossKind
from svrgkit.objectives import (QuadraticObjective, build_snapshot,
                                make_synthetic)
from svrgkit.optim import (AdaGradRate, AdaGradState, ConstantRate,
                           DivergenceError, PolynomialRate, SvrgSchedule,
                           adagrad_step, beta_weights, default_svrg_params,
                           draw_epoch_stop, epoch_end_weights, gd_run,
                           grad_dominated_drive, parse_rate, sgd_run,
                           svrg_estimator, svrg_full_run, svrg_simple_run)


class TestBetaWeights:
    def test_m0_equals_one(self):
        assert beta_weights(1).tolist() == [1.0]

    def test_m0_equals_two(self):
        got = beta_weights(2)
        assert got[0] == 1.0
        assert math.isclose(got[1], 2.0 / 3.0, rel_tol=1e-12)

    def test_m0_equals_four(self):
        got = beta_weights(4)
        assert np.allclose(got, [1.0, 0.8, 0.64, 0.512], rtol=1e-12)
        assert got[-1] >= 1.0 / math.e

    def test_bounds_sample(self):
        for m0 in (1, 2, 3, 10, 100, 1234, 10_000):
            betas = beta_weights(m0)
            assert betas[0] == 1.0
            assert betas.min() >= 1.0 / math.e
            assert betas.max() <= 1.0
            assert np.all(np.diff(betas) <= 0)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            beta_weights(0)


class TestEpochEndWeights:
    def test_m0_one_point_mass(self):
        weights, probs = epoch_end_weights(1, beta_weights(1))
        assert weights.tolist() == [1.0]
        assert probs.tolist() == [1.0]

    def test_m0_two_hand_values(self):
        weights, probs = epoch_end_weights(2, beta_weights(2))
        assert np.allclose(weights, [2.0 / 3.0, 20.0 / 27.0], rtol=1e-12)
        assert np.allclose(probs, [9.0 / 19.0, 10.0 / 19.0], rtol=1e-12)

    def test_m0_three_hand_values(self):
        weights, probs = epoch_end_weights(3, beta_weights(3))
        assert np.allclose(weights, [0.5625, 0.625, 1.4583333333333333],
                           rtol=1e-12)
        assert np.allclose(probs, [0.21259843, 0.23622047, 0.55118110],
                           atol=5e-9)

    def test_probabilities_normalized_and_positive(self):
        for m0 in (1, 2, 5, 17, 256, 4096):
            _, probs = epoch_end_weights(m0, beta_weights(m0))
            assert abs(probs.sum() - 1.0) <= 1e-12
            assert probs.min() > 0

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            epoch_end_weights(3, beta_weights(2))


class TestDefaultSvrgParams:
    def test_n1000_hand_values(self):
        s = default_svrg_params(1000, 1.0)
        assert (s.m, s.m0, s.d_sub) == (1000, 500, 2)
        assert math.isclose(s.eta, 1.0 / 500.0, rel_tol=1e-15)
        assert s.theory_ok
        # the cube search is exact at the boundary
        assert 377 ** 3 < 54 * 10 ** 6 <= 378 ** 3

    def test_tiny_n_clamps(self):
        s = default_svrg_params(8, 2.0)
        assert (s.m, s.m0, s.d_sub) == (8, 8, 1)
        assert math.isclose(s.eta, 1.0 / 16.0, rel_tol=1e-15)
        assert not s.theory_ok

    def test_m_override_two_n(self):
        s = default_svrg_params(1000, 1.0, m_override=2000)
        assert s.m >= 2000 and s.d_sub * s.m0 == s.m
        assert s.m0 == -(-s.m // s.d_sub)
        base = default_svrg_params(1000, 1.0)
        assert s.m0 != base.m0  # recomputed from the overridden m

    def test_rejects_degenerate_smoothness(self):
        for bad in (0.0, -1.0, math.inf, math.nan):
            with pytest.raises(ValueError):
                default_svrg_params(10, bad)

    def test_m0_override_forces_divisibility(self):
        s = default_svrg_params(10, 1.0, m0_override=4)
        assert s.m == 12 and s.m0 == 4 and s.d_sub == 3

    def test_schedule_validation(self):
        with pytest.raises(ValueError):
            SvrgSchedule(10, 3, 3, 0.1, beta_weights(3),
                         *epoch_end_weights(3, beta_weights(3)), True)


def two_component_quadratic():
    # f1(x) = x^2/2, f2(x) = x^2/2 + x
    return QuadraticObjective([1.0, 1.0], offsets=[[0.0], [1.0]], dim=1)


class TestSvrgEstimator:
    def test_hand_value(self):
        obj = two_component_quadratic()
        cache = build_snapshot(obj, np.array([0.0]))
        est = svrg_estimator(cache, obj, np.array([1.0]), [1])
        assert est[0] == 1.5  # grad_1(1) - grad_1(0) + mu = 1 - 0 + 0.5

    def test_collapses_at_snapshot(self):
        obj = make_synthetic(12, 3, seed=0, lam=1e-2)
        ref = RandomSource(1).normals(3)
        cache = build_snapshot(obj, ref)
        for batch in ([1], [2, 7], list(range(1, 13))):
            est = svrg_estimator(cache, obj, ref.copy(), batch)
            assert np.linalg.norm(est - cache.full_grad) <= 1e-12

    def test_full_batch_is_exact_gradient(self):
        obj = make_synthetic(10, 3, seed=2, lam=1e-3)
        rng = RandomSource(3)
        cache = build_snapshot(obj, rng.normals(3))
        x = rng.normals(3)
        est = svrg_estimator(cache, obj, x, list(range(1, 11)))
        _, grad = obj.full_value_and_gradient(x)
        assert np.linalg.norm(est - grad) <= 1e-12 * (1 + np.linalg.norm(grad))

    def test_exact_unbiasedness_over_singletons(self):
        obj = make_synthetic(30, 4, seed=4, lam=1e-3)
        rng = RandomSource(5)
        cache = build_snapshot(obj, rng.normals(4))
        x = rng.normals(4)
        avg = np.mean([svrg_estimator(cache, obj, x, [i])
                       for i in range(1, obj.n + 1)], axis=0)
        _, grad = obj.full_value_and_gradient(x)
        assert np.linalg.norm(avg - grad) <= 1e-12 * (1 + np.linalg.norm(grad))

    def test_generic_and_fused_paths_agree(self):
        obj = make_synthetic(10, 3, seed=6, lam=1e-2)
        rng = RandomSource(7)
        cache = build_snapshot(obj, rng.normals(3))
        x = rng.normals(3)
        fused = svrg_estimator(cache, obj, x, [3, 8])
        generic = cache.full_grad + 0.5 * sum(
            obj.component(i, x)[1] - cache.ref_component_grad(i)
            for i in (3, 8))
        assert np.linalg.norm(fused - generic) <= 1e-12

    def test_empty_batch_rejected(self):
        obj = two_component_quadratic()
        cache = build_snapshot(obj, np.zeros(1))
        with pytest.raises(ValueError):
            svrg_estimator(cache, obj, np.zeros(1), [])
        with pytest.raises(IndexError):
            svrg_estimator(cache, obj, np.zeros(1), [3])


class TestSvrgSimpleRun:
    def test_single_component_is_plain_gd(self):
        obj = QuadraticObjective([1.0], offsets=[[2.0]], dim=1)
        sched = default_svrg_params(1, obj.smoothness)
        res = svrg_simple_run(obj, np.array([5.0]), sched, epochs=4,
                              batch_size=1, rng=RandomSource(0))
        gd = gd_run(obj, np.array([5.0]), steps=4)
        assert np.allclose(res.trace[-1].objective, gd.trace[-1].objective,
                           rtol=1e-12)

    def test_quadratic_one_exact_step(self):
        obj = QuadraticObjective([1.0], dim=1)  # f(x) = x^2/2, L = 1
        sched = default_svrg_params(1, 1.0)
        assert sched.eta == 1.0
        res = svrg_simple_run(obj, np.array([7.0]), sched, epochs=1,
                              batch_size=1, rng=RandomSource(0))
        assert res.final_value == 0.0
        assert res.output[0] == 0.0  # only post-update iterate is x_1 = 0

    def test_deterministic_replay(self):
        obj = make_synthetic(32, 4, seed=1, lam=1e-3)
        sched = default_svrg_params(obj.n, obj.smoothness)
        a = svrg_simple_run(obj, np.zeros(4), sched, 3, 2, RandomSource(11))
        b = svrg_simple_run(obj, np.zeros(4), sched, 3, 2, RandomSource(11))
        assert np.array_equal(a.output, b.output)
        assert [r.objective for r in a.trace] == [r.objective for r in b.trace]
        assert [r.passes for r in a.trace] == [r.passes for r in b.trace]
        assert a.grad_evals == b.grad_evals

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_aborts(self):
        obj = make_synthetic(16, 3, seed=2, loss=LossKind.squared(), lam=0.0)
        sched = default_svrg_params(obj.n, obj.smoothness)
        with pytest.raises(DivergenceError):
            svrg_simple_run(obj, np.zeros(3), sched, epochs=50, batch_size=1,
                            rng=RandomSource(0), lr=ConstantRate(1e4))


class TestSvrgFullRun:
    def test_m0_one_stop_is_point_mass(self):
        obj = make_synthetic(6, 2, seed=3, lam=1e-2)
        sched = default_svrg_params(obj.n, obj.smoothness, m0_override=1)
        res = svrg_full_run(obj, np.zeros(2), sched, epochs=5, batch_size=1,
                            rng=RandomSource(1))
        assert res.epoch_stops == [sched.m] * 5

    def test_stop_draws_match_distribution(self):
        # 1e5 standalone draws against the hand-computed m0 = 3 pmf
        sched = default_svrg_params(6, 1.0, m0_override=3)
        assert sched.m == 6 and sched.m0 == 3
        rng = RandomSource(17)
        draws = np.array([draw_epoch_stop(rng, sched) for _ in range(100_000)])
        counts = [(draws == 6).sum(), (draws == 5).sum(), (draws == 4).sum()]
        expected = np.array([0.21259843, 0.23622047, 0.55118110]) * 100_000
        stat, pvalue = chisquare(counts, expected)
        assert pvalue > 0.01

    def test_engine_stops_match_distribution(self):
        # the runner's own epoch stops follow the same pmf
        obj = make_synthetic(6, 2, seed=4, lam=1e-2)
        sched = default_svrg_params(obj.n, obj.smoothness, m0_override=3)
        stops = []
        for seed in range(400):
            res = svrg_full_run(obj, np.zeros(2), sched, epochs=5,
                                batch_size=1, rng=RandomSource(seed))
            stops.extend(res.epoch_stops)
        counts = [stops.count(6), stops.count(5), stops.count(4)]
        expected = np.array([0.21259843, 0.23622047, 0.55118110]) * len(stops)
        stat, pvalue = chisquare(counts, expected)
        assert pvalue > 0.01

    def test_reservoir_output_uniform_over_two_iterates(self):
        # m = 2, m0 = 1: the stop is forced to m^s = 2 and the eligible
        # iterates are x_0 (known start) and x_1; each should be returned
        # with frequency 1/2 +- 0.02 over 1e4 trials.
        obj = QuadraticObjective([1.0, 1.0], offsets=[[1.0], [-0.5]], dim=1)
        sched = default_svrg_params(2, obj.smoothness, m0_override=1)
        assert sched.m == 2 and sched.m0 == 1
        start = np.array([5.0])
        hits_start = 0
        for seed in range(10_000):
            res = svrg_full_run(obj, start, sched, epochs=1, batch_size=1,
                                rng=RandomSource(seed))
            assert res.epoch_stops == [2]
            hits_start += res.output[0] == 5.0
        assert abs(hits_start / 10_000 - 0.5) <= 0.02

    def test_restart_uses_stopped_iterate(self):
        obj = make_synthetic(6, 2, seed=5, lam=1e-2)
        sched = default_svrg_params(obj.n, obj.smoothness, m0_override=3)
        res = svrg_full_run(obj, np.zeros(2), sched, epochs=2, batch_size=1,
                            rng=RandomSource(3), record_iterates=True)
        m_s = res.epoch_stops[0]
        assert np.array_equal(res.epoch_iterates[1][0],
                              res.epoch_iterates[0][m_s])

    def test_deterministic_replay(self):
        obj = make_synthetic(24, 3, seed=6, lam=1e-3)
        sched = default_svrg_params(obj.n, obj.smoothness, m0_override=6)
        a = svrg_full_run(obj, np.zeros(3), sched, 3, 2, RandomSource(8))
        b = svrg_full_run(obj, np.zeros(3), sched, 3, 2, RandomSource(8))
        assert np.array_equal(a.output, b.output)
        assert a.epoch_stops == b.epoch_stops
        assert [r.grad_norm_sq for r in a.trace] == \
            [r.grad_norm_sq for r in b.trace]


class TestPassAccounting:
    @pytest.mark.parametrize("n,b,m0,epochs", [
        (12, 1, 4, 3), (12, 3, 4, 2), (20, 5, 4, 1), (16, 2, 8, 4),
        (30, 10, 5, 2), (8, 8, 4, 3), (24, 1, 6, 5), (18, 6, 3, 1),
        (40, 4, 10, 2), (10, 2, 5, 3),
    ])
    def test_stored_mode_epoch_cost(self, n, b, m0, epochs):
        obj = make_synthetic(n, 3, seed=n + b, lam=1e-3)
        sched = default_svrg_params(n, obj.smoothness, m0_override=m0)
        res = svrg_full_run(obj, np.zeros(3), sched, epochs, b,
                            RandomSource(0), accounting="stored")
        m = sched.m
        # integer ledger: epochs snapshots + inner work + final evaluation
        assert res.grad_evals == epochs * (n + m * b) + n
        snapshots = [r for r in res.trace[:-1]]
        for s, rec in enumerate(snapshots):
            expected_evals = s * (n + m * b) + n
            assert rec.passes == expected_evals / n
        assert res.trace[-1].passes == res.grad_evals / n

    def test_recompute_mode_epoch_cost(self):
        n, b, epochs = 12, 3, 2
        obj = make_synthetic(n, 3, seed=9, lam=1e-3)
        sched = default_svrg_params(n, obj.smoothness, m0_override=4)
        res = svrg_full_run(obj, np.zeros(3), sched, epochs, b,
                            RandomSource(0), accounting="recompute")
        m = sched.m
        assert res.grad_evals == epochs * (n + 2 * m * b) + n
        assert res.trace[1].passes == (n + 2 * m * b + n) / n

    def test_gd_one_pass_per_step(self):
        obj = make_synthetic(10, 3, seed=1, lam=1e-2)
        res = gd_run(obj, np.zeros(3), steps=7)
        assert [r.passes for r in res.trace] == [float(k) for k in
                                                 range(1, 9)]
        assert res.grad_evals == 8 * 10

    def test_sgd_batch_fraction_passes(self):
        n, b, iters = 20, 5, 12
        obj = make_synthetic(n, 3, seed=2, lam=1e-2)
        res = sgd_run(obj, np.zeros(3), iters, b, RandomSource(0),
                      ConstantRate(0.1))
        assert res.grad_evals == iters * b + n  # final exact eval
        assert res.trace[-1].passes == (iters * b + n) / n

    def test_eval_checkpoints_charged_honestly(self):
        n, b = 12, 1
        obj = make_synthetic(n, 3, seed=3, lam=1e-3)
        sched = default_svrg_params(n, obj.smoothness, m0_override=4)
        res = svrg_full_run(obj, np.zeros(3), sched, 3, b, RandomSource(0),
                            eval_every_epochs=1)
        # 3 snapshots + 3 inner blocks + 2 mid checkpoints + final eval
        assert res.grad_evals == 3 * (n + sched.m * b) + 2 * n + n
        passes = [r.passes for r in res.trace]
        assert passes == sorted(passes)


class TestGdRun:
    def test_quadratic_one_step(self):
        obj = QuadraticObjective([1.0], dim=1)
        res = gd_run(obj, np.array([4.0]), steps=1)
        assert res.output[0] == 0.0
        assert res.final_value == 0.0

    def test_gradient_norm_non_increasing_on_convex_quadratic(self):
        obj = QuadraticObjective([0.5, 1.5, 1.0],
                                 offsets=[[1.0, 0.0], [0.0, -2.0], [0.5, 0.5]],
                                 dim=2)
        res = gd_run(obj, np.array([3.0, -4.0]), steps=30)
        gns = [r.grad_norm_sq for r in res.trace]
        assert all(b <= a * (1 + 1e-12) for a, b in zip(gns, gns[1:]))

    def test_divergence_with_bad_step(self):
        obj = QuadraticObjective([1.0], dim=1)
        with pytest.raises(DivergenceError):
            gd_run(obj, np.array([1.0]), steps=2000, step=2.5)

    def test_target_early_stop_production_cost(self):
        obj = QuadraticObjective([1.0], dim=1)  # |grad(x)|^2 = x^2
        res = gd_run(obj, np.array([4.0]), steps=50, step=0.5,
                     target_grad_sq=1.1)
        # iterates 4, 2, 1: first below sqrt(1.1) is x_2, produced by 2 steps
        assert res.evals_to_target == 2 * obj.n


class TestSgdRun:
    def test_polynomial_rate_value(self):
        lr = PolynomialRate(0.1, 0.5)
        assert math.isclose(lr.value(1000, 1000), 0.1 / math.sqrt(2),
                            rel_tol=1e-12)
        assert math.isclose(lr.value(1000, 1000), 0.070711, abs_tol=5e-7)
        assert PolynomialRate(0.1, 0.5, grow=True).value(1000, 1000) > 0.1
        assert PolynomialRate(0.3, 0.0).value(999, 10) == 0.3

    def test_single_component_constant_equals_gd(self):
        obj = QuadraticObjective([1.0], offsets=[[1.5]], dim=1)
        res = sgd_run(obj, np.array([3.0]), iterations=5, batch_size=1,
                      rng=RandomSource(0), lr=ConstantRate(0.25))
        gd = gd_run(obj, np.array([3.0]), steps=5, step=0.25)
        assert math.isclose(res.final_value, gd.final_value, rel_tol=1e-12)

    def test_deterministic(self):
        obj = make_synthetic(16, 3, seed=7, lam=1e-3)
        runs = [sgd_run(obj, np.zeros(3), 40, 2, RandomSource(9),
                        PolynomialRate(0.2, 0.4)) for _ in range(2)]
        assert np.array_equal(runs[0].output, runs[1].output)

    def test_random_output_mode(self):
        obj = make_synthetic(16, 3, seed=8, lam=1e-3)
        res = sgd_run(obj, np.zeros(3), 30, 1, RandomSource(1),
                      ConstantRate(0.05), output="random")
        rerun = sgd_run(obj, np.zeros(3), 30, 1, RandomSource(1),
                        ConstantRate(0.05), output="random")
        assert np.array_equal(res.output, rerun.output)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence(self):
        obj = make_synthetic(8, 2, seed=9, loss=LossKind.squared(), lam=0.0)
        with pytest.raises(DivergenceError):
            sgd_run(obj, np.zeros(2), 5000, 1, RandomSource(0),
                    ConstantRate(1e5))


class TestAdagrad:
    def test_first_step_normalizes(self):
        state = AdaGradState()
        step = adagrad_step(state, np.array([3.0, 4.0]), alpha=1.0, delta=0.0)
        assert np.allclose(step, [1.0, 1.0], rtol=1e-15)
        assert np.allclose(state.acc, [9.0, 16.0], rtol=1e-15)

    def test_zero_gradient_is_noop(self):
        state = AdaGradState(2)
        adagrad_step(state, np.array([1.0, 2.0]), 1.0, 1e-8)
        before = state.acc.copy()
        step = adagrad_step(state, np.zeros(2), 1.0, 1e-8)
        assert np.array_equal(step, np.zeros(2))
        assert np.array_equal(state.acc, before)

    def test_accumulator_non_decreasing(self):
        state = AdaGradState(3)
        rng = RandomSource(0)
        prev = state.acc.copy()
        for _ in range(50):
            adagrad_step(state, rng.normals(3), 0.5, 1e-8)
            assert np.all(state.acc >= prev)
            prev = state.acc.copy()

    def test_dimension_mismatch(self):
        state = AdaGradState(2)
        with pytest.raises(ValueError):
            adagrad_step(state, np.ones(3), 1.0, 1e-8)

    def test_adagrad_rate_on_svrg(self):
        obj = make_synthetic(16, 3, seed=10, lam=1e-3)
        sched = default_svrg_params(obj.n, obj.smoothness)
        res = svrg_full_run(obj, np.zeros(3), sched, 2, 1, RandomSource(4),
                            lr=AdaGradRate(alpha=0.5))
        rerun = svrg_full_run(obj, np.zeros(3), sched, 2, 1, RandomSource(4),
                              lr=AdaGradRate(alpha=0.5))
        assert np.array_equal(res.output, rerun.output)
        assert res.final_value < obj.full_value_and_gradient(np.zeros(3))[0]


class TestGradDominatedDrive:
    def test_quadratic_halving(self):
        # f(x) = x^2/2 is tau-gradient-dominated with tau = 1/2
        obj = QuadraticObjective([1.0], dim=1)
        res = grad_dominated_drive(obj, np.array([1.0]), tau=0.5, rounds=10,
                                   rng=RandomSource(0))
        assert res.final_value <= 2 ** -10 * 0.5 * 1.5

    def test_single_round_equals_one_full_run(self):
        obj = make_synthetic(12, 3, seed=11, lam=1e-2)
        sched = default_svrg_params(obj.n, obj.smoothness)
        drive = grad_dominated_drive(obj, np.zeros(3), tau=2.0, rounds=1,
                                     rng=RandomSource(5), schedule=sched,
                                     epochs_per_round=3)
        direct = svrg_full_run(obj, np.zeros(3), sched, 3, 1,
                               RandomSource(5).fork(0))
        assert np.array_equal(drive.output, direct.output)

    def test_round_objectives_non_increasing_in_median(self):
        obj = make_synthetic(16, 3, seed=12, lam=1e-2)
        sched = default_svrg_params(obj.n, obj.smoothness)
        rounds = []
        for seed in range(20):
            res = grad_dominated_drive(obj, np.zeros(3), tau=1.0, rounds=3,
                                       rng=RandomSource(seed), schedule=sched,
                                       epochs_per_round=4)
            rounds.append(res.round_values)
        med = np.median(np.array(rounds), axis=0)
        assert all(b <= a + 1e-12 for a, b in zip(med, med[1:]))

    def test_rejects_bad_args(self):
        obj = QuadraticObjective([1.0], dim=1)
        with pytest.raises(ValueError):
            grad_dominated_drive(obj, np.zeros(1), tau=0.0, rounds=1,
                                 rng=RandomSource(0))
        with pytest.raises(ValueError):
            grad_dominated_drive(obj, np.zeros(1), tau=1.0, rounds=0,
                                 rng=RandomSource(0))


class TestParseRate:
    def test_forms(self):
        assert parse_rate("constant:0.5") == ConstantRate(0.5)
        assert parse_rate("poly:0.1,0.3") == PolynomialRate(0.1, 0.3)
        assert parse_rate("poly:0.1,0.3,grow") == \
            PolynomialRate(0.1, 0.3, grow=True)
        assert parse_rate("adagrad:2.0") == AdaGradRate(2.0, 1e-8)
        assert parse_rate("adagrad:2.0,1e-6") == AdaGradRate(2.0, 1e-6)

    def test_rejects_unknown(self):
        with pytest.raises(ValueError):
            parse_rate("momentum:0.9")
