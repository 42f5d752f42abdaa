import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from garchcp.garch_core import (
    GarchParams,
    ReturnsSeries,
    filter_condvar,
    filter_condvar_batch,
    fit_garch,
    piecewise_schedule,
    qmle_loglik,
    simulate_garch_path,
)


def naive_filter(r, omega, alpha, beta, v):
    """Direct GARCH(1,1) recursion with pre-sample values ``v``."""
    h = []
    r_prev, h_prev = v, v
    for x in r:
        ht = omega + alpha * r_prev + beta * h_prev
        h.append(ht)
        r_prev, h_prev = x * x, ht
    return np.array(h)


def simulate(params, T, seed, burn_in=500):
    eps = np.random.default_rng(seed).standard_normal(T + burn_in)
    return simulate_garch_path(params, eps, burn_in=burn_in)


class TestGarchParams:
    def test_properties(self):
        prm = GarchParams(0.4, (0.1,), (0.5,))
        assert prm.p == 1 and prm.q == 1
        assert prm.persistence == pytest.approx(0.6)
        assert prm.unconditional_variance == pytest.approx(1.0)

    @pytest.mark.parametrize("omega, alpha, beta", [
        (0.0, 0.1, 0.5),
        (0.1, -0.1, 0.5),
        (0.1, 0.5, 0.6),
        (float("nan"), 0.1, 0.1),
    ])
    def test_rejects_invalid(self, omega, alpha, beta):
        with pytest.raises(ValueError):
            GarchParams(omega, (alpha,), (beta,))

    def test_round_trip_array(self):
        prm = GarchParams(0.1, (0.1, 0.2), (0.1, 0.2))
        assert GarchParams.from_array(prm.as_array(), 2, 2) == prm

    def test_clipped_lands_in_box(self):
        prm = GarchParams.__new__(GarchParams)
        object.__setattr__(prm, "omega", 0.0)
        object.__setattr__(prm, "alpha", (0.7,))
        object.__setattr__(prm, "beta", (0.6,))
        fixed = prm.clipped()
        assert fixed.omega >= 1e-6
        assert fixed.persistence <= 0.999 + 1e-12


class TestSimulate:
    def test_constant_variance_without_dynamics(self):
        path = simulate(GarchParams(0.4, (0.0,), (0.0,)), 200, seed=1)
        np.testing.assert_allclose(path.condvar, 0.4)

    @pytest.mark.slow
    @pytest.mark.parametrize("params", [(0.4, 0.1, 0.5), (0.1, 0.1, 0.8)])
    def test_sample_variance_matches_unconditional(self, params):
        prm = GarchParams(params[0], (params[1],), (params[2],))
        path = simulate(prm, 100_000, seed=5)
        assert np.var(path.values) == pytest.approx(1.0, rel=0.05)

    def test_burn_in_and_length(self):
        path = simulate(GarchParams(0.1, (0.1,), (0.8,)), 300, seed=2, burn_in=50)
        assert len(path) == 300
        assert path.condvar.shape == (300,)

    def test_piecewise_schedule_switches_after_break(self):
        a, b = GarchParams(0.4, (0.1,), (0.5,)), GarchParams(0.8, (0.1,), (0.5,))
        sched = piecewise_schedule([a, b], [3], 5)
        assert sched == [a, a, a, b, b]

    def test_schedule_length_mismatch(self):
        with pytest.raises(ValueError):
            simulate_garch_path([GarchParams(0.1)] * 3, np.zeros(10), burn_in=0)

    def test_deterministic(self):
        prm = GarchParams(0.1, (0.1,), (0.8,))
        np.testing.assert_array_equal(simulate(prm, 100, 3).values, simulate(prm, 100, 3).values)


class TestFilter:
    def test_hand_recursion(self):
        h = filter_condvar([1.0, 2.0], GarchParams(0.5, (0.5,), (0.0,)))
        np.testing.assert_allclose(h, [0.625, 1.0])

    def test_constant_without_dynamics(self):
        h = filter_condvar(np.random.default_rng(0).standard_normal(50), GarchParams(0.7, (0.0,), (0.0,)))
        np.testing.assert_allclose(h, 0.7)

    def test_matches_naive_loop(self, rng):
        r = rng.standard_normal(400)
        h = filter_condvar(r, GarchParams(0.2, (0.15,), (0.7,)))
        np.testing.assert_allclose(h, naive_filter(r, 0.2, 0.15, 0.7, np.var(r)), rtol=1e-12)

    def test_batch_agrees_with_single(self, rng):
        r = rng.standard_normal((3, 200))
        omega = np.array([0.1, 0.2, 0.3])
        alpha = np.array([[0.1], [0.2], [0.05]])
        beta = np.array([[0.8], [0.5], [0.9]])
        batch = filter_condvar_batch(r, omega, alpha, beta)
        for i in range(3):
            single = filter_condvar(r[i], GarchParams(omega[i], tuple(alpha[i]), tuple(beta[i])))
            np.testing.assert_allclose(batch[i], single, rtol=1e-12)

    def test_forgets_initial_condition(self):
        prm = GarchParams(0.1, (0.1,), (0.8,))
        path = simulate(prm, 2000, seed=11)
        gap = np.abs(filter_condvar(path, prm) - path.condvar)
        assert gap[-100:].max() < 1e-8 * max(1.0, gap[0])
        assert gap[-100:].max() < gap[:5].max() + 1e-15

    @given(st.lists(st.floats(-50, 50), min_size=2, max_size=60),
           st.floats(1e-6, 5), st.floats(0, 0.5), st.floats(0, 0.49))
    def test_strictly_positive(self, values, omega, alpha, beta):
        h = filter_condvar(np.array(values), GarchParams(omega, (alpha,), (beta,)))
        assert np.all(h > 0)


class TestLoglik:
    def test_hand_value(self):
        ll = qmle_loglik([1.0, 2.0], GarchParams(0.5, (0.5,), (0.0,)))
        expected = -0.5 * ((math.log(0.625) + 1 / 0.625) + (0.0 + 4.0))
        assert ll == pytest.approx(expected, abs=1e-12)
        assert ll == pytest.approx(-2.5650, abs=5e-4)

    def test_iid_case_maximised_at_mean_square(self, rng):
        r = 1.7 * rng.standard_normal(500)
        best = float(np.mean(r * r))
        grid = best * np.array([0.8, 0.9, 0.99, 1.01, 1.1, 1.25])
        ll_best = qmle_loglik(r, GarchParams(best, (0.0,), (0.0,)))
        assert all(qmle_loglik(r, GarchParams(w, (0.0,), (0.0,))) < ll_best for w in grid)

    def test_summation_order(self, rng):
        r = rng.standard_normal(1000)
        prm = GarchParams(0.1, (0.1,), (0.8,))
        h = filter_condvar(r, prm)
        terms = np.log(h) + r * r / h
        assert qmle_loglik(r, prm) == pytest.approx(-0.5 * math.fsum(terms[::-1]), abs=1e-9)

    @pytest.mark.slow
    def test_true_parameters_dominate(self):
        true = GarchParams(0.1, (0.1,), (0.8,))
        worse = GarchParams(0.1, (0.1,), (0.89,))
        wins = 0
        for seed in range(50):
            path = simulate(true, 5000, seed=seed)
            wins += qmle_loglik(path, true) >= qmle_loglik(path, worse)
        assert wins >= 48


class TestFit:
    @pytest.mark.slow
    def test_recovers_parameters(self):
        path = simulate(GarchParams(0.1, (0.1,), (0.8,)), 20_000, seed=3)
        fit = fit_garch(path)
        np.testing.assert_allclose(fit.params.as_array(), [0.1, 0.1, 0.8], atol=0.05)

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", [0, 4])
    def test_white_noise(self, seed):
        # With alpha = 0 the GARCH coefficient is not identified, so only
        # the ARCH weight, the variance level and the likelihood gain over
        # the constant-variance model are pinned down.
        r = 2.0 * np.random.default_rng(seed).standard_normal(20_000)
        fit = fit_garch(r)
        flat = GarchParams(float(np.mean(r * r)), (0.0,), (0.0,))
        assert fit.params.alpha[0] <= 0.02
        assert fit.params.unconditional_variance == pytest.approx(4.0, rel=0.05)
        gain = 2 * (fit.loglik - qmle_loglik(r, flat))
        assert -1e-6 <= gain < 5.99
        if fit.params.persistence <= 0.1:
            assert fit.params.omega == pytest.approx(4.0, rel=0.1)

    def test_constant_variance_boundary_is_reachable(self):
        r = 2.0 * np.random.default_rng(0).standard_normal(20_000)
        fit = fit_garch(r)
        assert fit.params.persistence == 0.0
        assert fit.params.omega == pytest.approx(float(np.mean(r * r)))

    def test_zero_series_rejected(self):
        with pytest.raises(ValueError, match="zero variance"):
            fit_garch(np.zeros(500))

    def test_too_short(self):
        with pytest.raises(ValueError):
            fit_garch(np.ones(10))

    def test_deterministic(self):
        r = simulate(GarchParams(0.4, (0.1,), (0.5,)), 1000, seed=8)
        assert fit_garch(r).params == fit_garch(r).params

    def test_scale_equivariance(self):
        r = simulate(GarchParams(0.1, (0.1,), (0.8,)), 3000, seed=9).values
        base = fit_garch(r).params
        scaled = fit_garch(3.0 * r).params
        assert scaled.omega == pytest.approx(9.0 * base.omega, rel=1e-3)
        np.testing.assert_allclose(scaled.alpha + scaled.beta, base.alpha + base.beta, atol=1e-3)

    def test_fit_outputs_consistent(self):
        r = simulate(GarchParams(0.1, (0.1,), (0.8,)), 1000, seed=10)
        fit = fit_garch(r)
        np.testing.assert_allclose(fit.fitted_condvar, filter_condvar(r, fit.params))
        np.testing.assert_allclose(fit.residuals, r.values / np.sqrt(fit.fitted_condvar))
        assert fit.loglik == pytest.approx(qmle_loglik(r, fit.params))

    def test_garch22_order(self):
        prm = GarchParams(0.1, (0.1, 0.2), (0.1, 0.2))
        fit = fit_garch(simulate(prm, 4000, seed=12), order=(2, 2))
        assert fit.params.p == 2 and fit.params.q == 2
        assert fit.params.persistence <= 0.999


def test_returns_series_rejects_nan():
    with pytest.raises(ValueError):
        ReturnsSeries([1.0, float("nan")])
