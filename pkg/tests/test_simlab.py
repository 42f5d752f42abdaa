import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from garchcp.garch_core import OMEGA_MIN, PERSISTENCE_MAX, GarchParams
from garchcp.simlab import (
    MODELS,
    REGIMES,
    ScenarioSpec,
    ar1_corr,
    cyclic_swap,
    gen_m1,
    gen_m2,
    gen_m3,
    gen_m4,
    generate,
)


def uncond(vec):
    vec = np.asarray(vec, dtype=float)
    return vec[0] / (1.0 - vec[1:].sum())


class TestAr1Corr:
    def test_single(self):
        np.testing.assert_array_equal(ar1_corr(-0.75, 1), [[1.0]])

    def test_three(self):
        expected = [[1, -0.75, 0.5625], [-0.75, 1, -0.75], [0.5625, -0.75, 1]]
        np.testing.assert_allclose(ar1_corr(-0.75, 3), expected, rtol=0, atol=1e-15)

    def test_cholesky_large(self):
        L = np.linalg.cholesky(ar1_corr(-0.75, 100))
        assert np.all(np.diag(L) > 0)

    @pytest.mark.parametrize("rho", [1.0, -1.0, 1.5])
    def test_rejects_unit_rho(self, rho):
        with pytest.raises(ValueError):
            ar1_corr(rho, 3)


class TestScenarioSpec:
    def test_unknown_model(self):
        with pytest.raises(ValueError, match="unknown model"):
            ScenarioSpec("M9.9")

    @pytest.mark.parametrize("sparsity", [0.0, 1.2, -0.5])
    def test_bad_sparsity(self, sparsity):
        with pytest.raises(ValueError):
            ScenarioSpec("M1.1", sparsity=sparsity)

    @pytest.mark.parametrize("eta", [(0.5, 0.3), (0.0,), (0.4, 0.4), (1.0,)])
    def test_bad_eta(self, eta):
        with pytest.raises(ValueError):
            ScenarioSpec("M2.1", eta=eta)

    def test_default_lengths(self):
        assert ScenarioSpec("M0.1").T == 1000
        assert ScenarioSpec("M1.3").T == 1000
        assert ScenarioSpec("M2.1").T == 500

    @pytest.mark.parametrize("sparsity, N, expected", [(0.25, 100, 25), (0.25, 10, 2), (0.75, 50, 37), (1.0, 7, 7)])
    def test_n_affected(self, sparsity, N, expected):
        assert ScenarioSpec("M1.1", N=N, sparsity=sparsity).n_affected == expected

    @pytest.mark.parametrize("model, T, expected", [
        ("M0.2", 1000, ()),
        ("M1.6", 1000, (500,)),
        ("M1.6", 999, (499,)),
        ("M2.1", 500, (125, 300)),
        ("M2.2", 333, (83, 199)),
        ("M4.1", 500, (125, 300)),
    ])
    def test_break_locations(self, model, T, expected):
        assert ScenarioSpec(model, T=T).break_locations() == expected

    def test_late_break(self):
        assert ScenarioSpec("M1.2", T=1000, eta=(0.9,)).break_locations() == (900,)

    def test_every_model_has_valid_regimes(self):
        for model in MODELS:
            for vec in REGIMES[model]:
                if vec is not None:
                    assert uncond(vec) > 0


class TestGarchModels:
    def test_m0_shared_params_without_jitter(self):
        lp = generate(ScenarioSpec("M0.1", N=5, T=200, jitter=0.0, seed=3))
        assert lp.truth == ()
        for prm in lp.params[0]:
            assert prm == GarchParams(0.4, (0.1,), (0.5,))

    def test_m14_variance_drop(self):
        before, after = REGIMES["M1.4"]
        assert uncond(before) == pytest.approx(1.0)
        assert uncond(after) == pytest.approx(0.2)

    def test_m14_realised_variance_drop(self):
        lp = generate(ScenarioSpec("M1.4", N=20, T=4000, jitter=0.0, seed=11))
        pre = lp.returns[:2000].var()
        post = lp.returns[2000:].var()
        assert pre == pytest.approx(1.0, rel=0.2)
        assert post == pytest.approx(0.2, rel=0.1)

    def test_affected_set_size(self):
        lp = generate(ScenarioSpec("M1.6", N=100, T=100, sparsity=0.25, seed=2))
        s1 = lp.affected[0]
        assert len(s1) == 25 == len(set(s1))

    def test_change_only_in_s1(self):
        lp = gen_m1(ScenarioSpec("M1.6", N=12, T=100, sparsity=0.5, seed=4))
        pre, post = lp.params
        changed = {i for i in range(12) if pre[i] != post[i]}
        assert changed == set(lp.affected[0])

    def test_jitter_inside_box(self):
        spec = ScenarioSpec("M1.4", N=200, T=50, jitter=0.05, seed=9)
        lp = generate(spec)
        for regime, base in zip(lp.params[:2], REGIMES["M1.4"]):
            for prm in regime:
                assert prm.omega >= OMEGA_MIN
                assert min(prm.alpha + prm.beta) >= 0
                assert prm.persistence <= PERSISTENCE_MAX + 1e-12
                assert abs(prm.omega - base[0]) <= spec.jitter

    def test_jitter_clipped_at_boundary(self):
        lp = generate(ScenarioSpec("M3.2.2", N=200, T=50, jitter=0.05, seed=1))
        assert all(min(prm.alpha) >= 0 for prm in lp.params[1])

    def test_t10_innovations(self):
        lp = generate(ScenarioSpec("M0.2", N=4, T=5000, innovation="t10", seed=8))
        assert lp.returns.var() == pytest.approx(1.0, rel=0.15)

    def test_t10_with_correlation_break_rejected(self):
        with pytest.raises(ValueError, match="t10"):
            generate(ScenarioSpec("M2.1", N=4, innovation="t10"))

    def test_wrong_family(self):
        with pytest.raises(ValueError):
            gen_m1(ScenarioSpec("M2.1"))
        with pytest.raises(ValueError):
            gen_m3(ScenarioSpec("M2.1"))
        with pytest.raises(ValueError):
            gen_m4(ScenarioSpec("M1.1"))


class TestCorrelationBreak:
    def test_truth_without_swap(self):
        lp = gen_m2(ScenarioSpec("M2.1", N=1, T=200, seed=0))
        assert lp.truth == (50,)
        assert lp.affected[1] == (0,)

    def test_noop_override(self):
        lp = gen_m2(ScenarioSpec("M2.1", N=1, T=200, seed=0, count_noop_breaks=True))
        assert lp.truth == (50, 120)

    def test_m23_variance_unchanged(self):
        before, after = REGIMES["M2.3"]
        assert uncond(before) == pytest.approx(0.25)
        assert uncond(after) == pytest.approx(0.25)

    @pytest.mark.parametrize("seed", range(5))
    def test_swapped_corr_valid(self, seed):
        lp = gen_m2(ScenarioSpec("M2.2", N=15, T=100, sparsity=0.5, seed=seed))
        corr_after = lp.params[3]
        np.testing.assert_array_equal(corr_after, corr_after.T)
        np.testing.assert_array_equal(np.diag(corr_after), 1.0)
        np.linalg.cholesky(corr_after)
        assert not np.array_equal(corr_after, lp.params[2])

    def test_cyclic_swap_moves_all(self, rng):
        idx = [1, 4, 6, 7]
        perm = cyclic_swap(idx, rng, 10)
        assert sorted(perm) == list(range(10))
        assert all(perm[i] != i for i in idx)
        assert all(perm[i] == i for i in set(range(10)) - set(idx))

    def test_realised_correlation_after_swap(self):
        lp = gen_m2(ScenarioSpec("M2.1", N=6, T=20000, jitter=0.0, seed=3))
        eta2 = lp.truth[-1]
        z = lp.returns[eta2:] / np.sqrt(lp.condvar[eta2:])
        np.testing.assert_allclose(np.corrcoef(z, rowvar=False), lp.params[3], atol=0.05)


class TestMisspecifiedOrder:
    def test_m321_variance(self):
        assert uncond(REGIMES["M3.2.1"][0]) == pytest.approx(0.25)

    def test_m322_zero_alpha2(self):
        lp = gen_m3(ScenarioSpec("M3.2.2", N=3, T=100, jitter=0.0, seed=0))
        post = lp.params[1]
        assert all(prm.alpha == (0.1, 0.0) for prm in post)
        assert lp.spec.order == (2, 2)

    def test_m31_detector_order(self):
        spec = ScenarioSpec("M3.1.1")
        assert spec.order == (1, 1)
        assert spec.detector_order == (2, 2)

    def test_m31_same_data_as_m2(self):
        a = generate(ScenarioSpec("M3.1.2", N=4, T=120, seed=6)).returns
        b = generate(ScenarioSpec("M2.2", N=4, T=120, seed=6)).returns
        np.testing.assert_array_equal(a, b)

    @pytest.mark.slow
    def test_finite_over_seeds(self):
        for seed in range(100):
            lp = generate(ScenarioSpec("M3.2.1", N=5, T=500, seed=seed))
            assert np.all(np.isfinite(lp.returns))


class TestFactorModel:
    def test_identity_loadings(self):
        lp = gen_m4(ScenarioSpec("M4.1", N=3, T=4000, seed=2), loadings=np.eye(3))
        eta2 = lp.truth[-1]
        z = lp.returns[:eta2] / np.sqrt(lp.condvar[:eta2])
        np.testing.assert_allclose((z**2).mean(axis=0), 1.0, rtol=0.1)
        np.testing.assert_allclose(np.corrcoef(z, rowvar=False), np.eye(3), atol=0.06)

    def test_conditional_covariance(self):
        W = np.array([[1.0, 0.5, 0.2], [0.3, 1.5, 0.4], [0.8, 0.1, 1.2]])
        t = 40
        emp = np.zeros((3, 3))
        model = np.zeros((3, 3))
        for seed in range(3000):
            lp = gen_m4(ScenarioSpec("M4.1", N=3, T=100, seed=seed, burn_in=50), loadings=W)
            r = lp.returns[t]
            emp += np.outer(r, r)
            model += W @ np.diag(lp.condvar[t]) @ W.T
        np.testing.assert_allclose(np.diag(emp), np.diag(model), rtol=0.10)
        np.testing.assert_allclose(emp, model, rtol=0.10, atol=0.10 * np.diag(model).min())

    def test_identical_rows_swap(self):
        W = np.ones((4, 4))
        lp = gen_m4(ScenarioSpec("M4.2", N=4, T=100, seed=1), loadings=W)
        assert lp.truth == (25,)
        np.testing.assert_array_equal(lp.params[2], lp.params[3])
        flagged = gen_m4(ScenarioSpec("M4.2", N=4, T=100, seed=1, count_noop_breaks=True), loadings=W)
        assert flagged.truth == (25, 60)
        np.testing.assert_array_equal(flagged.returns, lp.returns)

    def test_random_loadings_swap_rows(self):
        lp = gen_m4(ScenarioSpec("M4.1", N=5, T=100, seed=3))
        W, W_after = lp.params[2], lp.params[3]
        assert sorted(map(tuple, W)) == sorted(map(tuple, W_after))
        assert lp.truth == (25, 60)


class TestDeterminism:
    @pytest.mark.parametrize("model", ["M0.1", "M1.6", "M2.2", "M3.2.1", "M4.2"])
    def test_same_seed(self, model):
        a = generate(ScenarioSpec(model, N=4, T=120, seed=13))
        b = generate(ScenarioSpec(model, N=4, T=120, seed=13))
        np.testing.assert_array_equal(a.returns, b.returns)
        assert a.truth == b.truth
        assert a.affected == b.affected
        c = generate(ScenarioSpec(model, N=4, T=120, seed=14))
        assert not np.array_equal(a.returns, c.returns)

    @settings(max_examples=30, deadline=None)
    @given(model=st.sampled_from(MODELS), T=st.integers(20, 400), seed=st.integers(0, 2**16))
    def test_truth_matches_floors(self, model, T, seed):
        spec = ScenarioSpec(model, N=3, T=T, seed=seed, count_noop_breaks=True)
        lp = generate(spec)
        fam = spec.family
        expected = {"M0": (), "M1": (T // 2,)}.get(fam, (T // 4, 3 * T // 5))
        assert lp.truth == expected
        assert lp.returns.shape == (T, 3)
