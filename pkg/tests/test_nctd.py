import numpy as np
import pytest

from tracenorm_tucker import SolverConfig, SynthSpec, gen_tucker, hooi, nctd_decompose, rse
from tracenorm_tucker.nctd import (
    NctdState,
    factor_target,
    h_value,
    init_state,
    project,
    split_objective,
    update_aux,
    update_core,
    update_factor,
)
from tracenorm_tucker.tensor import kron_chain, multi_mode_product, refold, unfold

from conftest import tucker_tensor
from oracles import central_gradient, random_orthonormal


def _trace_norm(a):
    return np.linalg.svd(a, compute_uv=False).sum()


def _random_state(rng, dims, ranks, mu=0.5):
    state = init_state(dims, ranks, mu, rng)
    state.core = rng.standard_normal(ranks)
    for n in range(len(ranks)):
        state.aux[n] = rng.standard_normal(state.aux[n].shape)
        state.duals[n] = rng.standard_normal(state.duals[n].shape)
    return state


class TestCoreTraceNormIdentity:
    def test_random_models(self, rng):
        for _ in range(30):
            order = rng.integers(3, 5)
            ranks = tuple(rng.integers(1, 9, size=order))
            dims = tuple(r + rng.integers(0, 4) for r in ranks)
            x, core, _ = tucker_tensor(rng, dims, ranks)
            for n in range(order):
                g = _trace_norm(unfold(core, n))
                assert abs(_trace_norm(unfold(x, n)) - g) <= 1e-8 * (1 + g)


class TestUpdateCore:
    def test_small_mu_gives_projection(self, rng):
        t = rng.standard_normal((5, 4, 6))
        state = _random_state(rng, t.shape, (2, 3, 2), mu=1e-12)
        # the duals enter as mu * (Y / mu), so the limit needs them at zero
        state.duals = [np.zeros_like(y) for y in state.duals]
        np.testing.assert_allclose(update_core(state, SolverConfig(lam=1.0), t), project(t, state.factors), atol=1e-9)

    def test_half_projection(self, rng):
        t = rng.standard_normal((5, 4, 6))
        state = init_state(t.shape, (2, 3, 2), 2.0, rng)
        got = update_core(state, SolverConfig(lam=6.0), t)
        np.testing.assert_allclose(got, 0.5 * project(t, state.factors), rtol=1e-14)

    @pytest.mark.parametrize("seed", range(5))
    def test_stationarity(self, seed):
        rng = np.random.default_rng(seed)
        t = rng.standard_normal((4, 5, 3))
        state = _random_state(rng, t.shape, (2, 3, 2), mu=rng.uniform(0.1, 3))
        cfg = SolverConfig(lam=rng.uniform(1, 100))
        mu = state.mu

        def objective(core):
            x = multi_mode_product(core, state.factors)
            val = 0.5 * cfg.lam * np.sum((t - x) ** 2)
            for n in range(3):
                d = unfold(core, n) - state.aux[n]
                val += np.sum(state.duals[n] * d) + 0.5 * mu * np.sum(d**2)
            return val

        g = update_core(state, cfg, t)
        scale = cfg.lam * np.linalg.norm(t) + sum(np.linalg.norm(y) + mu * np.linalg.norm(a) for y, a in zip(state.duals, state.aux))
        assert np.linalg.norm(central_gradient(objective, g)) <= 1e-6 * scale


class TestUpdateFactor:
    def test_kronecker_free_matches_explicit(self, rng):
        t = rng.standard_normal((3, 3, 3))
        state = _random_state(rng, t.shape, (2, 2, 2))
        for n in range(3):
            w = unfold(state.core, n) @ kron_chain(state.factors, skip=n).T
            explicit = unfold(t, n) @ w.T
            np.testing.assert_allclose(factor_target(t, state.core, state.factors, n), explicit, atol=1e-12)

    def test_fixed_point_keeps_h(self, rng):
        t, core, factors = tucker_tensor(rng, (6, 5, 7), (2, 3, 2))
        state = NctdState(core, list(factors), [], [], 1.0)
        before = h_value(t, core, factors)
        for n in range(3):
            new = list(factors)
            new[n] = update_factor(state, t, n)
            assert h_value(t, core, new) == pytest.approx(before, abs=1e-10 * (1 + abs(before)))

    def test_ascent(self, rng):
        t = rng.standard_normal((6, 5, 7))
        core = np.zeros((3, 3, 3))
        for i in range(3):
            core[i, i, i] = 3.0 - i
        state = NctdState(core, [random_orthonormal(rng, d, 3) for d in t.shape], [], [], 1.0)
        for n in range(3):
            before = h_value(t, core, state.factors)
            state.factors[n] = update_factor(state, t, n)
            assert h_value(t, core, state.factors) >= before - 1e-12
            np.testing.assert_allclose(state.factors[n].T @ state.factors[n], np.eye(3), atol=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_objective_drop_matches_h_gain(self, seed):
        # for fixed core/aux/duals the split objective moves by -lam * delta h
        rng = np.random.default_rng(seed)
        t = rng.standard_normal((6, 5, 4))
        state = _random_state(rng, t.shape, (3, 2, 2))
        cfg = SolverConfig(lam=rng.uniform(1, 100))
        mode = seed % 3
        h0 = h_value(t, state.core, state.factors)
        o0 = split_objective(state, cfg, t)
        state.factors[mode] = update_factor(state, t, mode)
        d_obj = split_objective(state, cfg, t) - o0
        d_h = h_value(t, state.core, state.factors) - h0
        # doubled objective (no 1/2 factors) moves by exactly -2 lam dh
        assert abs(2 * d_obj + 2 * cfg.lam * d_h) <= 1e-8 * abs(2 * d_obj)


class TestUpdateAux:
    def test_zero(self):
        state = init_state((4, 4, 4), (2, 2, 2), 1.0, 0)
        assert np.all(update_aux(state, SolverConfig(), 0) == 0)

    def test_negligible_threshold(self, rng):
        state = _random_state(rng, (4, 4, 4), (2, 3, 2), mu=1e9)
        avg = (state.mu * unfold(state.core, 1) + state.duals[1] + 1e9 * state.aux[1]) / (state.mu + 1e9)
        np.testing.assert_allclose(update_aux(state, SolverConfig(), 1, tau=1e9), avg, atol=1e-8)

    @pytest.mark.parametrize("mode", [0, 1, 2])
    def test_objective_dominance(self, rng, mode):
        state = _random_state(rng, (5, 5, 5), (2, 3, 4))
        mu, tau, w = state.mu, 0.3, 0.7
        g_n = unfold(state.core, mode)

        def objective(z):
            d = g_n - z + state.duals[mode] / mu
            return w * _trace_norm(z) + 0.5 * mu * np.sum(d**2) + 0.5 * tau * np.sum((z - state.aux[mode]) ** 2)

        z = update_aux(state, SolverConfig(), mode, tau=tau, weight=w)
        best = objective(z)
        for scale in (1e-4, 1e-2, 1.0):
            for _ in range(170):
                assert best <= objective(z + scale * rng.standard_normal(z.shape)) + 1e-12


class TestSolve:
    def test_zero_tensor(self):
        res = nctd_decompose(np.zeros((5, 4, 6)), (2, 2, 2))
        assert np.all(res.model.core == 0)
        assert res.report.converged and res.report.n_iter == 1

    def test_overshoot_recovery(self):
        clean, noisy, _ = gen_tucker(SynthSpec((30, 30, 30), 5, seed=2))
        res = nctd_decompose(noisy, (6, 6, 6))
        assert res.report.converged
        assert rse(res.x, clean) <= 1e-2

    def test_orthonormal_every_iteration(self):
        _, t, _ = gen_tucker(SynthSpec((12, 10, 8), 3, 0.02, seed=3))
        for k in range(1, 6):
            res = nctd_decompose(t, (4, 4, 4), SolverConfig.nctd_defaults(max_iter=k))
            assert res.model.orthonormality_error() <= 1e-8

    def test_deterministic(self):
        _, t, _ = gen_tucker(SynthSpec((12, 12, 12), 3, 0.02, seed=4))
        a = nctd_decompose(t, (4, 4, 4), seed=11)
        b = nctd_decompose(t, (4, 4, 4), seed=11)
        assert np.array_equal(a.report.residuals(), b.report.residuals())
        assert np.array_equal(a.model.core, b.model.core)

    def test_parallel_matches_serial(self):
        _, t, _ = gen_tucker(SynthSpec((12, 12, 12), 3, 0.02, seed=5))
        a = nctd_decompose(t, (4, 4, 4))
        b = nctd_decompose(t, (4, 4, 4), SolverConfig.nctd_defaults(n_jobs=3))
        assert np.array_equal(a.model.core, b.model.core)

    def test_max_iter_returns_last_iterate(self):
        _, t, _ = gen_tucker(SynthSpec((10, 10, 10), 3, 0.02, seed=6))
        res = nctd_decompose(t, (4, 4, 4), SolverConfig.nctd_defaults(max_iter=4))
        assert not res.report.converged and res.report.n_iter == 4
        assert res.state.iter == 4

    def test_inner_sweeps(self):
        clean, t, _ = gen_tucker(SynthSpec((15, 15, 15), 3, 0.0, seed=7))
        res = nctd_decompose(t, (4, 4, 4), SolverConfig.nctd_defaults(inner_sweeps=3))
        assert res.report.converged and rse(res.x, clean) <= 1e-2

    def test_rank_out_of_range(self):
        with pytest.raises(ValueError):
            nctd_decompose(np.ones((3, 3, 3)), (4, 2, 2))

    def test_svds_only_on_small_matrices(self, monkeypatch):
        dims, ranks = (20, 18, 16), (4, 3, 5)
        _, t, _ = gen_tucker(SynthSpec(dims, 3, 0.02, seed=8))
        allowed = set()
        for n in range(3):
            allowed.add((ranks[n], int(np.prod(ranks)) // ranks[n]))
            allowed.add((dims[n], ranks[n]))
        seen = []
        real_svd = np.linalg.svd

        def recording_svd(a, *args, **kwargs):
            seen.append(np.shape(a))
            return real_svd(a, *args, **kwargs)

        monkeypatch.setattr(np.linalg, "svd", recording_svd)
        nctd_decompose(t, ranks, SolverConfig.nctd_defaults(max_iter=5))
        assert seen
        assert set(seen) <= allowed

    def test_beats_hooi_noiseless_overshoot(self):
        # trace-norm shrinkage trims the extra rank that HOOI has to fit with noise
        clean, noisy, _ = gen_tucker(SynthSpec((20, 20, 20), 3, 0.0, seed=9))
        res = nctd_decompose(noisy, (5, 5, 5))
        assert rse(res.x, clean) <= 1e-3
        assert rse(hooi(noisy, (5, 5, 5)).reconstruct(), clean) <= 1e-10
