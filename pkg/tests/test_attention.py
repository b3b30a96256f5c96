import numpy as np
import pytest

from autotag.attention import (attention_backward, attention_context,
                               attention_forward, attention_scores,
                               attention_weights, init_attention, sigmoid)

from conftest import fd_gradient, rel_error


def scalar_loop_scores(params, h_prev, ll_items, hl_items):
    """Element-by-element evaluation of the score expressions."""
    s = len(params.gamma)

    def score(item, w_item):
        total = 0.0
        for k in range(s):
            pre = params.bias[k]
            for a in range(len(h_prev)):
                pre += params.w_hidden[k, a] * h_prev[a]
            for b in range(len(item)):
                pre += w_item[k, b] * item[b]
            total += params.gamma[k] * (1.0 / (1.0 + np.exp(-pre)))
        return total

    zeta = [score(item, params.w_low) for item in ll_items]
    rho = [score(item, params.w_high) for item in hl_items]
    return np.array(zeta), np.array(rho)


def make_fixture(seed=0, n_ll=3, n_hl=2):
    rng = np.random.default_rng(seed)
    params = init_attention(rng, hidden_dim=5, ll_item_len=6, hl_item_len=4,
                            score_dim=4, context_dim=7)
    params.bias[:] = rng.uniform(-0.1, 0.1, 4)
    h = rng.standard_normal(5)
    ll = rng.standard_normal((n_ll, 6))
    hl = rng.standard_normal((n_hl, 4))
    return params, h, ll, hl


class TestScores:
    def test_zero_gamma_zero_scores(self):
        params, h, ll, hl = make_fixture()
        params.gamma[:] = 0.0
        zeta, rho = attention_scores(params, h, ll, hl)
        np.testing.assert_allclose(zeta, 0.0)
        np.testing.assert_allclose(rho, 0.0)

    def test_all_zero_params_ones_gamma(self):
        params, h, ll, hl = make_fixture()
        for arr in (params.w_hidden, params.w_low, params.w_high, params.bias):
            arr[:] = 0.0
        params.gamma[:] = 1.0
        zeta, rho = attention_scores(params, h, ll, hl)
        # every sigmoid is 0.5, summed over the score dimension
        np.testing.assert_allclose(zeta, 0.5 * len(params.gamma))
        np.testing.assert_allclose(rho, 0.5 * len(params.gamma))

    def test_matches_scalar_loop(self):
        params, h, ll, hl = make_fixture(seed=3)
        zeta, rho = attention_scores(params, h, ll, hl)
        ref_zeta, ref_rho = scalar_loop_scores(params, h, ll, hl)
        np.testing.assert_allclose(zeta, ref_zeta, atol=1e-12)
        np.testing.assert_allclose(rho, ref_rho, atol=1e-12)


class TestWeights:
    def test_singletons_normalized(self):
        gammas, xis = attention_weights([1.3], [0.2], tau=0.5)
        np.testing.assert_allclose(gammas, [0.5])
        np.testing.assert_allclose(xis, [0.5])
        assert gammas.sum() + xis.sum() == pytest.approx(1.0)

    def test_singletons_literal(self):
        gammas, xis = attention_weights([1.3], [0.2], tau=0.5, mode="literal")
        np.testing.assert_allclose(gammas, [0.5])
        np.testing.assert_allclose(xis, [0.0])
        assert gammas.sum() + xis.sum() == pytest.approx(0.5)

    def test_equal_scores_split_evenly(self):
        gammas, _ = attention_weights([0.7, 0.7], [0.1], tau=0.6)
        np.testing.assert_allclose(gammas, [0.3, 0.3])

    def test_literal_rejects_large_tau(self):
        with pytest.raises(ValueError, match="tau"):
            attention_weights([0.0], [0.0], tau=0.6, mode="literal")

    def test_sum_property_random(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            z = rng.standard_normal(rng.integers(1, 6))
            r = rng.standard_normal(rng.integers(1, 6))
            tau = float(rng.uniform(0, 1))
            g, x = attention_weights(z, r, tau)
            assert abs(g.sum() + x.sum() - 1.0) < 1e-9
            assert np.all(g >= 0) and np.all(x >= 0)
            tau_l = float(rng.uniform(0, 0.5))
            g, x = attention_weights(z, r, tau_l, mode="literal")
            assert abs(g.sum() + x.sum() - 0.5) < 1e-9
            assert np.all(g >= 0) and np.all(x >= 0)

    def test_softmax_shift_invariance(self):
        rng = np.random.default_rng(1)
        z = rng.standard_normal(4)
        r = rng.standard_normal(3)
        g1, x1 = attention_weights(z, r, 0.4)
        g2, x2 = attention_weights(z + 123.456, r, 0.4)
        np.testing.assert_allclose(g1, g2, atol=1e-12)
        np.testing.assert_allclose(x1, x2, atol=1e-12)


class TestContext:
    def test_one_hot_selects_item(self):
        items = np.arange(12.0).reshape(3, 4)
        other = np.ones((2, 4))
        ctx = attention_context([0.0, 1.0, 0.0], [0.0, 0.0], items, other)
        np.testing.assert_allclose(ctx, items[1])

    def test_zero_weights_zero_vector(self):
        ctx = attention_context([0.0], [0.0], np.ones((1, 3)), np.ones((1, 3)))
        np.testing.assert_allclose(ctx, 0.0)

    def test_matches_scalar_loop(self):
        rng = np.random.default_rng(2)
        ll = rng.standard_normal((3, 5))
        hl = rng.standard_normal((2, 5))
        g = rng.random(3)
        x = rng.random(2)
        ref = np.zeros(5)
        for i in range(3):
            for d in range(5):
                ref[d] += g[i] * ll[i, d]
        for j in range(2):
            for d in range(5):
                ref[d] += x[j] * hl[j, d]
        np.testing.assert_allclose(attention_context(g, x, ll, hl), ref,
                                   atol=1e-12)

    def test_count_mismatch(self):
        with pytest.raises(ValueError):
            attention_context([1.0], [1.0, 2.0], np.ones((1, 2)), np.ones((1, 2)))


class TestForwardBackward:
    @pytest.mark.parametrize("mode,tau_logit", [("normalized", 0.3),
                                                ("literal", -0.4)])
    def test_gradients_match_finite_differences(self, mode, tau_logit):
        params, h, ll, hl = make_fixture(seed=11)
        params.tau_logit += tau_logit
        probe = np.random.default_rng(5).standard_normal(7)

        def loss():
            ctx, _ = attention_forward(params, h, ll, hl, mode)
            return float(ctx @ probe)

        _, cache = attention_forward(params, h, ll, hl, mode)
        grads, d_h = attention_backward(params, cache, probe)
        for name, arr in params.named(""):
            key = name.lstrip(".")
            assert rel_error(fd_gradient(loss, arr), grads[key]) < 1e-4, key
        assert rel_error(fd_gradient(loss, h), d_h) < 1e-4

    def test_normalized_context_sums_tau_parts(self):
        params, h, ll, hl = make_fixture(seed=6)
        ctx, cache = attention_forward(params, h, ll, hl)
        assert abs(cache["gammas"].sum() + cache["xis"].sum() - 1.0) < 1e-9
        manual = attention_context(cache["gammas"], cache["xis"],
                                   cache["proj_ll"], cache["proj_hl"])
        np.testing.assert_allclose(ctx, manual, atol=1e-12)


class TestSigmoid:
    def test_range_and_midpoint(self):
        assert sigmoid(np.array(0.0)) == 0.5
        x = np.linspace(-30, 30, 101)
        s = sigmoid(x)
        assert np.all(s > 0) and np.all(s < 1)
        assert np.all(np.diff(s) > 0)
