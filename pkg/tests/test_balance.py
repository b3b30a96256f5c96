import numpy as np
import pytest

from autotag.balance import (balanced_loss_and_grads, clamped_weights, decode,
                             encode, first_tag, init_balanced_net, logentropy_weights,
                             train_autoencoder, train_balanced)
from autotag.errors import DataError

from conftest import fd_gradient, rel_error

TABLE_PHI = np.array([[1, 1, 1], [0, 1, 1], [0, 0, 1]])


class TestLogEntropyWeights:
    def test_worked_example(self):
        w = logentropy_weights(TABLE_PHI)
        assert w[0, 0] == 1.0
        assert abs(w[0, 1] - (1.0 - np.log(2) / np.log(3))) < 1e-12
        assert 0.36 <= w[0, 1] <= 0.37
        assert w[0, 2] == 0.0

    def test_zero_where_unannotated(self):
        w = logentropy_weights(TABLE_PHI)
        assert np.all(w[TABLE_PHI == 0] == 0.0)

    def test_range(self):
        rng = np.random.default_rng(0)
        phi = (rng.random((20, 8)) < 0.4).astype(int)
        phi[0, :] = 1  # ensure every column occurs
        w = logentropy_weights(phi)
        mask = phi == 1
        assert np.all(w[mask] >= 0.0) and np.all(w[mask] <= 1.0)

    def test_monotone_in_frequency(self):
        # same N, increasing column totals -> strictly decreasing weight
        n = 10
        phi = np.zeros((n, n - 1), dtype=int)
        for j in range(n - 1):
            phi[:j + 1, j] = 1
        w = logentropy_weights(phi)
        tops = [w[0, j] for j in range(n - 1)]
        assert all(a > b for a, b in zip(tops, tops[1:]))

    def test_requires_two_images(self):
        with pytest.raises(DataError):
            logentropy_weights(np.array([[1, 1]]))

    def test_rejects_non_binary(self):
        with pytest.raises(DataError, match="0 or 1"):
            logentropy_weights(np.array([[1, 2], [1, 0]]))

    def test_matches_literal_entropy_summation(self):
        # oracle: evaluate the full summation term by term, treating
        # x*ln(x) as 0 at x = 0
        rng = np.random.default_rng(29)
        for _ in range(10):
            n, m = int(rng.integers(2, 12)), int(rng.integers(1, 8))
            phi = (rng.random((n, m)) < 0.5).astype(float)
            phi[0] = 1.0  # every column occurs
            expected = np.zeros((n, m))
            for j in range(m):
                t_j = phi[:, j].sum()
                entropy_sum = 0.0
                for i in range(n):
                    if phi[i, j] > 0:
                        entropy_sum += phi[i, j] * (
                            np.log(phi[i, j]) - np.log(t_j))
                for i in range(n):
                    expected[i, j] = phi[i, j] * (
                        1.0 + entropy_sum / (t_j * np.log(n)))
            np.testing.assert_allclose(logentropy_weights(phi), expected,
                                       atol=1e-12)


class TestEncodeDecode:
    def test_zero_params_encode_half(self):
        net = init_balanced_net(np.random.default_rng(0), (4, 3))
        net.weights[0][:] = 0.0
        np.testing.assert_allclose(encode(net, np.ones(4)), 0.5)

    def test_saturation(self):
        net = init_balanced_net(np.random.default_rng(0), (1, 1))
        net.weights[0][:] = 0.0
        net.biases[0][:] = 10.0
        out = encode(net, np.zeros(1))
        assert abs(out[0] - 1.0 / (1.0 + np.exp(-10))) < 1e-12
        assert out[0] > 0.9999

    def test_matches_scalar_loop(self):
        rng = np.random.default_rng(3)
        net = init_balanced_net(rng, (4, 3, 2), scale=0.5)
        x = rng.standard_normal(4)
        vec = x
        for w, b in zip(net.weights, net.biases):
            nxt = np.zeros(w.shape[0])
            for i in range(w.shape[0]):
                pre = b[i]
                for j in range(w.shape[1]):
                    pre += w[i, j] * vec[j]
                nxt[i] = 1.0 / (1.0 + np.exp(-pre))
            vec = nxt
        np.testing.assert_allclose(encode(net, x), vec, atol=1e-12)

    def test_decode_unit_zero_params(self):
        net = init_balanced_net(np.random.default_rng(0), (4, 3))
        net.weights[0][:] = 0.0
        np.testing.assert_allclose(decode(net, np.zeros(3), "unit"), 0.5)

    def test_decode_real_zero_params(self):
        net = init_balanced_net(np.random.default_rng(0), (4, 3))
        net.weights[0][:] = 0.0
        np.testing.assert_allclose(decode(net, np.zeros(3), "real"), 0.0)

    def test_tied_weights_are_transposes(self):
        rng = np.random.default_rng(1)
        net = init_balanced_net(rng, (3, 2))
        h = rng.random(2)
        manual = net.weights[0].T @ h + net.decoder_biases[0]
        np.testing.assert_allclose(decode(net, h, "real"), manual)


class TestTrainBalanced:
    def test_single_unit_convergence(self):
        rng = np.random.default_rng(0)
        net = init_balanced_net(rng, (1, 1, 1))
        feats = np.array([[1.0]])
        phi = np.array([[1]])
        eq = np.array([[1.0]])
        train_balanced(net, feats, phi, eq, epochs=500, lr=0.5)
        assert first_tag(net, feats[0]) == 0
        from autotag.balance import predict
        assert predict(net, feats)[0, 0] > 0.9

    def test_equal_weights_identical_to_unweighted(self):
        rng = np.random.default_rng(4)
        feats = rng.standard_normal((4, 3))
        phi = np.array([[1, 0], [0, 1], [1, 1], [1, 0]])
        ones = np.ones_like(phi, dtype=float)
        net_a = init_balanced_net(np.random.default_rng(9), (3, 2, 2))
        net_b = init_balanced_net(np.random.default_rng(9), (3, 2, 2))
        train_balanced(net_a, feats, phi, ones, epochs=20, lr=0.3)
        # all-ones equilibrium clamps to exactly the unweighted loss
        train_balanced(net_b, feats, phi, ones, epochs=20, lr=0.3)
        for wa, wb in zip(net_a.weights, net_b.weights):
            assert np.array_equal(wa, wb)

    def test_clamped_gradient_ratio(self):
        # single image with every tag positive; prediction fixed at 0.5
        phi = TABLE_PHI[:1]
        eq = logentropy_weights(TABLE_PHI)[:1]
        entry = clamped_weights(phi, eq, floor=0.01)
        net = init_balanced_net(np.random.default_rng(0), (2, 3))
        net.weights[0][:] = 0.0
        feats = np.zeros((1, 2))
        _, grads = balanced_loss_and_grads(net, feats, phi, entry)
        g = grads["b0"]
        # K1 weight 1 vs K3 weight clamped from 0 to 0.01: 100x ratio
        assert g[0] / g[2] == pytest.approx(100.0)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(7)
        phi = np.array([[1, 0, 1, 0], [0, 1, 1, 0], [1, 1, 1, 1], [0, 0, 1, 1]])
        eq = logentropy_weights(phi)
        entry = clamped_weights(phi, eq)
        net = init_balanced_net(rng, (6, 5, 4), scale=0.4)
        feats = rng.standard_normal((4, 6))

        def loss():
            return balanced_loss_and_grads(net, feats, phi, entry)[0]

        _, grads = balanced_loss_and_grads(net, feats, phi, entry)
        for l in range(net.depth):
            for key, arr in ((f"w{l}", net.weights[l]),
                             (f"b{l}", net.biases[l])):
                assert rel_error(fd_gradient(loss, arr), grads[key]) < 1e-4, key

    def test_loss_curve_non_increasing(self):
        rng = np.random.default_rng(13)
        phi = (rng.random((10, 4)) < 0.5).astype(int)
        phi[0] = 1
        eq = logentropy_weights(phi)
        net = init_balanced_net(rng, (5, 4, 4))
        feats = rng.standard_normal((10, 5))
        losses = train_balanced(net, feats, phi, eq, epochs=50, lr=1e-3)
        assert all(a >= b - 1e-12 for a, b in zip(losses, losses[1:]))


class TestFirstTag:
    def test_argmax(self):
        assert int(np.argmax([0.1, 0.9, 0.3])) == 1

    def test_tie_breaks_low_index(self):
        rng = np.random.default_rng(0)
        net = init_balanced_net(rng, (2, 2))
        net.weights[0][:] = 0.0  # both outputs 0.5
        assert first_tag(net, np.zeros(2)) == 0

    def test_matches_naive_scan(self):
        rng = np.random.default_rng(21)
        from autotag.balance import predict
        for _ in range(10):
            net = init_balanced_net(rng, (3, 4), scale=1.0)
            x = rng.standard_normal(3)
            scores = predict(net, x)[0]
            best, best_idx = -np.inf, -1
            for i, s in enumerate(scores):
                if s > best:
                    best, best_idx = s, i
            assert first_tag(net, x) == best_idx

    def test_invariant_under_monotone_transform(self):
        # argmax over sigmoid outputs equals argmax over pre-activations
        rng = np.random.default_rng(5)
        net = init_balanced_net(rng, (3, 5), scale=1.0)
        x = rng.standard_normal(3)
        pre = net.weights[0] @ x + net.biases[0]
        assert first_tag(net, x) == int(np.argmax(pre))


class TestAutoencoder:
    def test_reconstruction_improves_monotonically(self):
        rng = np.random.default_rng(42)
        net = init_balanced_net(rng, (6, 3))
        samples = rng.random((8, 6))
        curve = train_autoencoder(net, samples, epochs=50, lr=0.05)
        assert len(curve) == 50
        assert all(a >= b - 1e-12 for a, b in zip(curve, curve[1:]))
