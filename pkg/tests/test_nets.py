import math

import numpy as np
import pytest

from swarmguard import nets
from swarmguard.nets import (ACTOR_HEAD, CRITIC_HEAD, CheckpointError, Net,
                             backward, forward, forward_cached, grad,
                             load_checkpoint, save_checkpoint)


def finite_difference_grads(net, x, loss_head, raw=False, h=1e-5):
    """Central-difference oracle over every parameter."""
    d_w = [np.zeros_like(w) for w in net.weights]
    d_b = [np.zeros_like(b) for b in net.biases]
    x = np.atleast_2d(x)

    def loss_at():
        y, _ = forward_cached(net, x, raw=raw)
        return loss_head(y)[0]

    for li in range(net.n_layers):
        for idx in np.ndindex(net.weights[li].shape):
            orig = net.weights[li][idx]
            net.weights[li][idx] = orig + h
            up = loss_at()
            net.weights[li][idx] = orig - h
            down = loss_at()
            net.weights[li][idx] = orig
            d_w[li][idx] = (up - down) / (2 * h)
        for idx in range(net.biases[li].size):
            orig = net.biases[li][idx]
            net.biases[li][idx] = orig + h
            up = loss_at()
            net.biases[li][idx] = orig - h
            down = loss_at()
            net.biases[li][idx] = orig
            d_b[li][idx] = (up - down) / (2 * h)
    return d_w, d_b


def max_rel_error(analytic, numeric):
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.abs(a) + np.abs(n), 1e-8)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


class TestForward:
    def test_zero_weights(self):
        net = Net.init([3, 4, 2], ACTOR_HEAD, np.random.default_rng(0))
        for w in net.weights:
            w[:] = 0.0
        out = forward(net, np.array([1.0, -2.0, 3.0]), raw=True)
        assert np.allclose(out, 0.0)

    def test_identity_linear_layer(self):
        net = Net(layer_sizes=[3, 3], weights=[np.eye(3)],
                  biases=[np.zeros(3)], head=CRITIC_HEAD)
        x = np.array([0.5, -1.5, 2.0])
        assert np.allclose(forward(net, x), x)

    def test_pinned_regression_value(self):
        # Independent matrix arithmetic for a fixed 2-3-2 actor network.
        w1 = np.array([[0.1, -0.2, 0.3], [0.4, 0.5, -0.6]])
        b1 = np.array([0.01, 0.02, 0.03])
        w2 = np.array([[1.0, -1.0], [0.5, 0.5], [-0.25, 2.0]])
        b2 = np.array([0.1, -0.1])
        net = Net(layer_sizes=[2, 3, 2], weights=[w1, w2], biases=[b1, b2],
                  head=ACTOR_HEAD)
        x = np.array([0.7, -0.3])
        h = np.tanh(x @ w1 + b1)
        z = h @ w2 + b2
        expected = np.array([math.pi * math.tanh(z[0]),
                             1 / (1 + math.exp(-z[1]))])
        assert np.allclose(forward(net, x), expected, atol=1e-12)

    def test_shape_mismatch(self):
        net = Net.init([2, 4, 1], CRITIC_HEAD, np.random.default_rng(0))
        with pytest.raises(ValueError):
            forward(net, np.array([1.0, 2.0, 3.0]))

    def test_actor_head_bounds(self):
        rng = np.random.default_rng(1)
        net = Net.init([2, 16, 2], ACTOR_HEAD, rng)
        for w in net.weights:  # exaggerate to probe the squash
            w *= 50.0
        xs = rng.normal(size=(200, 2))
        out = forward(net, xs)
        assert np.all(np.abs(out[:, 0]) <= math.pi)
        assert np.all((out[:, 1] >= 0.0) & (out[:, 1] <= 1.0))


class TestGrad:
    def test_constant_loss_zero_grad(self):
        net = Net.init([2, 8, 1], CRITIC_HEAD, np.random.default_rng(2))
        _, d_w, d_b = grad(net, np.array([[0.3, -0.4]]),
                           lambda y: (1.0, np.zeros_like(y)))
        assert all(np.allclose(g, 0) for g in d_w + d_b)

    def test_linearity(self):
        net = Net.init([2, 8, 1], CRITIC_HEAD, np.random.default_rng(3))
        x = np.array([[0.3, -0.4], [0.1, 0.9]])

        def head(scale):
            return lambda y: (scale * float(y.sum()),
                              scale * np.ones_like(y))

        _, d_w1, d_b1 = grad(net, x, head(1.0))
        _, d_w3, d_b3 = grad(net, x, head(3.0))
        assert all(np.allclose(3 * a, b) for a, b in zip(d_w1, d_w3))
        assert all(np.allclose(3 * a, b) for a, b in zip(d_b1, d_b3))

    @pytest.mark.parametrize("layers,head_kind", [
        ([2, 64, 64, 2], ACTOR_HEAD),
        ([4, 64, 64, 1], CRITIC_HEAD),
        ([2, 8, 2], ACTOR_HEAD),
    ])
    def test_gradient_check_finite_differences(self, layers, head_kind):
        rng = np.random.default_rng(4)
        net = Net.init(layers, head_kind, rng)
        x = rng.normal(size=(5, layers[0]))
        target = rng.normal(size=(5, layers[-1]))

        def loss_head(y):
            diff = y - target
            return float((diff * diff).sum()), 2.0 * diff

        _, d_w, d_b = grad(net, x, loss_head)
        n_w, n_b = finite_difference_grads(net, x, loss_head)
        assert max_rel_error(d_w, n_w) < 1e-4
        assert max_rel_error(d_b, n_b) < 1e-4

    def test_input_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        net = Net.init([4, 16, 1], CRITIC_HEAD, rng)
        x = rng.normal(size=(3, 4))
        y, cache = forward_cached(net, x)
        _, _, dx = backward(net, cache, np.ones_like(y))
        h = 1e-6
        for i in np.ndindex(x.shape):
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            num = (forward_cached(net, xp)[0].sum()
                   - forward_cached(net, xm)[0].sum()) / (2 * h)
            assert dx[i] == pytest.approx(num, rel=1e-4, abs=1e-7)


class TestCheckpoint:
    def _nets(self):
        rng = np.random.default_rng(6)
        return (Net.init([2, 64, 64, 2], ACTOR_HEAD, rng),
                Net.init([4, 64, 64, 1], CRITIC_HEAD, rng))

    def test_round_trip(self, tmp_path):
        actor, critic = self._nets()
        path = tmp_path / "model.ckpt"
        save_checkpoint(actor, critic, {"gamma": 0.95}, path)
        actor2, critic2, cfg = load_checkpoint(path)
        assert cfg == {"gamma": 0.95}
        rng = np.random.default_rng(7)
        for _ in range(100):
            x = rng.normal(size=2)
            assert np.array_equal(forward(actor, x), forward(actor2, x))
            xc = rng.normal(size=4)
            assert np.array_equal(forward(critic, xc), forward(critic2, xc))

    def test_truncated_file(self, tmp_path):
        actor, critic = self._nets()
        path = tmp_path / "model.ckpt"
        save_checkpoint(actor, critic, {}, path)
        data = path.read_bytes()
        path.write_bytes(data[:len(data) // 2])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"definitely not a checkpoint")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_shape_mismatch_on_load(self, tmp_path):
        actor, critic = self._nets()
        path = tmp_path / "model.ckpt"
        save_checkpoint(actor, critic, {}, path)
        with pytest.raises(CheckpointError):
            load_checkpoint(path, expected_layer_sizes=([2, 32, 2],
                                                        [4, 32, 1]))
