"""Numerical substrate: forward/backward, losses, optimizers, checkpoints."""

import numpy as np
import pytest

from stclust.neural import (
    Adam,
    DenseLayer,
    DivergenceError,
    NetworkSpec,
    SgdMomentum,
    backward,
    forward,
    init_network,
    load_checkpoint,
    mse_loss,
    network_parameters,
    save_checkpoint,
)


def finite_difference(f, arr, eps=1e-6):
    """Central differences of scalar f with respect to every entry of arr."""
    grad = np.zeros_like(arr, dtype=np.float64)
    it = np.nditer(arr, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        orig = arr[idx]
        arr[idx] = orig + eps
        hi = f()
        arr[idx] = orig - eps
        lo = f()
        arr[idx] = orig
        grad[idx] = (hi - lo) / (2 * eps)
        it.iternext()
    return grad


def rel_error(a, b):
    denom = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-8)
    return np.max(np.abs(a - b)) / denom


def random_net(rng, dtype=np.float64, max_layers=3, max_units=20):
    n_layers = int(rng.integers(1, max_layers + 1))
    sizes = [int(rng.integers(2, max_units + 1)) for _ in range(n_layers + 1)]
    return init_network(NetworkSpec(layer_sizes=sizes), rng, dtype=dtype)


class TestForward:
    def test_identity_layer_passes_input_through(self):
        layer = DenseLayer(W=np.eye(3), b=np.zeros(3), activation="linear")
        X = np.arange(6, dtype=np.float64).reshape(2, 3)
        acts = forward([layer], X)
        assert np.array_equal(acts[-1], X)
        assert len(acts) == 2

    def test_relu_clips_negatives(self):
        layer = DenseLayer(W=np.eye(2), b=np.zeros(2), activation="relu")
        out = forward([layer], np.array([[-1.0, 2.0]]))[-1]
        assert out.tolist() == [[0.0, 2.0]]

    def test_matches_independent_matrix_product(self):
        rng = np.random.default_rng(11)
        layers = random_net(rng)
        X = rng.standard_normal((5, layers[0].W.shape[0]))
        # oracle: re-derive the forward pass with explicit loops
        h = X
        for layer in layers:
            z = h @ layer.W + layer.b
            h = np.where(z > 0, z, 0.0) if layer.activation == "relu" else z
        assert np.allclose(forward(layers, X)[-1], h, atol=1e-12)

    def test_shape_mismatch_rejected(self):
        layer = DenseLayer(W=np.eye(3), b=np.zeros(3))
        with pytest.raises(ValueError):
            forward([layer], np.ones((2, 4)))

    def test_relu_idempotent(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(100)
        once = np.maximum(x, 0.0)
        assert np.array_equal(np.maximum(once, 0.0), once)


class TestMseLoss:
    def test_zero_at_equality(self):
        X = np.random.default_rng(1).standard_normal((3, 4))
        loss, grad = mse_loss(X, X.copy())
        assert loss == 0.0
        assert np.all(grad == 0.0)

    def test_hand_value_mean_convention(self):
        loss, _ = mse_loss(np.array([[1.0, 0.0]]), np.array([[0.0, 0.0]]))
        assert loss == pytest.approx(0.5)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((4, 3))
        Xhat = rng.standard_normal((4, 3))
        _, grad = mse_loss(X, Xhat)
        fd = finite_difference(lambda: mse_loss(X, Xhat)[0], Xhat)
        assert rel_error(grad, fd) < 1e-6

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        X, Y = rng.standard_normal((2, 5, 2))
        assert mse_loss(X, Y)[0] == pytest.approx(mse_loss(Y, X)[0])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            mse_loss(np.ones((1, 2)), np.ones((2, 1)))


class TestBackward:
    def test_single_linear_layer_closed_form(self):
        rng = np.random.default_rng(4)
        layer = DenseLayer(W=rng.standard_normal((3, 2)), b=np.zeros(2), activation="linear")
        X = rng.standard_normal((5, 3))
        acts = forward([layer], X)
        out_grad = rng.standard_normal((5, 2))
        grads, dX = backward([layer], acts, out_grad)
        assert np.allclose(grads[0][0], X.T @ out_grad)
        assert np.allclose(grads[0][1], out_grad.sum(axis=0))
        assert np.allclose(dX, out_grad @ layer.W.T)

    def test_zero_out_grad_gives_zero_gradients(self):
        rng = np.random.default_rng(5)
        layers = random_net(rng)
        X = rng.standard_normal((4, layers[0].W.shape[0]))
        acts = forward(layers, X)
        grads, dX = backward(layers, acts, np.zeros_like(acts[-1]))
        assert all(np.all(dW == 0) and np.all(db == 0) for dW, db in grads)
        assert np.all(dX == 0)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            layers = random_net(rng)
            X = rng.standard_normal((6, layers[0].W.shape[0]))
            target = rng.standard_normal((6, layers[-1].W.shape[1]))

            def loss_value():
                return mse_loss(target, forward(layers, X)[-1])[0]

            acts = forward(layers, X)
            _, out_grad = mse_loss(target, acts[-1])
            grads, _ = backward(layers, acts, out_grad)
            for layer, (dW, db) in zip(layers, grads):
                assert rel_error(dW, finite_difference(loss_value, layer.W)) < 1e-4
                assert rel_error(db, finite_difference(loss_value, layer.b)) < 1e-4

    def test_stale_cache_rejected(self):
        rng = np.random.default_rng(7)
        layers = random_net(rng)
        X = rng.standard_normal((4, layers[0].W.shape[0]))
        acts = forward(layers, X)
        with pytest.raises(ValueError):
            backward(layers, acts[:-1], np.zeros_like(acts[-1]))


class TestOptimizers:
    def test_plain_sgd_step(self):
        w = np.array([1.0])
        SgdMomentum(learning_rate=0.1, momentum=0.0).step([w], [np.array([1.0])])
        assert w[0] == pytest.approx(0.9)

    def test_momentum_hand_iteration(self):
        w = np.array([1.0])
        opt = SgdMomentum(learning_rate=0.1, momentum=0.9)
        opt.step([w], [np.array([1.0])])
        assert w[0] == pytest.approx(0.9)
        opt.step([w], [np.array([1.0])])
        assert w[0] == pytest.approx(0.71)  # v = -0.19 after two steps

    def test_adam_first_step_is_about_lr(self):
        w = np.array([1.0])
        Adam(learning_rate=0.05).step([w], [np.array([1.0])])
        assert w[0] == pytest.approx(1.0 - 0.05, abs=1e-6)

    def test_nonfinite_gradient_aborts(self):
        w = np.array([1.0])
        with pytest.raises(DivergenceError):
            SgdMomentum(0.1).step([w], [np.array([np.nan])])
        assert w[0] == 1.0

    def test_determinism_across_runs(self):
        def train_once():
            rng = np.random.default_rng(99)
            layers = init_network(NetworkSpec(layer_sizes=[4, 3, 2]), rng, dtype=np.float32)
            opt = Adam(0.01)
            X = np.random.default_rng(100).standard_normal((8, 4)).astype(np.float32)
            for _ in range(20):
                acts = forward(layers, X)
                _, g = mse_loss(X[:, :2], acts[-1])
                grads, _ = backward(layers, acts, g.astype(np.float32))
                opt.step(network_parameters(layers), [x for pair in grads for x in pair])
            return np.concatenate([p.ravel() for p in network_parameters(layers)])

        assert np.array_equal(train_once(), train_once())


class TestCheckpoint:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(8)
        layers = random_net(rng, dtype=np.float32)
        path = tmp_path / "net.stck"
        save_checkpoint(path, {"encoder": layers})
        loaded = load_checkpoint(path)["encoder"]
        assert len(loaded) == len(layers)
        for a, b in zip(layers, loaded):
            assert a.W.tobytes() == b.W.tobytes()
            assert a.b.tobytes() == b.b.tobytes()
            assert a.activation == b.activation

    def test_round_trip_float64(self, tmp_path):
        rng = np.random.default_rng(9)
        layers = random_net(rng, dtype=np.float64)
        path = tmp_path / "net64.stck"
        save_checkpoint(path, {"n": layers})
        loaded = load_checkpoint(path)["n"]
        assert all(a.W.dtype == np.float64 and a.W.tobytes() == b.W.tobytes()
                   for a, b in zip(layers, loaded))


class TestNetworkSpec:
    def test_default_activations(self):
        spec = NetworkSpec(layer_sizes=[10, 5, 2])
        assert spec.activations == ["relu", "linear"]

    def test_rejects_short_and_nonpositive(self):
        with pytest.raises(ValueError):
            NetworkSpec(layer_sizes=[3])
        with pytest.raises(ValueError):
            NetworkSpec(layer_sizes=[3, 0])
