import numpy as np
import pytest

from config.schemas import AdamConfig
from nn.adam import adam_init, adam_step
from nn.mlp import (
    MlpGradients,
    MlpModel,
    mlp_forward,
    mlp_init,
    mlp_input_jacobian,
    mlp_param_gradients,
)
from utils.errors import DimensionMismatch


def identity_model(dim=3):
    return MlpModel([dim, dim], [np.eye(dim)], [np.zeros(dim)])


class TestMlpInit:
    def test_shapes_and_zero_biases(self):
        model = mlp_init([3, 16, 8, 3], seed=0)
        assert [w.shape for w in model.weights] == [(16, 3), (8, 16), (3, 8)]
        assert all(np.all(b == 0.0) for b in model.biases)

    def test_deterministic_in_seed(self):
        a = mlp_init([3, 16, 3], seed=7)
        b = mlp_init([3, 16, 3], seed=7)
        c = mlp_init([3, 16, 3], seed=8)
        for wa, wb in zip(a.weights, b.weights):
            np.testing.assert_array_equal(wa, wb)
        assert not np.array_equal(a.weights[0], c.weights[0])

    def test_glorot_variance(self):
        model = mlp_init([300, 200], seed=1)
        bound = np.sqrt(6.0 / 500.0)
        w = model.weights[0]
        assert np.max(np.abs(w)) <= bound
        assert np.var(w) == pytest.approx(bound ** 2 / 3.0, rel=0.05)

    def test_invalid_dims(self):
        with pytest.raises(ValueError):
            mlp_init([3], seed=0)
        with pytest.raises(ValueError):
            mlp_init([3, 0, 3], seed=0)


class TestMlpForward:
    def test_identity_layer(self, rng):
        x = rng.standard_normal((5, 3))
        np.testing.assert_array_equal(mlp_forward(identity_model(), x), x)
        np.testing.assert_array_equal(mlp_input_jacobian(identity_model(), x[0]), np.eye(3))

    def test_batch_matches_single(self, rng):
        model = mlp_init([3, 10, 10, 3], seed=2)
        X = rng.standard_normal((4, 3))
        batch = mlp_forward(model, X)
        for i in range(4):
            np.testing.assert_allclose(batch[i], mlp_forward(model, X[i]), rtol=1e-14)

    def test_wrong_input_dim(self):
        with pytest.raises(DimensionMismatch):
            mlp_forward(mlp_init([3, 4, 3], seed=0), np.zeros(2))


class TestMlpInputJacobian:
    def test_matches_finite_differences(self, rng, fd):
        model = mlp_init([3, 12, 12, 3], seed=3)
        for x in rng.standard_normal((5, 3)):
            np.testing.assert_allclose(
                mlp_input_jacobian(model, x),
                fd(lambda q: mlp_forward(model, q), x),
                rtol=1e-6, atol=1e-8,
            )

    def test_batch_shape(self, rng):
        model = mlp_init([2, 6, 4], seed=0)
        assert mlp_input_jacobian(model, rng.standard_normal((7, 2))).shape == (7, 4, 2)


class TestMlpParamGradients:
    def test_matches_finite_differences(self, rng):
        model = mlp_init([2, 5, 2], seed=4)
        model.biases = [rng.standard_normal(b.shape) * 0.1 for b in model.biases]
        X = rng.standard_normal((3, 2))
        U = rng.standard_normal((3, 2))
        grads = mlp_param_gradients(model, X, U)

        def objective(m):
            return float(np.sum(U * mlp_forward(m, X)))

        h = 1e-6
        for kind in ("weights", "biases"):
            for layer, analytic in enumerate(getattr(grads, kind)):
                numeric = np.zeros_like(analytic)
                for idx in np.ndindex(analytic.shape):
                    plus, minus = model.copy(), model.copy()
                    getattr(plus, kind)[layer][idx] += h
                    getattr(minus, kind)[layer][idx] -= h
                    numeric[idx] = (objective(plus) - objective(minus)) / (2.0 * h)
                np.testing.assert_allclose(analytic, numeric, rtol=1e-6, atol=1e-8)

    def test_zero_upstream_gives_zero_gradients(self, rng):
        model = mlp_init([3, 8, 3], seed=0)
        grads = mlp_param_gradients(model, rng.standard_normal((4, 3)), np.zeros((4, 3)))
        assert all(np.all(g == 0.0) for g in grads.arrays())

    def test_upstream_shape_checked(self):
        model = mlp_init([3, 8, 3], seed=0)
        with pytest.raises(DimensionMismatch):
            mlp_param_gradients(model, np.zeros((4, 3)), np.zeros((4, 2)))


class TestAdam:
    def test_first_step_is_sign_like(self):
        model = identity_model(2)
        state = adam_init(model, AdamConfig(learning_rate=0.1, weight_decay=0.0))
        g = MlpGradients([np.array([[2.0, -0.5], [0.0, 1.0]])], [np.array([4.0, -3.0])])
        adam_step(model, state, g)
        expected_w = np.eye(2) - 0.1 * g.weights[0] / (np.abs(g.weights[0]) + 1e-8)
        np.testing.assert_allclose(model.weights[0], expected_w, rtol=1e-12)
        np.testing.assert_allclose(model.biases[0], [-0.1, 0.1], rtol=1e-6)
        assert state.step_count == 1

    def test_weight_decay_is_decoupled(self):
        model = identity_model(2)
        state = adam_init(model, AdamConfig(learning_rate=0.1, weight_decay=0.5))
        zero = MlpGradients([np.zeros((2, 2))], [np.zeros(2)])
        adam_step(model, state, zero)
        np.testing.assert_allclose(model.weights[0], 0.95 * np.eye(2))

    def test_zero_gradient_without_decay_is_a_no_op(self):
        model = identity_model(2)
        state = adam_init(model, AdamConfig(learning_rate=0.1, weight_decay=0.0))
        zero = MlpGradients([np.zeros((2, 2))], [np.zeros(2)])
        for _ in range(3):
            adam_step(model, state, zero)
        np.testing.assert_array_equal(model.weights[0], np.eye(2))
        np.testing.assert_array_equal(model.biases[0], np.zeros(2))

    def test_minimizes_quadratic(self):
        model = MlpModel([1, 1], [np.zeros((1, 1))], [np.zeros(1)])
        state = adam_init(model, AdamConfig(learning_rate=0.01, weight_decay=0.0))
        for _ in range(3000):
            w = model.weights[0]
            adam_step(model, state, MlpGradients([2.0 * (w - 3.0)], [np.zeros(1)]))
        assert model.weights[0][0, 0] == pytest.approx(3.0, abs=0.05)

    def test_shape_mismatch(self):
        model = identity_model(2)
        state = adam_init(model)
        with pytest.raises(DimensionMismatch):
            adam_step(model, state, MlpGradients([np.zeros((3, 3))], [np.zeros(2)]))
