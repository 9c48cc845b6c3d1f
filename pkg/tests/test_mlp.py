import numpy as np
import pytest

from oracles import gradient_relative_error, numeric_gradient
from tweetcat.base import softmax
from tweetcat.mlp import MlpModel, glorot_init, mlp_fit, mlp_objective, mlp_predict_proba, pack, unpack
from tweetcat.optimize import AdamConfig
from tweetcat.synthgen import xor_clusters

XOR4 = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
XOR4_Y = np.array([0, 1, 1, 0])


def test_pack_unpack_round_trip():
    sizes = (3, 4, 2)
    theta = np.arange(3 * 4 + 4 + 4 * 2 + 2, dtype=float)
    w, b = unpack(theta, sizes)
    assert [x.shape for x in w] == [(3, 4), (4, 2)]
    assert np.array_equal(pack(w, b), theta)


def test_glorot_bounds_and_zero_biases():
    sizes = (10, 6, 3)
    w, b = unpack(glorot_init(sizes, np.random.default_rng(0)), sizes)
    assert np.abs(w[0]).max() <= np.sqrt(6 / 16)
    assert all(not x.any() for x in b)


@pytest.mark.parametrize("seed", range(5))
def test_gradient_small_net(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(5, 3))
    y = rng.integers(0, 2, 5)
    obj = mlp_objective(X, y, (3, 2, 2), alpha=0.01)
    theta = rng.normal(size=3 * 2 + 2 + 2 * 2 + 2)
    assert gradient_relative_error(obj.gradient(theta), numeric_gradient(obj.value, theta)) < 1e-4


def test_zero_hidden_weights_give_output_bias_softmax():
    sizes = (3, 4, 3)
    w = [np.zeros((3, 4)), np.zeros((4, 3))]
    b = [np.zeros(4), np.array([0.5, -1.0, 2.0])]
    m = MlpModel(sizes, w, b)
    proba = mlp_predict_proba(m, np.random.default_rng(0).normal(size=(5, 3))).values
    assert proba == pytest.approx(np.tile(softmax(b[1][None, :]), (5, 1)), abs=1e-15)


def test_output_bias_shift_invariance():
    m = mlp_fit(*xor_clusters(100, seed=0), hidden_layer_sizes=(5,), max_iter=3)
    X = xor_clusters(20, seed=9)[0]
    before = mlp_predict_proba(m, X).values
    m.biases[-1] = m.biases[-1] + 3.7
    assert mlp_predict_proba(m, X).values == pytest.approx(before, abs=1e-12)


def test_xor_four_points_learned():
    m = mlp_fit(XOR4, XOR4_Y, hidden_layer_sizes=(4,), alpha=0.0,
                adam=AdamConfig(learning_rate_init=0.01, batch_size=4), max_iter=2000, seed=0)
    proba = mlp_predict_proba(m, XOR4)
    assert proba.predict().tolist() == XOR4_Y.tolist()
    assert proba.values.sum(axis=1) == pytest.approx(np.ones(4), abs=1e-9)


def test_lbfgs_solver_path():
    X, y = xor_clusters(200, seed=1)
    m = mlp_fit(X, y, hidden_layer_sizes=(8,), solver="lbfgs", max_iter=200)
    assert np.mean(mlp_predict_proba(m, X).predict() == y) > 0.9


def test_loss_trace_finite_and_decreasing():
    X, y = xor_clusters(300, seed=2)
    m = mlp_fit(X, y, hidden_layer_sizes=(10,), max_iter=30)
    assert np.all(np.isfinite(m.loss_trace))
    assert m.loss_trace[-1] < m.loss_trace[0]


def test_bitwise_deterministic():
    X, y = xor_clusters(200, seed=3)
    a = mlp_fit(X, y, hidden_layer_sizes=(6, 5), max_iter=5, seed=7)
    b = mlp_fit(X, y, hidden_layer_sizes=(6, 5), max_iter=5, seed=7)
    assert all(np.array_equal(p, q) for p, q in zip(a.weights + a.biases, b.weights + b.biases))


def test_invalid_arguments():
    with pytest.raises(ValueError):
        mlp_fit(XOR4, XOR4_Y, hidden_layer_sizes=(0,))
    with pytest.raises(ValueError):
        mlp_fit(XOR4, XOR4_Y, solver="sgd")
    m = mlp_fit(XOR4, XOR4_Y, hidden_layer_sizes=(2,), max_iter=1)
    with pytest.raises(ValueError, match="dimension mismatch"):
        mlp_predict_proba(m, np.zeros((1, 3)))
