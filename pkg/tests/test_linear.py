from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import (
    gradient_relative_error,
    nb_posterior_exact,
    numeric_gradient,
    svm_primal,
    svm_subgradient_oracle,
)
from tweetcat.base import softmax
from tweetcat.linear import (
    LinearModel,
    linear_scores,
    logistic_objective,
    lr_fit,
    nb_fit,
    svm_fit,
    svm_objective,
)


def test_nb_hand_smoothing():
    X = np.array([[1, 0], [0, 1]])
    m = nb_fit(X, [0, 1], alpha=1.0)
    assert np.exp(m.feature_log_prob[0]) == pytest.approx([2 / 3, 1 / 3], abs=1e-12)
    assert linear_scores(m, [[1, 0]]).predict().tolist() == [0]


def test_nb_large_alpha_is_uniform():
    X = np.array([[5, 0, 1], [0, 3, 0]])
    m = nb_fit(X, [0, 1], alpha=1e6)
    assert np.max(np.abs(np.exp(m.feature_log_prob) - 1 / 3)) < 1e-5


def test_nb_rejects_negative_features_and_empty_class():
    with pytest.raises(ValueError):
        nb_fit(np.array([[-1.0]]), [0])
    with pytest.raises(ValueError, match="no training documents"):
        nb_fit(np.array([[1.0], [2.0]]), [0, 0], n_classes=2)


@given(
    st.integers(2, 5).flatmap(
        lambda n: st.tuples(
            st.lists(st.lists(st.integers(0, 3), min_size=3, max_size=3), min_size=n, max_size=n),
            st.permutations([0, 1] + [0] * (n - 2)),
        )
    ),
    st.sampled_from([Fraction(1), Fraction(1, 10), Fraction(5, 2)]),
)
def test_nb_matches_rational_oracle(data, alpha):
    counts, labels = data
    X = np.array(counts, dtype=float)
    m = nb_fit(X, labels, alpha=float(alpha), n_classes=2)
    post = linear_scores(m, X).values
    for i, q in enumerate(counts):
        exact = nb_posterior_exact(counts, labels, q, alpha, 2)
        assert post[i] == pytest.approx([float(e) for e in exact], abs=1e-9)


@given(st.lists(st.lists(st.integers(0, 4), min_size=4, max_size=4), min_size=3, max_size=10))
def test_nb_rows_and_posteriors_normalized(counts):
    X = np.array(counts, dtype=float)
    y = np.arange(len(counts)) % 3
    m = nb_fit(X, y, alpha=0.5)
    assert np.exp(m.feature_log_prob).sum(axis=1) == pytest.approx(np.ones(3), abs=1e-9)
    assert linear_scores(m, X).values.sum(axis=1) == pytest.approx(np.ones(len(counts)), abs=1e-9)
    jll = linear_scores(m, X, posterior=False)
    assert not jll.is_probability
    assert np.array_equal(jll.predict(), linear_scores(m, X).predict())


def test_lr_separable_four_points():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [3.0, 0.0], [3.0, 1.0]])
    y = np.array([0, 0, 1, 1])
    m = lr_fit(X, y, C=100.0)
    assert linear_scores(m, X).predict().tolist() == y.tolist()


def test_lr_tiny_c_predicts_prior():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 4))
    y = np.array([0] * 20 + [1] * 10)
    m = lr_fit(X, y, C=1e-8)
    assert np.max(np.abs(m.weights)) < 1e-6
    assert set(linear_scores(m, X).predict().tolist()) == {0}


def test_lr_objective_decreases_from_zero():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(40, 5))
    y = rng.integers(0, 3, 40)
    obj = logistic_objective(X, y, 1.0, 3)
    m = lr_fit(X, y, C=1.0)
    theta = np.concatenate([m.weights.ravel(), m.intercepts])
    assert obj.value(theta) < obj.value(np.zeros_like(theta))


@pytest.mark.parametrize("seed", range(20))
def test_lr_gradient_finite_differences(seed):
    rng = np.random.default_rng(seed)
    n, v, k = 8, 4, 3
    X = rng.normal(size=(n, v))
    y = rng.integers(0, k, n)
    obj = logistic_objective(X, y, C=float(rng.uniform(0.1, 5)), n_classes=k)
    theta = rng.normal(size=k * v + k)
    num = numeric_gradient(obj.value, theta)
    assert gradient_relative_error(obj.gradient(theta), num) < 1e-4


def test_zero_weight_logistic_is_uniform():
    m = LinearModel("logistic", np.zeros((4, 3)), np.zeros(4), 1.0)
    vals = linear_scores(m, np.random.default_rng(0).normal(size=(5, 3))).values
    assert vals == pytest.approx(np.full((5, 4), 0.25))


def test_svm_one_dimensional_margins():
    X = np.array([[-1.0], [1.0]])
    y = np.array([0, 1])
    m = svm_fit(X, y, C=100.0)
    margins = linear_scores(m, X).values[:, 1]
    assert margins[0] < 0 < margins[1]
    assert np.all(np.array([-1, 1]) * margins >= 0)


def test_svm_margins_are_dot_products():
    m = LinearModel("svm", np.array([[1.0, -2.0], [0.5, 0.25]]), np.array([0.5, -1.0]), 1.0)
    x = np.array([[2.0, 1.0]])
    assert linear_scores(m, x).values[0].tolist() == [1 * 2 - 2 * 1 + 0.5, 0.5 * 2 + 0.25 - 1.0]


def test_svm_objective_within_two_percent_of_long_run_oracle():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(20, 5))
    y = (X[:, 0] + 0.5 * rng.normal(size=20) > 0).astype(int)
    C = 1.0
    m = svm_fit(X, y, C=C, seed=0)
    w = np.append(m.weights[1], m.intercepts[1])
    y_pm = np.where(y == 1, 1.0, -1.0)
    ours = svm_objective(X, y_pm, w, C)
    # our run makes 2000 single-batch updates here; the oracle gets 100x as many full-batch steps
    oracle = svm_primal(X, y_pm, svm_subgradient_oracle(X, y_pm, C, 200_000), C)
    assert ours <= oracle * 1.02


def test_svm_needs_two_classes():
    with pytest.raises(ValueError):
        svm_fit(np.ones((3, 2)), [0, 0, 0])


def test_svm_deterministic_per_seed():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(50, 3))
    y = rng.integers(0, 3, 50)
    a = svm_fit(X, y, seed=4)
    b = svm_fit(X, y, seed=4)
    assert np.array_equal(a.weights, b.weights)


def test_ties_go_to_lowest_class():
    m = LinearModel("svm", np.zeros((3, 2)), np.array([1.0, 1.0, 0.0]), 1.0)
    assert linear_scores(m, [[1.0, 1.0]]).predict().tolist() == [0]


def test_width_mismatch():
    m = nb_fit(np.eye(3), [0, 1, 2])
    with pytest.raises(ValueError, match="dimension mismatch"):
        linear_scores(m, np.ones((1, 4)))


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.floats(-50, 50))
def test_softmax_shift_invariance(z, c):
    z = np.array([z])
    assert softmax(z + c) == pytest.approx(softmax(z), abs=1e-12)


def test_svm_on_xor_clusters_matches_full_batch_oracle():
    """On four XOR blobs the hinge optimum cuts one blob off, so a linear SVM scores
    about 3/4 rather than chance. The stochastic fit lands on the same solution."""
    from tweetcat.synthgen import xor_clusters

    X, y = xor_clusters(2000, seed=0)
    perm = np.random.default_rng(0).permutation(len(y))
    test, train = perm[:500], perm[500:]
    y_pm = np.where(y[train] == 1, 1.0, -1.0)
    w = svm_subgradient_oracle(X[train], y_pm, 0.1, 20_000)
    assert svm_primal(X[train], y_pm, w, 0.1) < svm_primal(X[train], y_pm, np.zeros(3), 0.1)
    oracle_pred = (np.hstack([X[test], np.ones((500, 1))]) @ w > 0).astype(int)
    ours = linear_scores(svm_fit(X[train], y[train], C=0.1, seed=0), X[test]).predict()
    assert np.mean(ours == oracle_pred) > 0.97
    assert 0.7 < np.mean(oracle_pred == y[test]) < 0.8
