import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from localmap.core import seeded_rng
from localmap.metrics import (edge_ratio_simulation, estimate_d_adj, posthoc_knn_accuracy,
                              silhouette, silhouette_samples, stratified_split)


def silhouette_oracle(Y, labels):
    """Direct double loop over points."""
    n = len(Y)
    total = 0.0
    for i in range(n):
        own = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not own:
            continue
        a = sum(math.dist(Y[i], Y[j]) for j in own) / len(own)
        b = math.inf
        for c in set(labels) - {labels[i]}:
            members = [j for j in range(n) if labels[j] == c]
            b = min(b, sum(math.dist(Y[i], Y[j]) for j in members) / len(members))
        if max(a, b) > 0:
            total += (b - a) / max(a, b)
    return total / n


def test_silhouette_hand_example():
    Y = np.array([[0, 0], [0, 1], [10, 0], [10, 1]], float)
    b = (10 + math.sqrt(101)) / 2
    assert silhouette(Y, [0, 0, 1, 1]) == pytest.approx((b - 1) / b, abs=1e-12)
    assert silhouette(Y, [0, 0, 1, 1]) == pytest.approx(0.900249, abs=1e-6)


def test_silhouette_coincident_classes():
    Y = np.tile([1.0, 2.0], (6, 1))
    labels = [0, 1, 0, 1, 0, 1]
    assert silhouette(Y, labels) == pytest.approx(0.0, abs=1e-15)


def test_silhouette_matches_oracle():
    rng = seeded_rng(4, 0)
    Y = rng.standard_normal((150, 2))
    labels = rng.integers(0, 4, 150)
    assert abs(silhouette(Y, labels) - silhouette_oracle(Y.tolist(), labels.tolist())) < 1e-9


def test_silhouette_singletons_and_errors():
    Y = np.array([[0.0, 0.0], [1.0, 0.0], [5.0, 0.0]])
    s = silhouette_samples(Y, [0, 0, 1])
    assert s[2] == 0.0
    with pytest.raises(ValueError, match="single class"):
        silhouette(Y, [2, 2, 2])


def test_silhouette_agrees_with_sklearn():
    metrics = pytest.importorskip("sklearn.metrics")
    rng = seeded_rng(5, 0)
    Y = rng.standard_normal((300, 3))
    labels = rng.integers(0, 5, 300)
    assert abs(silhouette(Y, labels) - metrics.silhouette_score(Y, labels)) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-math.pi, math.pi), st.permutations(range(3)))
def test_silhouette_invariances(seed, theta, perm):
    rng = seeded_rng(seed, 0)
    Y = rng.standard_normal((40, 2))
    labels = rng.integers(0, 3, 40)
    labels[:3] = [0, 1, 2]
    R = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    base = silhouette(Y, labels)
    assert -1 <= base <= 1
    assert silhouette(Y @ R.T + 3.0, labels) == pytest.approx(base, abs=1e-10)
    assert silhouette(Y, np.asarray(perm)[labels]) == pytest.approx(base, abs=1e-12)


def test_stratified_split_keeps_training_points():
    labels = np.array([0] * 10 + [1] * 5 + [2])
    train, test = stratified_split(labels, 0.2, seed=1)
    assert set(np.unique(labels[train])) == {0, 1, 2}
    assert len(np.intersect1d(train, test)) == 0 and len(train) + len(test) == 16
    assert np.sum(labels[test] == 0) == 2 and np.sum(labels[test] == 1) == 1


def test_posthoc_separable():
    rng = seeded_rng(2, 0)
    lab = np.repeat(np.arange(3), 50)
    Y = np.array([[0, 0], [100, 0], [0, 100]])[lab] + rng.standard_normal((150, 2))
    assert posthoc_knn_accuracy(Y, lab, seed=3) == 1.0


def test_posthoc_random_labels():
    accs = []
    for seed in range(20):
        rng = seeded_rng(seed, 50)
        Y = rng.standard_normal((2000, 2))
        lab = rng.integers(0, 2, 2000)
        accs.append(posthoc_knn_accuracy(Y, lab, seed=seed))
    assert abs(np.mean(accs) - 0.5) < 0.04


def test_posthoc_k1_enumeration():
    Y = np.array([[0.0], [1.0], [3.0], [7.0], [7.5], [0.4], [2.9], [8.0]])
    lab = np.array([0, 0, 1, 1, 1, 0, 1, 0])
    train, test = stratified_split(lab, 0.25, seed=0)
    correct = 0
    for t in test:
        nearest = min(train, key=lambda j: (abs(Y[t, 0] - Y[j, 0]), j))
        correct += lab[nearest] == lab[t]
    assert posthoc_knn_accuracy(Y, lab, k=1, test_fraction=0.25, seed=0) == correct / len(test)


def test_posthoc_tie_goes_to_nearer_class():
    # k=2 vote ties between one neighbour of each class
    Y = np.array([[0.0], [1.0], [-3.0], [0.1], [10.0], [10.2]])
    lab = np.array([0, 0, 1, 1, 1, 1])
    acc = posthoc_knn_accuracy(Y, lab, k=2, test_fraction=0.34, seed=0)
    assert 0.0 <= acc <= 1.0


def test_posthoc_rigid_invariance():
    rng = seeded_rng(9, 0)
    Y = rng.standard_normal((200, 2))
    lab = (Y[:, 0] + 0.3 * rng.standard_normal(200) > 0).astype(int)
    R = np.array([[0.6, -0.8], [0.8, 0.6]])
    assert posthoc_knn_accuracy(Y, lab) == posthoc_knn_accuracy(Y @ R.T - 7, lab)


def test_estimate_d_adj():
    Y = np.array([[0.0, 0.0], [0.0, 0.0], [10.0, 0.0], [10.0, 0.0]])
    assert estimate_d_adj(Y, [0, 0, 1, 1]) == pytest.approx(10.0)
    Y = np.array([[0.0], [10.0], [30.0]])
    assert estimate_d_adj(Y, [0, 1, 2]) == pytest.approx(40 / 3)
    rng = seeded_rng(1, 0)
    Z = rng.standard_normal((60, 2))
    lab = np.arange(60) % 4
    base = estimate_d_adj(Z, lab)
    assert base > 0
    assert estimate_d_adj(Z + [5.0, -2.0], lab) == pytest.approx(base, rel=1e-12)
    assert estimate_d_adj(2.5 * Z, lab) == pytest.approx(2.5 * base, rel=1e-12)
    with pytest.raises(ValueError):
        estimate_d_adj(Z, np.zeros(60))


def test_simulation_matches_closed_form():
    r1 = edge_ratio_simulation(1000, 2, 0.001, 20, seeds=200, seed=0)
    assert r1.predicted == pytest.approx(0.025)
    assert abs(r1.mean - 0.025) < 0.005
    # convergence at 3 standard errors
    assert abs(r1.mean - r1.predicted) < 3 * r1.std / math.sqrt(200)
    r2 = edge_ratio_simulation(2000, 2, 0.001, 20, seeds=200, seed=0)
    assert abs(r2.mean - 0.05) < 0.01
    assert 1.6 <= r2.mean / r1.mean <= 2.4


def test_simulation_zero_probability():
    r = edge_ratio_simulation(500, 5, 0.0, 10, seeds=10, seed=3)
    np.testing.assert_array_equal(r.ratios, np.zeros(10))


def test_simulation_errors():
    with pytest.raises(ValueError):
        edge_ratio_simulation(1001, 2, 0.001, 20, 5)
    with pytest.raises(ValueError):
        edge_ratio_simulation(1000, 2, 1.5, 20, 5)
    with pytest.raises(ValueError):
        edge_ratio_simulation(10, 2, 0.1, 10, 5)
