import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone

from twoway.clustering import (
    Representation,
    WeightedKMeans,
    canonical_labels,
    choose_n_clusters,
    kmeans,
    representatives,
    same_partition,
    structural_variance,
)
from twoway.exceptions import DataError, ParameterError
from twoway.model import BlockStructure, PatternMatrix
from twoway.spectra import exact_blownup_svd, thin_svd

from oracles import brute_force_kmeans, weighted_sse
from strategies import seeds


def test_representatives_identity():
    rep = representatives(thin_svd(np.eye(2)), "left", 2)
    assert rep.points.shape == (2, 2)
    np.testing.assert_allclose(rep.points @ rep.points.T, np.eye(2), atol=1e-12)
    np.testing.assert_array_equal(rep.weights, [1, 1])


def test_representatives_blown_up_are_block_points():
    P = PatternMatrix([[0.9, 0.1, 0.4], [0.2, 0.7, 0.5]])
    bs = BlockStructure((4, 6), (3, 3, 2))
    svd = exact_blownup_svd(P, bs)
    rep = representatives(svd, "left", svd.k)
    assert np.unique(rep.points.round(12), axis=0).shape[0] == 2
    rep = representatives(svd, "right", svd.k)
    assert np.unique(rep.points.round(12), axis=0).shape[0] == 3


def test_representatives_errors():
    svd = thin_svd(np.eye(3), 2)
    with pytest.raises(ParameterError):
        representatives(svd, "left", 3)
    with pytest.raises(ParameterError):
        representatives(svd, "up", 1)


def test_representation_rejects_bad_weights():
    with pytest.raises(DataError):
        Representation(np.zeros((3, 1)), [1, 0, 1])
    with pytest.raises(DataError):
        Representation(np.zeros((3, 1)), [1, 1])


def test_structural_variance_examples():
    assert structural_variance(np.ones((5, 2)), np.zeros(5, int)) == 0
    assert structural_variance(np.array([[0.0], [2.0]]), [0, 0]) == pytest.approx(2.0)


def test_structural_variance_matches_recomputation(rng):
    pts = rng.standard_normal((20, 3))
    w = rng.uniform(0.5, 2, 20)
    labels = rng.integers(0, 4, 20)
    got = structural_variance(Representation(pts, w), labels)
    assert got == pytest.approx(weighted_sse(pts, w, labels), abs=1e-12)


def test_structural_variance_allows_empty_label():
    pts = np.array([[0.0], [1.0], [5.0]])
    assert structural_variance(pts, [0, 0, 2]) == pytest.approx(0.5)


def test_kmeans_level_sets():
    pts = np.repeat([[0.0, 0.0], [3.0, 1.0], [-2.0, 4.0]], [4, 2, 5], axis=0)
    res = kmeans(pts, 3, seed=1)
    assert res.within_variance == 0
    np.testing.assert_array_equal(res.labels, np.repeat([0, 1, 2], [4, 2, 5]))
    assert not res.degenerate


def test_kmeans_single_cluster(rng):
    pts = rng.standard_normal((15, 2))
    w = rng.uniform(1, 3, 15)
    res = kmeans(Representation(pts, w), 1)
    np.testing.assert_allclose(res.centers[0], np.average(pts, axis=0, weights=w))
    assert res.within_variance == pytest.approx(weighted_sse(pts, w, np.zeros(15, int)))


def test_kmeans_two_tight_groups_matches_brute_force(rng):
    pts = np.r_[rng.normal(0, 0.1, (4, 2)), rng.normal(5, 0.1, (4, 2))]
    res = kmeans(pts, 2, seed=3)
    assert res.within_variance == pytest.approx(brute_force_kmeans(pts, np.ones(8), 2), abs=1e-9)
    assert same_partition(res.labels, [0] * 4 + [1] * 4)


def test_kmeans_rejects_too_many_clusters():
    with pytest.raises(ParameterError):
        kmeans(np.zeros((3, 1)), 4)
    with pytest.raises(ParameterError):
        kmeans(np.zeros((3, 1)), 2, restarts=0)


def test_kmeans_more_clusters_than_distinct_points():
    res = kmeans(np.zeros((4, 1)), 3)
    assert res.within_variance == 0
    assert np.unique(res.labels).size == 3


def test_kmeans_deterministic_per_seed(rng):
    pts = rng.standard_normal((40, 3))
    a = kmeans(pts, 4, seed=11, restarts=3)
    b = kmeans(pts, 4, seed=11, restarts=3)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert a.within_variance == b.within_variance


@given(st.integers(2, 30), st.integers(1, 4), st.integers(1, 3), seeds)
def test_kmeans_invariants(n, k, dim, seed):
    k = min(k, n)
    r = np.random.default_rng(seed)
    pts = r.standard_normal((n, dim))
    w = r.uniform(0.1, 3.0, n)
    rep = Representation(pts, w)
    res = kmeans(rep, k, seed=seed, restarts=3)
    # canonical labels: first occurrences appear in increasing order
    _, first = np.unique(res.labels, return_index=True)
    assert np.all(np.diff(res.labels[np.sort(first)]) == 1)
    assert res.labels[0] == 0
    assert res.within_variance == pytest.approx(structural_variance(rep, res.labels), abs=1e-10)
    for j in range(res.n_clusters):
        mask = res.labels == j
        if mask.any():
            np.testing.assert_allclose(res.centers[j], np.average(pts[mask], axis=0,
                                                                  weights=w[mask]), atol=1e-10)
    hist = np.array(res.history)
    assert np.all(np.diff(hist) <= 1e-10 * max(hist[0], 1.0))
    assert res.n_iter <= 300


@given(st.integers(3, 40), seeds)
def test_kmeans_not_worse_than_planted(n, seed):
    r = np.random.default_rng(seed)
    truth = r.integers(0, 3, n)
    pts = r.standard_normal((n, 2)) * 0.3 + np.array([[0, 0], [4, 0], [0, 4]])[truth]
    res = kmeans(pts, 3, seed=seed, restarts=10)
    assert res.within_variance <= structural_variance(pts, truth) + 1e-9


def test_weighted_equals_unweighted_with_uniform_weights(rng):
    pts = rng.standard_normal((25, 2))
    a = kmeans(Representation(pts, np.full(25, 3.0)), 3, seed=2)
    b = kmeans(pts, 3, seed=2)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert a.within_variance == pytest.approx(3 * b.within_variance)


def test_brute_force_small_instances(rng):
    hits = 0
    for _ in range(30):
        n = int(rng.integers(4, 9))
        k = int(rng.integers(2, 4))
        pts = rng.standard_normal((n, 2))
        w = rng.uniform(0.5, 2, n)
        res = kmeans(Representation(pts, w), k, seed=int(rng.integers(1 << 30)), restarts=50)
        hits += abs(res.within_variance - brute_force_kmeans(pts, w, k)) <= 1e-9
    assert hits >= 28


def test_canonical_and_same_partition():
    new, order = canonical_labels(np.array([2, 2, 0, 1, 0]))
    np.testing.assert_array_equal(new, [0, 0, 1, 2, 1])
    np.testing.assert_array_equal(order, [2, 0, 1])
    assert same_partition([1, 1, 0], [0, 0, 5])
    assert not same_partition([0, 1, 0], [0, 0, 1])
    assert not same_partition([0, 1], [0, 1, 1])


def test_choose_n_clusters(rng):
    pts = np.r_[rng.normal(0, 0.05, (10, 2)), rng.normal(3, 0.05, (10, 2)),
                rng.normal(-3, 0.05, (10, 2))]
    assert choose_n_clusters(pts, 6) == 3
    assert choose_n_clusters(np.zeros((5, 1)), 3) == 1


def test_weighted_kmeans_estimator(rng):
    X = np.r_[rng.normal(0, 0.1, (10, 2)), rng.normal(4, 0.1, (10, 2))]
    est = WeightedKMeans(n_clusters=2, restarts=3, random_state=0).fit(X)
    assert same_partition(est.labels_, [0] * 10 + [1] * 10)
    np.testing.assert_array_equal(est.predict(X), est.labels_)
    np.testing.assert_array_equal(est.fit_predict(X), est.labels_)
    assert est.get_params()["n_clusters"] == 2
    c = clone(est).set_params(n_clusters=3)
    assert c.n_clusters == 3 and not hasattr(c, "labels_")
    with pytest.raises(DataError):
        est.predict(np.zeros((2, 3)))


def test_weighted_kmeans_sample_weight(rng):
    X = rng.standard_normal((12, 2))
    w = rng.uniform(0.5, 2, 12)
    est = WeightedKMeans(3, random_state=4).fit(X, sample_weight=w)
    assert est.inertia_ == pytest.approx(weighted_sse(X, w, est.labels_))
