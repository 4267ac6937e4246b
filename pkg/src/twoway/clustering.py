"""Spectral representatives and weighted k-means.

The k-means objective is the weighted within-cluster sum of squares

    sum_j w_j || y_j - c(label_j) ||^2,   c = weighted mean of the cluster,

which is the ``a``-variance of the representatives when minimised over all
partitions into ``a`` parts (unit weights), or its marginal-weighted
counterpart in correspondence analysis (row or column sums as weights).
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import DataError, ParameterError
from .validation import check_labels, check_matrix, check_positive_int, check_vector

MAX_ITER = 300
TOL = 1e-9


@dataclass(frozen=True)
class Representation:
    """``N`` points in ``R^k`` with positive weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = check_matrix(self.points, "points")
        w = check_vector(self.weights, "weights", length=pts.shape[0], positive=True)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def unweighted(cls, points):
        points = check_matrix(points, "points")
        return cls(points, np.ones(points.shape[0]))

    @property
    def n_points(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]


@dataclass(frozen=True)
class Clustering:
    """Result of :func:`kmeans`.

    ``labels`` are 0-based and canonical: clusters are numbered in order of
    their first member. ``history`` is the objective after each Lloyd step
    of the winning restart.
    """

    labels: np.ndarray
    centers: np.ndarray
    within_variance: float
    n_iter: int = 0
    degenerate: bool = False
    history: tuple = field(default=(), repr=False)

    @property
    def n_clusters(self):
        return self.centers.shape[0]


def _as_rep(rep):
    if isinstance(rep, Representation):
        return rep
    return Representation.unweighted(rep)


def representatives(svd, side, k):
    """Rows of the first ``k`` left (``side='left'``) or right singular vectors."""
    if side not in ("left", "right"):
        raise ParameterError(f"side must be 'left' or 'right', got {side!r}")
    k = check_positive_int(k, "k", maximum=svd.k)
    vectors = svd.left_vectors if side == "left" else svd.right_vectors
    return Representation.unweighted(vectors[:, :k])


def weighted_centers(points, weights, labels, n_clusters):
    """Weighted mean of every cluster; empty clusters get a zero row."""
    sums = np.zeros((n_clusters, points.shape[1]))
    np.add.at(sums, labels, points * weights[:, None])
    mass = np.bincount(labels, weights=weights, minlength=n_clusters)
    centers = np.zeros_like(sums)
    nonempty = mass > 0
    centers[nonempty] = sums[nonempty] / mass[nonempty, None]
    return centers


def structural_variance(rep, labels):
    """Weighted within-cluster sum of squares for a fixed partition.

    Centers are the weighted cluster means; an empty label contributes 0.
    """
    rep = _as_rep(rep)
    labels = check_labels(labels, rep.n_points)
    if labels.size == 0:
        return 0.0
    n_clusters = int(labels.max()) + 1
    centers = weighted_centers(rep.points, rep.weights, labels, n_clusters)
    resid = rep.points - centers[labels]
    return float(np.sum(rep.weights * np.einsum("ij,ij->i", resid, resid)))


def _sq_dists(points, centers):
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _kmeanspp(points, weights, k, rng):
    n = points.shape[0]
    chosen = [int(rng.choice(n, p=weights / weights.sum()))]
    closest = _sq_dists(points, points[chosen])[:, 0]
    for _ in range(1, k):
        pot = weights * closest
        total = pot.sum()
        if total > 0:
            idx = int(rng.choice(n, p=pot / total))
        else:
            # fewer distinct points than clusters
            free = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(free))
        chosen.append(idx)
        closest = np.minimum(closest, _sq_dists(points, points[[idx]])[:, 0])
    return points[chosen].copy()


def _fill_empty(labels, d2, k):
    """Move the point farthest from its own center into each empty cluster."""
    counts = np.bincount(labels, minlength=k)
    for j in np.flatnonzero(counts == 0):
        own = d2[np.arange(labels.size), labels].copy()
        own[counts[labels] <= 1] = -np.inf
        idx = int(np.argmax(own))
        counts[labels[idx]] -= 1
        labels[idx] = j
        counts[j] = 1
    return labels


def _objective(points, weights, labels, centers):
    resid = points - centers[labels]
    return float(np.sum(weights * np.einsum("ij,ij->i", resid, resid)))


def _lloyd(points, weights, k, rng, max_iter, tol):
    centers = _kmeanspp(points, weights, k, rng)
    history = []
    labels = None
    prev = np.inf
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d2 = _sq_dists(points, centers)
        new_labels = _fill_empty(np.argmin(d2, axis=1), d2, k)
        centers = weighted_centers(points, weights, new_labels, k)
        obj = _objective(points, weights, new_labels, centers)
        history.append(obj)
        converged = labels is not None and np.array_equal(labels, new_labels)
        labels = new_labels
        if converged or obj == 0.0 or abs(prev - obj) < tol * prev:
            break
        prev = obj
    return labels, centers, history, n_iter


def canonical_labels(labels):
    """Renumber clusters by first occurrence; returns ``(new_labels, order)``."""
    labels = np.asarray(labels)
    _, first = np.unique(labels, return_index=True)
    order = labels[np.sort(first)]
    remap = np.empty(int(labels.max()) + 1, dtype=np.intp)
    remap[order] = np.arange(order.size)
    return remap[labels], order


def kmeans(rep, k, seed=0, restarts=10, *, max_iter=MAX_ITER, tol=TOL):
    """Weighted k-means with k-means++ seeding and ``restarts`` initialisations.

    Returns the restart with the lowest objective (earliest on ties). Each
    restart draws from its own child of ``np.random.SeedSequence(seed)``.
    """
    rep = _as_rep(rep)
    k = check_positive_int(k, "k")
    if k > rep.n_points:
        raise ParameterError(f"k={k} exceeds the number of points {rep.n_points}")
    restarts = check_positive_int(restarts, "restarts")
    best = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        labels, centers, history, n_iter = _lloyd(rep.points, rep.weights, k, rng,
                                                  max_iter, tol)
        obj = history[-1]
        if best is None or obj < best[0]:
            best = (obj, labels, centers, history, n_iter)
    _, labels, centers, history, n_iter = best
    labels, order = canonical_labels(labels)
    centers = centers[order]
    degenerate = np.unique(labels).size < k
    return Clustering(
        labels=labels,
        centers=centers,
        within_variance=structural_variance(rep, labels),
        n_iter=n_iter,
        degenerate=bool(degenerate),
        history=tuple(history),
    )


def same_partition(labels_a, labels_b):
    """True when two labelings define the same partition (up to renaming)."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape:
        return False
    if a.size == 0:
        return True
    return bool(np.array_equal(canonical_labels(a)[0], canonical_labels(b)[0]))


def choose_n_clusters(rep, max_clusters, *, min_drop=0.10, seed=0, restarts=10):
    """Heuristic cluster count: smallest ``a`` whose next split gains < ``min_drop``.

    The gain of going from ``a`` to ``a + 1`` clusters is the decrease of the
    k-means objective relative to the total scatter (the one-cluster
    objective). This is a convenience for unknown block counts; the recovery
    guarantees assume the counts are given.
    """
    rep = _as_rep(rep)
    max_clusters = check_positive_int(max_clusters, "max_clusters", maximum=rep.n_points)
    total = prev = kmeans(rep, 1, seed, restarts).within_variance
    if total == 0:
        return 1
    for a in range(1, max_clusters):
        cur = kmeans(rep, a + 1, seed, restarts).within_variance
        if (prev - cur) / total < min_drop:
            return a
        prev = cur
    return max_clusters


class WeightedKMeans(ClusterMixin, BaseEstimator):
    """Estimator wrapper around :func:`kmeans`.

    Parameters
    ----------
    n_clusters : int, default=2
    restarts : int, default=10
        Number of k-means++ initialisations; the best objective wins.
    max_iter : int, default=300
    tol : float, default=1e-9
        Relative objective change that stops the Lloyd iterations.
    random_state : int, default=0
        Seed of the restart sequence.

    Attributes
    ----------
    labels_ : ndarray of shape (n_samples,)
    cluster_centers_ : ndarray of shape (n_clusters, n_features)
    inertia_ : float
        Weighted within-cluster sum of squares.
    n_iter_ : int
    """

    def __init__(self, n_clusters=2, restarts=10, max_iter=MAX_ITER, tol=TOL, random_state=0):
        self.n_clusters = n_clusters
        self.restarts = restarts
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y=None, sample_weight=None):
        X = check_matrix(X, "X")
        w = np.ones(X.shape[0]) if sample_weight is None else sample_weight
        result = kmeans(Representation(X, w), self.n_clusters, self.random_state,
                        self.restarts, max_iter=self.max_iter, tol=self.tol)
        self.labels_ = result.labels
        self.cluster_centers_ = result.centers
        self.inertia_ = result.within_variance
        self.n_iter_ = result.n_iter
        self.n_features_in_ = X.shape[1]
        self.clustering_ = result
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_matrix(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return np.argmin(_sq_dists(X, self.cluster_centers_), axis=1)
