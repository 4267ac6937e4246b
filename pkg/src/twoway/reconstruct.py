"""Recover a blown-up matrix behind a noisy matrix with a few large singular values.

Pipeline for ``A`` with ``k`` protruding singular values ``z_1..z_k`` and
singular vectors ``Y = (y_1..y_k)``, ``X = (x_1..x_k)``:

1. cluster the rows of ``Y`` into ``a`` groups and the rows of ``X`` into ``b``;
2. replace each representative by its cluster center, giving piecewise
   constant ``Y~`` and ``X~`` whose column spans are ``F`` and ``G``;
3. pick orthonormal bases ``V'`` of ``F`` and ``U'`` of ``G`` and rotate them
   onto ``Y`` and ``X``: with ``Y^T V' = Q S Z^T``, ``V = V' Z Q^T``
   minimises ``sum ||y_i - v_i||^2`` over orthonormal systems in ``F``;
4. ``B_hat = sum_i z_i v_i u_i^T``.

Because ``F`` and ``G`` consist of vectors constant on the found clusters,
``B_hat`` is a blown-up matrix; everything is computed on the ``a x k`` and
``b x k`` cluster-level coordinates and expanded at the end, so the blocks
are constant to the last bit.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, BiclusterMixin
from sklearn.utils.validation import check_is_fitted

from .clustering import Representation, kmeans
from .exceptions import NoStructureError, ParameterError, StructuralError
from .spectra import DEFAULT_GAP_THRESHOLD, detect_gap, spectral_norm, thin_svd
from .validation import check_matrix, check_orthonormal, check_positive_int

WEAK_GAP = 0.99
RANK_TOL = 1e-10


class WeakGapWarning(UserWarning):
    """``s_{k+1}`` is within 1% of ``s_k``; the requested ``k`` is not well separated."""


@dataclass(frozen=True)
class ReconstructionResult:
    B_hat: np.ndarray
    residual_norm: float
    row_partition: np.ndarray
    col_partition: np.ndarray
    aligned_left: np.ndarray
    aligned_right: np.ndarray
    alignment_errors: tuple
    singular_values: np.ndarray
    residual_bound: float
    core: np.ndarray
    weak_gap: bool = False

    @property
    def row_order(self):
        """Row permutation that groups rows by cluster."""
        return np.argsort(self.row_partition, kind="stable")

    @property
    def col_order(self):
        return np.argsort(self.col_partition, kind="stable")

    def report(self):
        return {
            "residual_norm": self.residual_norm,
            "residual_bound": self.residual_bound,
            "alignment_error_left": self.alignment_errors[0],
            "alignment_error_right": self.alignment_errors[1],
            "singular_values": [float(s) for s in self.singular_values],
            "n_row_clusters": int(self.core.shape[0]),
            "n_col_clusters": int(self.core.shape[1]),
            "weak_gap": self.weak_gap,
            "core": self.core.tolist(),
        }


def subspace_distances(vectors, basis):
    """Euclidean distance from each column of ``vectors`` to ``span(basis)``."""
    basis = check_orthonormal(basis, "basis")
    vectors = check_matrix(vectors, "vectors")
    if vectors.shape[0] != basis.shape[0]:
        raise StructuralError("vectors and basis live in spaces of different dimension")
    resid = vectors - basis @ (basis.T @ vectors)
    return np.linalg.norm(resid, axis=0)


def _procrustes_rotation(cross):
    # cross = Y^T V' = Q S Z^T  ->  R = Z Q^T
    Q, _, Zt = np.linalg.svd(cross)
    return Zt.T @ Q.T


def align_orthonormal(Y, F_basis):
    """Orthonormal system in ``span(F_basis)`` closest to the columns of ``Y``.

    Returns ``V = F_basis @ R`` with ``R`` the orthogonal Procrustes
    rotation; ``sum ||y_i - v_i||^2`` is minimal over such systems.
    """
    Y = check_orthonormal(Y, "Y")
    F_basis = check_matrix(F_basis, "F_basis")
    if F_basis.shape != Y.shape:
        raise StructuralError(f"F_basis has shape {F_basis.shape}, expected {Y.shape}")
    s = np.linalg.svd(F_basis, compute_uv=False)
    if s[-1] < RANK_TOL * max(s[0], 1.0) or np.abs(s - 1).max() > 1e-6:
        raise StructuralError("F_basis must have k orthonormal, linearly independent columns")
    return F_basis @ _procrustes_rotation(Y.T @ F_basis)


def alignment_error(Y, V):
    return float(np.sum((Y - V) ** 2))


def _cluster_basis(centers, sizes, k):
    """Cluster-level coordinates of an orthonormal basis of the blown-up center span.

    The span of ``E C`` (``E`` the m x a membership matrix) has orthonormal
    basis ``E D^{-1/2} Q`` where ``D^{1/2} C = Q R`` (pivoted QR).
    """
    root = np.sqrt(sizes.astype(float))
    Q, R, _ = scipy.linalg.qr(root[:, None] * centers, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size < k or diag[k - 1] <= RANK_TOL * max(diag[0], 1e-300):
        raise StructuralError(
            f"cluster centers span fewer than k={k} dimensions; use more clusters or a smaller k"
        )
    return Q[:, :k] / root[:, None]


def _side(vectors, n_clusters, seed, restarts):
    clustering = kmeans(Representation.unweighted(vectors), n_clusters, seed, restarts)
    labels = clustering.labels
    sizes = np.bincount(labels, minlength=n_clusters)
    if np.any(sizes == 0):
        raise StructuralError("k-means returned an empty cluster")
    k = vectors.shape[1]
    basis_small = _cluster_basis(clustering.centers, sizes, k)
    # Y^T V' computed from cluster sums of Y
    sums = np.zeros((n_clusters, k))
    np.add.at(sums, labels, vectors)
    rotation = _procrustes_rotation(sums.T @ basis_small)
    aligned_small = basis_small @ rotation
    return labels, aligned_small, clustering


def reconstruct(A, k, a, b, seed=0, restarts=10, *, svd=None):
    """Blown-up approximation of ``A`` with ``a x b`` blocks and rank ``k``.

    Parameters
    ----------
    A : array-like of shape (m, n)
    k : int
        Number of protruding singular values; ``1 <= k <= min(a, b)``.
    a, b : int
        Number of row and column clusters.
    seed, restarts : int
        Passed to :func:`twoway.clustering.kmeans`.
    svd : SvdResult, optional
        Precomputed SVD of ``A`` with at least ``k`` triplets.
    """
    A = check_matrix(A, "A")
    m, n = A.shape
    if isinstance(k, (int, np.integer)) and not isinstance(k, bool) and k == 0:
        raise NoStructureError("no protruding structure: k = 0")
    k = check_positive_int(k, "k")
    a = check_positive_int(a, "a", maximum=m)
    b = check_positive_int(b, "b", maximum=n)
    if k > min(a, b):
        raise ParameterError(f"k={k} must not exceed min(a, b)={min(a, b)}")
    if svd is None or svd.k < min(k + 1, min(m, n)):
        svd = thin_svd(A, min(k + 1, min(m, n)))
    z = svd.singular_values
    Y = svd.left_vectors[:, :k]
    X = svd.right_vectors[:, :k]
    if z[k - 1] <= 0:
        raise NoStructureError(f"A has fewer than k={k} nonzero singular values")
    tail = float(z[k]) if z.size > k else 0.0
    weak = tail >= WEAK_GAP * z[k - 1]
    if weak:
        warnings.warn(
            f"s_(k+1)={tail:.6g} is within 1% of s_k={z[k - 1]:.6g}; the gap is weak",
            WeakGapWarning,
            stacklevel=2,
        )

    row_labels, v_small, _ = _side(Y, a, seed, restarts)
    col_labels, u_small, _ = _side(X, b, seed, restarts)
    core = (v_small * z[:k]) @ u_small.T
    B_hat = core[row_labels][:, col_labels]
    V = v_small[row_labels]
    U = u_small[col_labels]

    r_norms = np.linalg.norm(Y - V, axis=0)
    q_norms = np.linalg.norm(X - U, axis=0)
    bound = float(z[0] * (q_norms.sum() + r_norms.sum() + np.dot(r_norms, q_norms)) + tail)
    return ReconstructionResult(
        B_hat=B_hat,
        residual_norm=spectral_norm(A - B_hat),
        row_partition=row_labels,
        col_partition=col_labels,
        aligned_left=V,
        aligned_right=U,
        alignment_errors=(float(np.sum(r_norms ** 2)), float(np.sum(q_norms ** 2))),
        singular_values=z[:k].copy(),
        residual_bound=bound,
        core=core,
        weak_gap=bool(weak),
    )


class BlockReconstructor(BiclusterMixin, BaseEstimator):
    """Checkerboard biclustering by spectral reconstruction.

    Parameters
    ----------
    n_row_clusters, n_col_clusters : int, default=2
    n_components : int or None, default=None
        Number of protruding singular values; ``None`` detects it with
        :func:`twoway.spectra.detect_gap` (capped at the smaller cluster count).
    gap_threshold : float, default=3.0
    restarts : int, default=10
    random_state : int, default=0

    Attributes
    ----------
    B_hat_ : ndarray of shape (m, n)
    row_labels_, column_labels_ : ndarray
    rows_, columns_ : boolean ndarray of shape (n_row_clusters * n_col_clusters, m or n)
        Membership of every checkerboard cell, in the layout expected by
        :class:`sklearn.base.BiclusterMixin`.
    residual_norm_ : float
    n_components_ : int
    """

    def __init__(self, n_row_clusters=2, n_col_clusters=2, n_components=None,
                 gap_threshold=DEFAULT_GAP_THRESHOLD, restarts=10, random_state=0):
        self.n_row_clusters = n_row_clusters
        self.n_col_clusters = n_col_clusters
        self.n_components = n_components
        self.gap_threshold = gap_threshold
        self.restarts = restarts
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_matrix(X, "X")
        m, n = X.shape
        svd = thin_svd(X)
        k = self.n_components
        if k is None:
            self.gap_ = detect_gap(svd.singular_values, m, n, self.gap_threshold)
            k = min(self.gap_.k, self.n_row_clusters, self.n_col_clusters)
        result = reconstruct(X, k, self.n_row_clusters, self.n_col_clusters,
                             self.random_state, self.restarts, svd=svd)
        self.result_ = result
        self.n_components_ = k
        self.B_hat_ = result.B_hat
        self.residual_norm_ = result.residual_norm
        self.row_labels_ = result.row_partition
        self.column_labels_ = result.col_partition
        a, b = self.n_row_clusters, self.n_col_clusters
        self.rows_ = np.vstack([self.row_labels_ == i for i in range(a) for _ in range(b)])
        self.columns_ = np.vstack([self.column_labels_ == j for _ in range(a) for j in range(b)])
        self.n_features_in_ = n
        return self

    def transform(self, X):
        """Block means of ``X`` over the fitted checkerboard, expanded to full size."""
        check_is_fitted(self, "result_")
        X = check_matrix(X, "X")
        if X.shape != self.B_hat_.shape:
            raise StructuralError(f"X has shape {X.shape}, expected {self.B_hat_.shape}")
        means = cell_means(X, self.row_labels_, self.column_labels_)
        return means[self.row_labels_][:, self.column_labels_]


def cell_means(X, row_labels, col_labels):
    """Mean of ``X`` over every (row cluster, column cluster) cell."""
    row_labels = np.asarray(row_labels)
    col_labels = np.asarray(col_labels)
    a = int(row_labels.max()) + 1
    b = int(col_labels.max()) + 1
    R = np.zeros((a, X.shape[0]))
    R[row_labels, np.arange(X.shape[0])] = 1.0
    C = np.zeros((X.shape[1], b))
    C[np.arange(X.shape[1]), col_labels] = 1.0
    counts = np.outer(R.sum(axis=1), C.sum(axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, (R @ X @ C) / counts, 0.0)
