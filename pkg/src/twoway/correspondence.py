"""Correspondence transformation of nonnegative matrices.

``M_corr = D_row^{-1/2} M D_col^{-1/2}`` with ``D_row``/``D_col`` the
diagonal matrices of row and column sums. Its leading singular value is 1
(with singular vectors proportional to the square-rooted marginals) and the
transformation is invariant to rescaling ``M``. Correspondence vectors are
singular vectors rescaled back by ``D^{-1/2}``; the first pair is constant
and carries no information, so clustering uses the remaining coordinates
weighted by the marginals.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .clustering import Representation, kmeans
from .exceptions import DataError, ParameterError
from .model import as_pattern, check_compatible
from .spectra import SvdResult, exact_blownup_svd, thin_svd
from .validation import check_matrix, check_positive_int, check_vector

ONE_TOL = 1e-6


@dataclass(frozen=True)
class CorrespondenceDecomposition:
    normalized: np.ndarray
    row_sums: np.ndarray
    col_sums: np.ndarray
    svd: Optional[SvdResult] = None
    corr_left: Optional[np.ndarray] = None
    corr_right: Optional[np.ndarray] = None


def corr_transform(M):
    """Divide every entry by the square root of its row sum times column sum."""
    M = check_matrix(M, "M", nonnegative=True)
    row_sums = M.sum(axis=1)
    col_sums = M.sum(axis=0)
    zero_rows = np.flatnonzero(row_sums <= 0)
    if zero_rows.size:
        raise DataError(f"row {int(zero_rows[0])} is identically zero")
    zero_cols = np.flatnonzero(col_sums <= 0)
    if zero_cols.size:
        raise DataError(f"column {int(zero_cols[0])} is identically zero")
    normalized = M / np.sqrt(np.outer(row_sums, col_sums))
    return CorrespondenceDecomposition(normalized, row_sums, col_sums)


def corr_svd(dec, k=None):
    """Attach the top-``k`` SVD of the normalized matrix."""
    return replace(dec, svd=thin_svd(dec.normalized, k))


def corr_vectors(dec, k):
    """Correspondence vectors ``D_row^{-1/2} y_i`` and ``D_col^{-1/2} x_i``, i < k."""
    if dec.svd is None:
        raise ParameterError("decomposition has no SVD; call corr_svd first")
    k = check_positive_int(k, "k", maximum=dec.svd.k)
    left = dec.svd.left_vectors[:, :k] / np.sqrt(dec.row_sums)[:, None]
    right = dec.svd.right_vectors[:, :k] / np.sqrt(dec.col_sums)[:, None]
    return left, right


def correspondence(M, k):
    """Transform, decompose and compute ``k`` correspondence vector pairs."""
    dec = corr_svd(corr_transform(M), k)
    left, right = corr_vectors(dec, k)
    return replace(dec, corr_left=left, corr_right=right)


def one_multiplicity(values, tol=ONE_TOL):
    """Number of singular values within ``tol`` of 1."""
    return int(np.count_nonzero(np.abs(np.asarray(values) - 1.0) <= tol))


def corr_weighted_variance(corr_points, weights, k_parts, seed=0, restarts=10):
    """Marginal-weighted k-means on nontrivial correspondence coordinates."""
    pts = check_matrix(corr_points, "corr_points")
    w = check_vector(weights, "weights", length=pts.shape[0], positive=True)
    return kmeans(Representation(pts, w), k_parts, seed, restarts)


def corr_pattern(P, bs):
    """Pattern whose blow-up is the correspondence transform of ``blow_up(P, bs)``.

    Entry ``(i, j)`` is ``p_ij / sqrt(R_i C_j)`` with block row sums
    ``R_i = sum_l p_il n_l`` and block column sums ``C_j = sum_k p_kj m_k``.
    """
    P = as_pattern(P)
    check_compatible(P, bs)
    R = P.entries @ np.asarray(bs.col_sizes, dtype=float)
    C = np.asarray(bs.row_sizes, dtype=float) @ P.entries
    return P.entries / np.sqrt(np.outer(R, C))


def pattern_corr_spectrum(P, bs):
    """Nonzero singular values of the transformed blown-up matrix (rank(P) of them)."""
    return exact_blownup_svd(corr_pattern(P, bs), bs).singular_values


def pattern_delta(P, bs):
    """Smallest nonzero singular value of the transformed blown-up matrix."""
    return float(pattern_corr_spectrum(P, bs)[-1])


def corr_epsilon(m, n, tau):
    """``max(m**-tau, n**-tau)``."""
    if not 0 < tau < 0.5:
        raise ParameterError(f"tau must lie in (0, 1/2), got {tau}")
    return max(m ** -tau, n ** -tau)


def estimate_delta(values, r, eps):
    """Lower estimate of the smallest structural value: ``values[r-1] - eps``."""
    r = check_positive_int(r, "r", maximum=len(values))
    return float(values[r - 1] - eps)


def corr_variance_bound(r, delta, eps):
    """``r / (delta/eps - 1)**2``; ``inf`` when ``delta <= eps``."""
    if delta <= eps:
        return float("inf")
    return r / (delta / eps - 1.0) ** 2


class CorrespondenceAnalysis(TransformerMixin, BaseEstimator):
    """Correspondence analysis of a nonnegative table.

    Parameters
    ----------
    n_components : int, default=2
        Number of singular triplets kept, the trivial one included; the
        coordinates exposed have ``n_components - 1`` columns.

    Attributes
    ----------
    singular_values_ : ndarray of shape (n_components,)
    row_sums_, col_sums_ : ndarray
    row_coordinates_ : ndarray of shape (n_rows, n_components - 1)
    column_coordinates_ : ndarray of shape (n_cols, n_components - 1)
    one_multiplicity_ : int
    """

    def __init__(self, n_components=2):
        self.n_components = n_components

    def fit(self, X, y=None):
        dec = correspondence(X, self.n_components)
        self.decomposition_ = dec
        self.singular_values_ = dec.svd.singular_values
        self.row_sums_ = dec.row_sums
        self.col_sums_ = dec.col_sums
        self.row_coordinates_ = dec.corr_left[:, 1:]
        self.column_coordinates_ = dec.corr_right[:, 1:]
        self.one_multiplicity_ = one_multiplicity(self.singular_values_)
        self.n_features_in_ = dec.normalized.shape[1]
        return self

    def transform(self, X):
        """Nontrivial coordinates of the rows of ``X`` as supplementary points.

        For the training table this reproduces ``row_coordinates_``.
        """
        check_is_fitted(self, "decomposition_")
        X = check_matrix(X, "X", nonnegative=True)
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        sums = X.sum(axis=1)
        if np.any(sums <= 0):
            raise DataError(f"row {int(np.flatnonzero(sums <= 0)[0])} is identically zero")
        dec = self.decomposition_
        coords = (X / sums[:, None]) @ dec.corr_right / dec.svd.singular_values
        return coords[:, 1:]
