"""Singular value decompositions, dilations and spectral-gap detection.

Dense SVDs go through LAPACK (``gesdd``, falling back to ``gesvd``), both
of which reduce to bidiagonal form with Householder reflections first, so
small singular values are computed to full relative accuracy in the
backward-stable sense.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import DataError
from .model import check_compatible, as_pattern
from .validation import check_matrix, check_positive_int, check_positive_real

DEFAULT_GAP_THRESHOLD = 3.0


@dataclass(frozen=True)
class SvdResult:
    """Leading singular triplets, ``M @ right_vectors[:, i] == s_i * left_vectors[:, i]``."""

    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    @property
    def k(self):
        return self.singular_values.shape[0]

    def truncated(self, k):
        k = check_positive_int(k, "k", minimum=0, maximum=self.k)
        return SvdResult(self.singular_values[:k], self.left_vectors[:, :k],
                         self.right_vectors[:, :k])

    def reconstruct(self):
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


@dataclass(frozen=True)
class GapDecision:
    """Number ``k`` of values at or above ``threshold`` and the ratio ``s_k / s_{k+1}``.

    ``gap_ratio`` is ``inf`` when ``s_{k+1}`` is zero or absent and ``nan``
    when ``k == 0``.
    """

    k: int
    threshold: float
    gap_ratio: float


def _canonical_signs(U, V):
    # Flip each pair so the left vector's first near-maximal coordinate is
    # positive; "near" absorbs rounding between equal piecewise-constant entries.
    if U.shape[1] == 0:
        return U, V
    mag = np.abs(U)
    peak = mag.max(axis=0)
    idx = np.argmax(mag >= peak * (1.0 - 1e-8), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, V * signs


def _lapack_svd(M, compute_uv=True):
    try:
        return scipy.linalg.svd(M, full_matrices=False, compute_uv=compute_uv,
                                check_finite=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        return scipy.linalg.svd(M, full_matrices=False, compute_uv=compute_uv,
                                check_finite=False, lapack_driver="gesvd")


def thin_svd(M, k=None):
    """Top-``k`` singular triplets of ``M`` (all ``min(m, n)`` when ``k`` is None).

    Vector pairs are sign-normalised so that the left vector's
    largest-magnitude coordinate is positive.
    """
    M = check_matrix(M, "M")
    kmax = min(M.shape)
    k = kmax if k is None else check_positive_int(k, "k", maximum=kmax)
    U, s, Vt = _lapack_svd(M)
    U, V = _canonical_signs(U[:, :k], Vt[:k].T)
    return SvdResult(s[:k].copy(), np.ascontiguousarray(U), np.ascontiguousarray(V))


def singular_values(M):
    """All singular values of ``M`` in descending order."""
    M = check_matrix(M, "M")
    return _lapack_svd(M, compute_uv=False)


def spectral_norm(M):
    """Largest singular value of ``M``."""
    return float(singular_values(M)[0])


def numerical_rank(values, shape):
    """Count values above ``max(m, n) * eps * s_1``."""
    values = np.asarray(values, dtype=float)
    if values.size == 0 or values[0] <= 0:
        return 0
    tol = max(shape) * np.finfo(float).eps * values[0]
    return int(np.count_nonzero(values > tol))


def shrunken_pattern(P, bs):
    """The ``a x b`` matrix ``diag(m_i/m)^(1/2) P diag(n_j/n)^(1/2)``.

    Its nonzero singular values are those of the blown-up matrix divided by
    ``sqrt(m n)``; they do not depend on the sizes once the block
    proportions are fixed.
    """
    P = as_pattern(P, check_support=False)
    check_compatible(P, bs)
    rm = np.sqrt(np.asarray(bs.row_sizes, dtype=float) / bs.m)
    cn = np.sqrt(np.asarray(bs.col_sizes, dtype=float) / bs.n)
    return rm[:, None] * P.entries * cn[None, :]


def exact_blownup_svd(P, bs):
    """SVD of ``blow_up(P, bs)`` computed from the ``a x b`` reduction.

    With ``S = D_m^{1/2} P D_n^{1/2}`` (``D_m = diag(m_i)``, ``D_n = diag(n_j)``)
    and ``S = Z diag(s) W^T``, the blown-up matrix has singular values ``s``
    and singular vectors that are constant ``z_i / sqrt(m_i)`` on row block
    ``i`` and ``w_j / sqrt(n_j)`` on column block ``j``. Only the ``rank(P)``
    nonzero triplets are returned.
    """
    P = as_pattern(P, check_support=False)
    check_compatible(P, bs)
    rm = np.sqrt(np.asarray(bs.row_sizes, dtype=float))
    cn = np.sqrt(np.asarray(bs.col_sizes, dtype=float))
    S = rm[:, None] * P.entries * cn[None, :]
    Z, s, Wt = _lapack_svd(S)
    r = numerical_rank(s, (bs.m, bs.n))
    left_small = Z[:, :r] / rm[:, None]
    right_small = Wt[:r].T / cn[:, None]
    U = left_small[bs.row_labels()]
    V = right_small[bs.col_labels()]
    U, V = _canonical_signs(U, V)
    return SvdResult(s[:r].copy(), U, V)


def dilate(W, K=1.0):
    """Symmetric ``(m+n) x (m+n)`` matrix ``[[0, W], [W^T, 0]] / K``.

    Its eigenvalues are ``+-s_i(W)/K`` plus ``|m - n|`` zeros.
    """
    W = check_matrix(W, "W")
    K = check_positive_real(K, "K")
    m, n = W.shape
    out = np.zeros((m + n, m + n))
    out[:m, m:] = W / K
    out[m:, :m] = W.T / K
    return out


def detect_gap(values, m, n, t=DEFAULT_GAP_THRESHOLD):
    """Count the singular values at or above ``t * sqrt(m + n)``.

    Values of a noisy blown-up matrix split into ``rank(P)`` values of order
    ``sqrt(m n)`` and a bulk of order ``sqrt(m + n)``; a fixed multiple of
    ``sqrt(m + n)`` separates them at moderate sizes.
    """
    values = np.asarray(values, dtype=float).ravel()
    m = check_positive_int(m, "m")
    n = check_positive_int(n, "n")
    t = check_positive_real(t, "t")
    if values.size and (not np.all(np.isfinite(values)) or np.any(values < 0)):
        raise DataError("singular values must be finite and nonnegative")
    if np.any(np.diff(values) > 0):
        raise DataError("singular values must be in descending order")
    threshold = t * np.sqrt(m + n)
    k = int(np.count_nonzero(values >= threshold))
    if k == 0:
        ratio = float("nan")
    elif k == values.size or values[k] == 0:
        ratio = float("inf")
    else:
        with np.errstate(over="ignore"):
            ratio = float(values[k - 1] / values[k])
    return GapDecision(k=k, threshold=float(threshold), gap_ratio=ratio)



def rank_gap(values, shape):
    """Gap decision for a noiseless matrix: ``k`` is the numerical rank.

    The threshold is the numerical-zero cutoff ``max(m, n) * eps * s_1``.
    """
    values = np.asarray(values, dtype=float).ravel()
    k = numerical_rank(values, shape)
    threshold = max(shape) * np.finfo(float).eps * values[0] if values.size else 0.0
    if k == 0:
        ratio = float("nan")
    elif k == values.size or values[k] == 0:
        ratio = float("inf")
    else:
        ratio = float(values[k - 1] / values[k])
    return GapDecision(k=k, threshold=float(threshold), gap_ratio=ratio)
