import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twoway.exceptions import DataError, ParameterError, StructuralError
from twoway.model import BlockStructure, PatternMatrix, blow_up
from twoway.spectra import (
    detect_gap,
    dilate,
    exact_blownup_svd,
    numerical_rank,
    spectral_norm,
    thin_svd,
)

from strategies import planted, seeds


def gram_singular_values(M):
    # test-only oracle: eigenvalues of the Gram matrix
    M = np.asarray(M, dtype=float)
    G = M.T @ M if M.shape[0] >= M.shape[1] else M @ M.T
    ev = np.linalg.eigvalsh(G)[::-1]
    return np.sqrt(np.clip(ev, 0, None))


def assert_svd_invariants(M, svd, tol=1e-8):
    U, V, s = svd.left_vectors, svd.right_vectors, svd.singular_values
    k = s.size
    assert np.abs(U.T @ U - np.eye(k)).max() < tol
    assert np.abs(V.T @ V - np.eye(k)).max() < tol
    assert np.all(np.diff(s) <= 0)
    scale = max(s[0], 1.0) if k else 1.0
    np.testing.assert_allclose(M @ V, U * s, atol=tol * scale)


def test_thin_svd_identity_and_diagonal():
    np.testing.assert_allclose(thin_svd(np.eye(2), 2).singular_values, [1, 1])
    np.testing.assert_allclose(thin_svd([[3, 0], [0, 4]], 2).singular_values, [4, 3])


def test_thin_svd_matches_gram_oracle(rng):
    M = rng.standard_normal((6, 4))
    svd = thin_svd(M, 4)
    np.testing.assert_allclose(svd.singular_values, gram_singular_values(M), atol=1e-10)
    assert_svd_invariants(M, svd)


def test_thin_svd_errors():
    with pytest.raises(ParameterError):
        thin_svd(np.ones((3, 2)), 3)
    with pytest.raises(ParameterError):
        thin_svd(np.ones((3, 2)), 0)
    with pytest.raises(DataError):
        thin_svd([[1.0, np.nan]], 1)
    with pytest.raises(DataError):
        thin_svd([[1.0, np.inf]], 1)


def test_thin_svd_sign_convention(rng):
    svd = thin_svd(rng.standard_normal((7, 5)))
    U = svd.left_vectors
    peaks = U[np.argmax(np.abs(U), axis=0), np.arange(U.shape[1])]
    assert np.all(peaks > 0)
    flipped = thin_svd(svd.reconstruct())
    np.testing.assert_allclose(flipped.left_vectors, U, atol=1e-10)


@given(st.integers(1, 12), st.integers(1, 12), seeds)
def test_thin_svd_invariants_random(m, n, seed):
    M = np.random.default_rng(seed).standard_normal((m, n))
    svd = thin_svd(M)
    assert_svd_invariants(M, svd)
    np.testing.assert_allclose(svd.singular_values, gram_singular_values(M)[: min(m, n)],
                               atol=1e-8 * max(1, svd.singular_values[0]))


def test_exact_single_block():
    svd = exact_blownup_svd(PatternMatrix([[0.3]]), BlockStructure((5,), (8,)))
    np.testing.assert_allclose(svd.singular_values, [0.3 * np.sqrt(40)])


def test_exact_identity_two_blocks():
    m, n = 10, 6
    svd = exact_blownup_svd(PatternMatrix(np.eye(2)), BlockStructure((5, 5), (3, 3)))
    np.testing.assert_allclose(svd.singular_values, [np.sqrt(m * n) / 2] * 2)


def test_exact_matches_dense(rng):
    P = PatternMatrix(rng.uniform(0.1, 1, size=(2, 3)))
    bs = BlockStructure((3, 4), (2, 2, 3))
    exact = exact_blownup_svd(P, bs)
    dense = thin_svd(blow_up(P, bs), exact.k)
    np.testing.assert_allclose(exact.singular_values, dense.singular_values, atol=1e-10)
    np.testing.assert_allclose(exact.left_vectors, dense.left_vectors, atol=1e-10)
    np.testing.assert_allclose(exact.right_vectors, dense.right_vectors, atol=1e-10)


def test_exact_drops_zero_values():
    P = PatternMatrix([[1, 2], [2, 4]])
    svd = exact_blownup_svd(P, BlockStructure((3, 2), (4, 1)))
    assert svd.k == 1


def test_exact_shape_mismatch():
    with pytest.raises(StructuralError):
        exact_blownup_svd(PatternMatrix([[1, 2]]), BlockStructure((2, 2), (3, 3)))


@given(planted(max_size=15))
def test_exact_agrees_with_dense_property(case):
    P, bs = case
    exact = exact_blownup_svd(P, bs)
    B = blow_up(P, bs)
    dense = np.linalg.svd(B, compute_uv=False)
    assert exact.k == P.rank()
    np.testing.assert_allclose(exact.singular_values, dense[: exact.k], rtol=1e-8)
    assert_svd_invariants(B, exact)
    # piecewise constant over blocks
    for i in range(bs.a):
        block = exact.left_vectors[bs.row_labels() == i]
        assert np.ptp(block, axis=0).max() <= 1e-12


@given(planted(max_size=10), st.floats(0.1, 10))
def test_exact_scale_invariance(case, alpha):
    P, bs = case
    base = exact_blownup_svd(P, bs)
    scaled = exact_blownup_svd(P.scaled(alpha), bs)
    assert scaled.k == base.k
    np.testing.assert_allclose(scaled.singular_values, alpha * base.singular_values, rtol=1e-10)
    # vectors agree up to sign (and up to rotation inside repeated values)
    for i in range(base.k):
        gap = np.min(np.abs(np.delete(base.singular_values, i) - base.singular_values[i]),
                     initial=np.inf)
        if gap > 1e-6 * base.singular_values[0]:
            dot = abs(base.left_vectors[:, i] @ scaled.left_vectors[:, i])
            assert dot == pytest.approx(1.0, abs=1e-8)


def test_dilate_examples():
    np.testing.assert_allclose(np.linalg.eigvalsh(dilate([[1.0]], 1.0)), [-1, 1])
    ev = np.linalg.eigvalsh(dilate([[2.0, 0], [0, 1.0]], 2.0))
    np.testing.assert_allclose(ev, [-1, -0.5, 0.5, 1])


def test_dilate_random_matches_svd(rng):
    W = rng.standard_normal((4, 3))
    ev = np.linalg.eigvalsh(dilate(W, 1.0))
    pos = np.sort(ev[ev > 1e-12])[::-1]
    np.testing.assert_allclose(pos, np.linalg.svd(W, compute_uv=False), atol=1e-10)


def test_dilate_rejects_bad_K():
    with pytest.raises(ParameterError):
        dilate(np.ones((2, 2)), 0.0)


@given(st.integers(1, 50), st.integers(1, 80), st.floats(0.1, 5), seeds)
def test_dilation_spectrum_property(m, n, K, seed):
    W = np.random.default_rng(seed).uniform(-1, 1, (m, n))
    D = dilate(W, K)
    np.testing.assert_array_equal(D, D.T)
    s = np.linalg.svd(W, compute_uv=False) / K
    expected = np.sort(np.concatenate([s, -s, np.zeros(abs(m - n))]))
    np.testing.assert_allclose(np.linalg.eigvalsh(D), expected, atol=1e-10)


def test_spectral_norm_examples(rng):
    assert spectral_norm(np.zeros((3, 4))) == 0
    assert spectral_norm(np.ones((4, 9))) == pytest.approx(6.0, rel=1e-12)
    M = rng.standard_normal((5, 7))
    assert spectral_norm(M) == pytest.approx(gram_singular_values(M)[0], abs=1e-10)
    # values-only and full LAPACK paths may differ in the last ulp
    assert spectral_norm(M) == pytest.approx(thin_svd(M, 1).singular_values[0], rel=1e-13)


def test_detect_gap_examples():
    g = detect_gap([500, 480, 9, 7], 100, 100, 3)
    assert g.k == 2
    assert g.threshold == pytest.approx(3 * np.sqrt(200))
    assert g.gap_ratio == pytest.approx(480 / 9)
    assert detect_gap([5, 4, 3], 100, 100, 3).k == 0
    assert detect_gap([], 100, 100).k == 0


def test_detect_gap_tie_counts_both():
    t = 3 * np.sqrt(200)
    assert detect_gap([t, t, 1.0], 100, 100).k == 2


def test_detect_gap_ratio_edge_cases():
    assert np.isnan(detect_gap([1.0], 10, 10).gap_ratio)
    assert detect_gap([100.0], 10, 10).gap_ratio == np.inf
    assert detect_gap([100.0, 0.0], 10, 10).gap_ratio == np.inf


def test_detect_gap_rejects_bad_input():
    with pytest.raises(DataError):
        detect_gap([1, 2], 10, 10)
    with pytest.raises(DataError):
        detect_gap([1, -1], 10, 10)
    with pytest.raises(ParameterError):
        detect_gap([1], 10, 10, t=0)


@given(st.lists(st.floats(0, 1e3), max_size=20), st.integers(1, 500), st.integers(1, 500),
       st.floats(0.1, 10))
def test_detect_gap_invariants(raw, m, n, t):
    values = sorted(raw, reverse=True)
    g = detect_gap(values, m, n, t)
    assert 0 <= g.k <= len(values)
    if g.k:
        assert values[g.k - 1] >= g.threshold
    if g.k < len(values):
        assert values[g.k] < g.threshold


def test_rank_gap():
    from twoway.spectra import rank_gap
    g = rank_gap([10.0, 1e-15, 0.0], (10, 10))
    assert g.k == 1 and g.gap_ratio == pytest.approx(1e16)
    assert rank_gap([], (3, 3)).k == 0
    assert rank_gap([50.0, 50.0, 0.0], (100, 100)).gap_ratio == np.inf


def test_numerical_rank():
    assert numerical_rank([], (3, 3)) == 0
    assert numerical_rank([1.0, 1e-20], (3, 3)) == 1
    assert numerical_rank([2.0, 1.0], (3, 3)) == 2


@given(planted(max_a=3, max_b=3, max_size=40), seeds, st.floats(0.05, 2.0))
def test_weyl_bound(case, seed, K):
    from twoway.model import NoiseSpec, sample_noise
    P, bs = case
    B = blow_up(P, bs)
    W = sample_noise(bs.m, bs.n, NoiseSpec("uniform", bound=K, seed=seed))
    sA = np.linalg.svd(B + W, compute_uv=False)
    sB = np.linalg.svd(B, compute_uv=False)
    assert np.abs(sA - sB).max() <= spectral_norm(W) + 1e-8
