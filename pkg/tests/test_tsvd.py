import numpy as np
import pytest

from hlpsvd.sparse import SparseMatrix
from hlpsvd.tsvd import TsvdParams, TsvdResult, reconstruct, sign_canonicalize, truncated_svd
from util import dense_svd_factors, random_sparse, tail_energy

EXACT = dict(tol=1e-12, max_power_iterations=200)


def _random_case(rng):
    n = int(rng.integers(4, 30))
    m = int(rng.integers(4, 30))
    a = random_sparse(rng, n, m, density=0.6)
    k = int(rng.integers(1, min(n, m) + 1))
    return a, k


def test_singular_values_match_dense_oracle(rng):
    for _ in range(25):
        a, k = _random_case(rng)
        t = truncated_svd(a, TsvdParams(k=k, seed=3, **EXACT))
        ref = np.linalg.svd(a.to_dense(), compute_uv=False)[:k]
        scale = max(ref[0], 1e-12)
        assert np.abs(t.sigma - ref).max() <= 1e-6 * scale


def test_eckart_young_error(rng):
    # the rank-k truncation is the best rank-k approximation in Frobenius norm
    for _ in range(15):
        a, k = _random_case(rng)
        t = truncated_svd(a, TsvdParams(k=k, seed=5, **EXACT))
        err = np.linalg.norm(a.to_dense() - reconstruct(t), "fro") ** 2
        best = tail_energy(a.to_dense(), k)
        assert err <= best + 1e-6 * max(best, 1.0)


def test_factor_orthonormality(rng):
    for _ in range(15):
        a, k = _random_case(rng)
        t = truncated_svd(a, TsvdParams(k=k, seed=7, **EXACT))
        eye = np.eye(k)
        assert np.abs(t.u.T @ t.u - eye).max() <= 1e-8
        assert np.abs(t.v.T @ t.v - eye).max() <= 1e-8


def test_matches_dense_factors_after_canonicalization(rng):
    # distinct singular values make U and V unique up to sign, and the
    # shared canonicalization removes the sign
    for seed in range(5):
        r = np.random.default_rng(seed)
        a = SparseMatrix.from_dense(r.standard_normal((12, 9)))
        t = truncated_svd(a, TsvdParams(k=5, seed=seed, **EXACT))
        ref = dense_svd_factors(a.to_dense(), 5)
        np.testing.assert_allclose(t.u, ref.u, atol=1e-6)
        np.testing.assert_allclose(t.v, ref.v, atol=1e-6)


def test_sign_canonical_columns(rng):
    a = random_sparse(rng, 15, 10)
    t = truncated_svd(a, TsvdParams(k=6, seed=11))
    lead = t.u[np.argmax(np.abs(t.u), axis=0), np.arange(t.k)]
    assert (lead >= 0).all()
    again = sign_canonicalize(t)
    assert again is t  # already canonical, no copy


def test_sign_canonicalize_preserves_reconstruction(rng):
    a = random_sparse(rng, 8, 8)
    t = truncated_svd(a, TsvdParams(k=4, seed=2, **EXACT))
    flipped = TsvdResult(-t.u, t.sigma, -t.v, t.k)
    fixed = sign_canonicalize(flipped)
    np.testing.assert_allclose(reconstruct(fixed), reconstruct(t), atol=1e-12)


def test_deterministic_for_fixed_seed(rng):
    a = random_sparse(rng, 20, 14)
    p = TsvdParams(k=5, seed=42)
    t1 = truncated_svd(a, p)
    t2 = truncated_svd(a, p)
    assert np.array_equal(t1.u, t2.u)
    assert np.array_equal(t1.sigma, t2.sigma)
    assert np.array_equal(t1.v, t2.v)


def test_seed_independence_of_sigma(rng):
    a = random_sparse(rng, 20, 14)
    s1 = truncated_svd(a, TsvdParams(k=4, seed=0, **EXACT)).sigma
    s2 = truncated_svd(a, TsvdParams(k=4, seed=99, **EXACT)).sigma
    np.testing.assert_allclose(s1, s2, rtol=1e-9)


def test_full_rank_reconstructs_exactly(rng):
    a = random_sparse(rng, 9, 6, density=0.8)
    t = truncated_svd(a, TsvdParams(k=6, seed=1, **EXACT))
    np.testing.assert_allclose(reconstruct(t), a.to_dense(), atol=1e-8)


def test_rank_deficient_tail_clamped_to_zero():
    # rank-2 matrix factored at k=4: trailing sigmas must be exactly 0
    rng = np.random.default_rng(8)
    low = rng.standard_normal((10, 2)) @ rng.standard_normal((2, 7))
    t = truncated_svd(SparseMatrix.from_dense(low), TsvdParams(k=4, seed=0, **EXACT))
    assert t.sigma[2] == 0.0 and t.sigma[3] == 0.0
    assert t.sigma[0] > 0 and t.sigma[1] > 0


def test_sigma_descending(rng):
    a = random_sparse(rng, 16, 16)
    t = truncated_svd(a, TsvdParams(k=8, seed=6))
    assert (np.diff(t.sigma) <= 1e-12).all()


def test_truncate_slices_and_validates(rng):
    a = random_sparse(rng, 10, 10)
    t = truncated_svd(a, TsvdParams(k=6, seed=0))
    s = t.truncate(2)
    assert s.k == 2
    np.testing.assert_array_equal(s.u, t.u[:, :2])
    np.testing.assert_array_equal(s.sigma, t.sigma[:2])
    np.testing.assert_array_equal(s.v, t.v[:, :2])
    assert t.truncate(6) is t
    with pytest.raises(ValueError):
        t.truncate(7)
    with pytest.raises(ValueError):
        t.truncate(0)


def test_params_validation():
    a = SparseMatrix.identity(5)
    with pytest.raises(ValueError, match="k must be"):
        truncated_svd(a, TsvdParams(k=0))
    with pytest.raises(ValueError, match="exceeds min dimension"):
        truncated_svd(a, TsvdParams(k=6))
    with pytest.raises(ValueError, match="oversample"):
        truncated_svd(a, TsvdParams(k=2, oversample=-1))


def test_wide_and_tall_orientations(rng):
    for shape in ((5, 20), (20, 5)):
        a = random_sparse(rng, *shape, density=0.7)
        t = truncated_svd(a, TsvdParams(k=3, seed=4, **EXACT))
        assert t.u.shape == (shape[0], 3)
        assert t.v.shape == (shape[1], 3)
        ref = np.linalg.svd(a.to_dense(), compute_uv=False)[:3]
        np.testing.assert_allclose(t.sigma, ref, atol=1e-8 * max(ref[0], 1))
