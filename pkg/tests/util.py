"""Shared oracles and fixtures for the test suite.

Everything here is deliberately naive: dense numpy reference
implementations and tiny hand-built graphs that the fast code paths are
checked against.
"""

from __future__ import annotations

import numpy as np

from hlpsvd.data import GraphDataset
from hlpsvd.sparse import SparseMatrix
from hlpsvd.tsvd import TsvdResult, sign_canonicalize


def dense_svd_factors(a_dense: np.ndarray, k: int) -> TsvdResult:
    """Top-k factors from numpy's full SVD, canonicalized like truncated_svd."""
    u, s, vt = np.linalg.svd(np.asarray(a_dense, dtype=np.float64), full_matrices=False)
    t = TsvdResult(
        np.ascontiguousarray(u[:, :k]),
        s[:k].copy(),
        np.ascontiguousarray(vt[:k].T),
        k,
    )
    return sign_canonicalize(t)


def tail_energy(a_dense: np.ndarray, k: int) -> float:
    """Optimal rank-k Frobenius error squared: sum of trailing sigma^2."""
    s = np.linalg.svd(np.asarray(a_dense, dtype=np.float64), compute_uv=False)
    return float(np.square(s[k:]).sum())


def principal_angle_gap(u: np.ndarray, w: np.ndarray) -> float:
    """1 - smallest singular value of U^T W; 0 iff the column spans coincide.

    Both inputs must have orthonormal columns of equal count.
    """
    s = np.linalg.svd(u.T @ w, compute_uv=False)
    return float(1.0 - s.min())


def numeric_gradients(fn, params: list[np.ndarray], eps: float = 1e-6) -> list[np.ndarray]:
    """Central finite differences of a scalar function of a parameter list."""
    grads = []
    for idx, p in enumerate(params):
        g = np.zeros_like(p, dtype=np.float64)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            mi = it.multi_index
            orig = p[mi]
            p[mi] = orig + eps
            hi = fn(params)
            p[mi] = orig - eps
            lo = fn(params)
            p[mi] = orig
            g[mi] = (hi - lo) / (2.0 * eps)
        grads.append(g)
    return grads


def random_sparse(
    rng: np.random.Generator, n: int, m: int, density: float = 0.4
) -> SparseMatrix:
    """Random sparse matrix with at least one stored entry."""
    mask = rng.random((n, m)) < density
    dense = np.where(mask, rng.standard_normal((n, m)), 0.0)
    if not mask.any():
        dense[0, 0] = 1.0
    return SparseMatrix.from_dense(dense)


def toy_dataset(
    n: int = 48, d: int = 12, num_classes: int = 3, seed: int = 0, name: str = "toy"
) -> GraphDataset:
    """Small classifiable graph: block-diagonal-ish edges, class-shifted features.

    Accuracy is far above chance for any sensible model, which keeps
    harness tests meaningful without being brittle about exact scores.
    """
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % num_classes
    rng.shuffle(labels)

    src, dst = [], []
    for i in range(n):
        same = np.flatnonzero(labels == labels[i])
        other = np.flatnonzero(labels != labels[i])
        for j in rng.choice(same, size=2, replace=False):
            if i != j:
                src.append(i)
                dst.append(int(j))
        j = int(rng.choice(other))
        src.append(i)
        dst.append(j)
    edges = np.unique(np.stack([src, dst], axis=1), axis=0)

    centers = rng.standard_normal((num_classes, d)) * 2.0
    dense = centers[labels] + rng.standard_normal((n, d))
    dense[rng.random((n, d)) < 0.3] = 0.0
    features = SparseMatrix.from_dense(dense)
    return GraphDataset(name, n, edges, features, labels, num_classes)


def two_triangle_graph() -> SparseMatrix:
    """Two triangles joined by a single bridge edge, as undirected binary CSR."""
    pairs = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]
    rows = [p[0] for p in pairs] + [p[1] for p in pairs]
    cols = [p[1] for p in pairs] + [p[0] for p in pairs]
    return SparseMatrix.from_coo(6, 6, rows, cols, np.ones(len(rows)))
