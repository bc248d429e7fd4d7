"""Rank-k truncated SVD of sparse matrices by randomized subspace iteration.

The algorithm draws a Gaussian test matrix, alternates sparse products with
QR re-orthonormalization (power iterations), then takes a small dense SVD
of the projected matrix. Only sparse matvecs touch the input, so it scales
to the rank-2048 decompositions the embedding models need.

Results are deterministic for a fixed seed and sign-canonicalized so that
downstream pipelines and tests are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .sparse import SparseMatrix, spmm, transpose

__all__ = ["TsvdParams", "TsvdResult", "truncated_svd", "reconstruct", "sign_canonicalize"]

# singular values below RANK_TOL * sigma_1 are clamped to exact zero
RANK_TOL = 1e-10


@dataclass(frozen=True)
class TsvdParams:
    """Knobs for :func:`truncated_svd`.

    ``power_iterations`` is the fixed budget of QR-stabilized power steps.
    If ``tol`` > 0, iteration continues past that budget until the leading
    singular value estimates change by less than ``tol`` relatively (or
    ``max_power_iterations`` is hit); this buys near-exact factors on small
    problems at a cost that would be wasteful on large ones.
    """

    k: int
    oversample: int = 10
    power_iterations: int = 4
    seed: int = 0
    tol: float = 0.0
    max_power_iterations: int = 100

    def validate(self, n_rows: int, n_cols: int) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.k > min(n_rows, n_cols):
            raise ValueError(
                f"k={self.k} exceeds min dimension {min(n_rows, n_cols)}"
            )
        if self.oversample < 0:
            raise ValueError("oversample must be >= 0")


@dataclass(frozen=True)
class TsvdResult:
    """Rank-k factors: ``u`` (n x k), ``sigma`` (k, descending), ``v`` (m x k)."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    k: int

    def truncate(self, k: int) -> "TsvdResult":
        """Leading-k slice of the factors."""
        if not 1 <= k <= self.k:
            raise ValueError(f"cannot truncate rank-{self.k} factors to k={k}")
        if k == self.k:
            return self
        return TsvdResult(
            np.ascontiguousarray(self.u[:, :k]),
            self.sigma[:k].copy(),
            np.ascontiguousarray(self.v[:, :k]),
            k,
        )


def _orthonormalize(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    q, r = np.linalg.qr(y, mode="reduced")
    return q, r


def truncated_svd(a: SparseMatrix, params: TsvdParams) -> TsvdResult:
    """Approximate the top-k singular triplets of ``a``.

    Deterministic for fixed inputs and seed; factors come back
    sign-canonicalized with sigma descending and tiny trailing values
    clamped to zero.
    """
    params.validate(a.n_rows, a.n_cols)
    n, m = a.n_rows, a.n_cols
    k = params.k
    block = min(k + params.oversample, min(n, m))

    rng = np.random.default_rng(params.seed)
    omega = rng.standard_normal((m, block))

    at = transpose(a)
    q, _ = _orthonormalize(spmm(a, omega))

    sigma_prev = None
    iteration = 0
    while True:
        done_budget = iteration >= params.power_iterations
        if done_budget and params.tol <= 0.0:
            break
        if iteration >= max(params.power_iterations, params.max_power_iterations):
            break
        w, _ = _orthonormalize(spmm(at, q))
        q, r = _orthonormalize(spmm(a, w))
        iteration += 1
        if params.tol > 0.0 and iteration >= params.power_iterations:
            # DQDS on R's singular values is cheap relative to the products
            sigma_now = np.linalg.svd(r, compute_uv=False)[:k]
            if sigma_prev is not None and sigma_prev.shape == sigma_now.shape:
                scale = max(float(sigma_now[0]), 1e-300)
                if np.abs(sigma_now - sigma_prev).max() <= params.tol * scale:
                    break
            sigma_prev = sigma_now

    # project: B = Q^T A, small dense SVD, lift U back
    b = spmm(at, q).T
    ub, s, vt = np.linalg.svd(b, full_matrices=False)
    u = q @ ub[:, :k]
    sigma = s[:k].copy()
    v = np.ascontiguousarray(vt[:k].T)

    if sigma[0] > 0:
        sigma[sigma < RANK_TOL * sigma[0]] = 0.0
    result = TsvdResult(np.ascontiguousarray(u), sigma, v, k)
    return sign_canonicalize(result)


def reconstruct(t: TsvdResult) -> np.ndarray:
    """Dense ``U diag(sigma) V^T``. Diagnostic use; O(n m k) and O(n m) memory."""
    return (t.u * t.sigma) @ t.v.T


def sign_canonicalize(t: TsvdResult) -> TsvdResult:
    """Flip factor pairs so each u column's largest-magnitude entry is positive.

    Ties pick the lowest row index. Flipping u and v together leaves the
    reconstruction unchanged.
    """
    if t.k == 0:
        return t
    idx = np.argmax(np.abs(t.u), axis=0)
    lead = t.u[idx, np.arange(t.k)]
    signs = np.where(lead < 0, -1.0, 1.0)
    if (signs == 1.0).all():
        return t
    return TsvdResult(t.u * signs, t.sigma, t.v * signs, t.k)
