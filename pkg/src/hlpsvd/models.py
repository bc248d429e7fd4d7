"""Spectral node representations built from truncated SVD factors.

Two constructions feed the classifiers:

* an aggregation model: S = U diag(s_A) (U^T Q) diag(scale(s_X)), where
  (U, s_A) are rank-k1 factors of the adjacency and (Q, s_X) rank-k2
  left factors of the feature matrix; and
* a concatenation model: scaled graph factors side by side with scaled
  feature factors, classified by an MLP.

Low-rank truncation of the adjacency acts as a smoothing filter whose
implicit matrix U diag(s_A) U^T carries negative entries between
structurally dissimilar nodes, which is what makes these embeddings
effective when neighboring labels disagree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sparse import SparseMatrix
from .tsvd import TsvdParams, TsvdResult, truncated_svd

__all__ = [
    "HlpConfig",
    "EmbeddingMatrix",
    "graph_embedding",
    "feature_embedding",
    "hlp_aggregate",
    "hlp_concat",
    "column_standardize",
    "write_embeddings_tsv",
]

GRAPH_TYPES = ("directed", "undirected")
NORMS = ("none", "row", "sym")
GRAPH_SCALINGS = ("none", "sigma")
FEATURE_SCALINGS = ("none", "sigma", "sigma_squared")
DIRECTED_FACTORS = ("left", "left_and_right")

# exact-mode TSVD: iterate until singular values stagnate at this tolerance
EXACT_TOL = 1e-12


@dataclass(frozen=True)
class HlpConfig:
    """Embedding hyperparameters.

    k1/k2 are the adjacency and feature decomposition ranks. Scalings pick
    how singular values weight the factor columns; sigma_squared matches the
    spectrum of the feature Gram matrix. directed_factors only matters for
    graph_type="directed", where left_and_right concatenates both factor
    sides of the asymmetric decomposition.
    """

    k1: int
    k2: int
    graph_type: str = "undirected"
    norm: str = "sym"
    graph_scaling: str = "sigma"
    feature_scaling: str = "sigma"
    directed_factors: str = "left"

    def __post_init__(self) -> None:
        if self.k1 < 1 or self.k2 < 1:
            raise ValueError("ranks must be >= 1")
        for value, allowed, field in (
            (self.graph_type, GRAPH_TYPES, "graph_type"),
            (self.norm, NORMS, "norm"),
            (self.graph_scaling, GRAPH_SCALINGS, "graph_scaling"),
            (self.feature_scaling, FEATURE_SCALINGS, "feature_scaling"),
            (self.directed_factors, DIRECTED_FACTORS, "directed_factors"),
        ):
            if value not in allowed:
                raise ValueError(f"{field} must be one of {allowed}, got {value!r}")


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Dense n x dim node representation with its construction tag."""

    values: np.ndarray
    dim: int
    provenance: str

    def __post_init__(self) -> None:
        if self.values.ndim != 2 or self.values.shape[1] != self.dim:
            raise ValueError("values must be 2-D with dim columns")
        if not np.isfinite(self.values).all():
            raise ValueError("embedding contains non-finite entries")

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _factorize(
    matrix: SparseMatrix, k: int, seed: int, exact: bool
) -> TsvdResult:
    tol = EXACT_TOL if exact else 0.0
    return truncated_svd(matrix, TsvdParams(k=k, seed=seed, tol=tol))


def _scaled(u: np.ndarray, sigma: np.ndarray, scaling: str) -> np.ndarray:
    if scaling == "none":
        return u.copy()
    if scaling == "sigma":
        return u * sigma
    if scaling == "sigma_squared":
        return u * np.square(sigma)
    raise ValueError(f"unknown scaling {scaling!r}")


def graph_embedding(
    a_norm: SparseMatrix,
    cfg: HlpConfig,
    seed: int,
    *,
    factors: TsvdResult | None = None,
    exact: bool = False,
) -> EmbeddingMatrix:
    """Rank-k1 factors of the (normalized) adjacency as node coordinates.

    Returns U or U*diag(sigma) per cfg.graph_scaling. For directed graphs
    with directed_factors="left_and_right", the right factors are appended,
    giving 2*k1 columns. ``factors`` short-circuits the decomposition with
    precomputed ones (rank >= k1); ``exact`` trades time for factors
    converged to near machine precision.
    """
    if a_norm.n_rows != a_norm.n_cols:
        raise ValueError("adjacency must be square")
    t = factors.truncate(cfg.k1) if factors is not None else _factorize(
        a_norm, cfg.k1, seed, exact
    )
    left = _scaled(t.u, t.sigma, cfg.graph_scaling)
    if cfg.graph_type == "directed" and cfg.directed_factors == "left_and_right":
        right = _scaled(t.v, t.sigma, cfg.graph_scaling)
        values = np.hstack([left, right])
    else:
        values = left
    return EmbeddingMatrix(values, values.shape[1], "graph")


def feature_embedding(
    x: SparseMatrix,
    cfg: HlpConfig,
    seed: int,
    *,
    factors: TsvdResult | None = None,
    exact: bool = False,
) -> EmbeddingMatrix:
    """Rank-k2 left factors of the feature matrix, scaled per cfg.feature_scaling.

    sigma_squared reproduces the eigenvalue weighting of the feature Gram
    matrix X X^T, whose eigenvectors coincide with X's left factors.
    """
    t = factors.truncate(cfg.k2) if factors is not None else _factorize(
        x, cfg.k2, seed, exact
    )
    values = _scaled(t.u, t.sigma, cfg.feature_scaling)
    return EmbeddingMatrix(values, values.shape[1], "feature")


def hlp_aggregate(
    a_norm: SparseMatrix,
    x: SparseMatrix,
    cfg: HlpConfig,
    seed: int,
    *,
    graph_factors: TsvdResult | None = None,
    feature_factors: TsvdResult | None = None,
    exact: bool = False,
) -> EmbeddingMatrix:
    """Low-rank smoothing of truncated features through the graph spectrum.

    Computes U diag(s_A) (U^T Q) diag(scale(s_X)) with (U, s_A) the rank-k1
    adjacency factors and (Q, s_X) the rank-k2 feature factors; output is
    n x k2. With an identity adjacency and k1 = n this collapses to the
    plain feature embedding. graph_scaling="none" drops the diag(s_A) term.
    """
    if a_norm.n_rows != a_norm.n_cols:
        raise ValueError("adjacency must be square")
    if x.n_rows != a_norm.n_rows:
        raise ValueError("feature rows must match adjacency size")
    tg = graph_factors.truncate(cfg.k1) if graph_factors is not None else _factorize(
        a_norm, cfg.k1, seed, exact
    )
    tf = feature_factors.truncate(cfg.k2) if feature_factors is not None else _factorize(
        x, cfg.k2, seed + 1, exact
    )
    u = tg.u if cfg.graph_scaling == "none" else tg.u * tg.sigma
    mix = tg.u.T @ tf.u
    values = u @ _scaled_diag(mix, tf.sigma, cfg.feature_scaling)
    return EmbeddingMatrix(values, cfg.k2, "aggregated")


def _scaled_diag(mix: np.ndarray, sigma: np.ndarray, scaling: str) -> np.ndarray:
    if scaling == "none":
        return mix
    if scaling == "sigma":
        return mix * sigma
    return mix * np.square(sigma)


def hlp_concat(graph_emb: EmbeddingMatrix, feat_emb: EmbeddingMatrix) -> EmbeddingMatrix:
    """Column-wise concatenation, graph block first."""
    if graph_emb.n != feat_emb.n:
        raise ValueError(
            f"row counts differ: {graph_emb.n} vs {feat_emb.n}"
        )
    values = np.hstack([graph_emb.values, feat_emb.values])
    return EmbeddingMatrix(values, graph_emb.dim + feat_emb.dim, "concatenated")


def column_standardize(e: EmbeddingMatrix) -> EmbeddingMatrix:
    """Shift each column to mean 0 and population std 1; constant columns to zero.

    Standardizing a second time is a no-op up to roundoff. First-order
    optimizers need this: raw sigma-scaled columns span orders of magnitude.
    """
    mean = e.values.mean(axis=0)
    centered = e.values - mean
    std = np.sqrt(np.square(centered).mean(axis=0))
    # columns constant up to roundoff would amplify noise if divided through
    floor = 1e-12 * (1.0 + np.abs(mean))
    scale = np.where(std <= floor, 0.0, 1.0 / np.where(std <= floor, 1.0, std))
    return EmbeddingMatrix(centered * scale, e.dim, e.provenance)


def write_embeddings_tsv(
    path: str, e: EmbeddingMatrix, labels: np.ndarray | None = None
) -> None:
    """Write one row per node: id, then the coordinates, optionally the label.

    Header is "node_id<TAB>dim=<k>" (plus "<TAB>label" when labels are given).
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        header = f"node_id\tdim={e.dim}"
        if labels is not None:
            header += "\tlabel"
        fh.write(header + "\n")
        for i in range(e.n):
            row = "\t".join(f"{v:.10g}" for v in e.values[i])
            if labels is not None:
                fh.write(f"{i}\t{row}\t{labels[i]}\n")
            else:
                fh.write(f"{i}\t{row}\n")
