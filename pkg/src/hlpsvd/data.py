"""Dataset ingestion, adjacency construction, splits, and statistics.

A dataset lives in a directory of UTF-8 text files ('#' lines are comments):

    meta          n_nodes=<int> / n_features=<int> / n_classes=<int> / name=<str>
    edges.tsv     one directed edge per line: "src<TAB>dst", 0-based
    features.tsv  sparse triplets: "node<TAB>feature<TAB>value"
    labels.tsv    "node<TAB>class"
    splits/       optional split_<i>.json files, three lines
                  "train: id id ...", "val: ...", "test: ..."

Loaded datasets are immutable; everything downstream is read-only.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .sparse import SparseMatrix, normalize, symmetrize

__all__ = [
    "DatasetFormatError",
    "GraphDataset",
    "Split",
    "DatasetStats",
    "load_dataset",
    "save_dataset",
    "build_adjacency",
    "generate_splits",
    "homophily_score",
    "stats",
    "save_splits",
    "load_splits",
]


class DatasetFormatError(ValueError):
    """Malformed dataset file; message carries file name and line number."""


@dataclass(frozen=True)
class GraphDataset:
    """Immutable graph with sparse node features and integer labels.

    ``edges`` is the deduplicated directed edge list as an (E, 2) int array;
    self-loops are kept as given. ``features`` is n x d CSR.
    """

    name: str
    n: int
    edges: np.ndarray
    features: SparseMatrix
    labels: np.ndarray
    num_classes: int

    def __post_init__(self) -> None:
        if self.edges.size and (self.edges.min() < 0 or self.edges.max() >= self.n):
            raise ValueError("edge endpoint out of range")
        if self.labels.shape != (self.n,):
            raise ValueError("labels length must equal node count")
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise ValueError("label outside [0, num_classes)")
        present = np.bincount(self.labels, minlength=self.num_classes)
        if (present == 0).any():
            missing = int(np.flatnonzero(present == 0)[0])
            raise ValueError(f"class {missing} has no nodes")
        if self.features.n_rows != self.n:
            raise ValueError("feature row count must equal node count")


@dataclass(frozen=True)
class Split:
    """Disjoint train/val/test node index arrays."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def validate(self, n: int) -> None:
        parts = [self.train, self.val, self.test]
        if any(p.size == 0 for p in parts):
            raise ValueError("empty split part")
        allidx = np.concatenate(parts)
        if allidx.min() < 0 or allidx.max() >= n:
            raise ValueError("split index out of range")
        if np.unique(allidx).size != allidx.size:
            raise ValueError("split parts overlap")


@dataclass(frozen=True)
class DatasetStats:
    name: str
    n_nodes: int
    n_edges_directed: int
    n_edges_undirected: int
    n_features: int
    n_classes: int
    homophily: float


def _data_lines(path: str):
    """Yield (line_number, stripped_line) skipping blanks and '#' comments."""
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def _parse_int(token: str, path: str, lineno: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise DatasetFormatError(f"{path}:{lineno}: bad {what} {token!r}") from None


def load_dataset(dir_path: str) -> GraphDataset:
    """Load and validate a dataset directory.

    Duplicate directed edges are dropped; self-loops are preserved.
    Raises :class:`DatasetFormatError` with file and line number on any
    malformed or out-of-range record, and on a class with zero nodes.
    """
    meta_path = os.path.join(dir_path, "meta")
    for fname in ("meta", "edges.tsv", "features.tsv", "labels.tsv"):
        if not os.path.isfile(os.path.join(dir_path, fname)):
            raise DatasetFormatError(f"missing file: {os.path.join(dir_path, fname)}")

    meta: dict[str, str] = {}
    for lineno, line in _data_lines(meta_path):
        if "=" not in line:
            raise DatasetFormatError(f"{meta_path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        meta[key.strip()] = value.strip()
    for key in ("n_nodes", "n_features", "n_classes", "name"):
        if key not in meta:
            raise DatasetFormatError(f"{meta_path}: missing key {key!r}")
    n = _parse_int(meta["n_nodes"], meta_path, 0, "n_nodes")
    d = _parse_int(meta["n_features"], meta_path, 0, "n_features")
    n_classes = _parse_int(meta["n_classes"], meta_path, 0, "n_classes")
    name = meta["name"]
    if n < 1 or d < 1 or n_classes < 1:
        raise DatasetFormatError(f"{meta_path}: counts must be positive")

    edges_path = os.path.join(dir_path, "edges.tsv")
    src_list, dst_list = [], []
    for lineno, line in _data_lines(edges_path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise DatasetFormatError(f"{edges_path}:{lineno}: expected src<TAB>dst")
        s = _parse_int(parts[0], edges_path, lineno, "node id")
        t = _parse_int(parts[1], edges_path, lineno, "node id")
        if not (0 <= s < n and 0 <= t < n):
            raise DatasetFormatError(
                f"{edges_path}:{lineno}: node id out of range [0, {n})"
            )
        src_list.append(s)
        dst_list.append(t)
    if src_list:
        pairs = np.stack(
            [np.asarray(src_list, dtype=np.int64), np.asarray(dst_list, dtype=np.int64)],
            axis=1,
        )
        edges = np.unique(pairs, axis=0)
    else:
        edges = np.zeros((0, 2), dtype=np.int64)

    feat_path = os.path.join(dir_path, "features.tsv")
    rows, cols, vals = [], [], []
    for lineno, line in _data_lines(feat_path):
        parts = line.split("\t")
        if len(parts) != 3:
            raise DatasetFormatError(
                f"{feat_path}:{lineno}: expected node<TAB>feature<TAB>value"
            )
        node = _parse_int(parts[0], feat_path, lineno, "node id")
        feat = _parse_int(parts[1], feat_path, lineno, "feature id")
        try:
            value = float(parts[2])
        except ValueError:
            raise DatasetFormatError(
                f"{feat_path}:{lineno}: bad value {parts[2]!r}"
            ) from None
        if not 0 <= node < n:
            raise DatasetFormatError(
                f"{feat_path}:{lineno}: node id out of range [0, {n})"
            )
        if not 0 <= feat < d:
            raise DatasetFormatError(
                f"{feat_path}:{lineno}: feature id out of range [0, {d})"
            )
        rows.append(node)
        cols.append(feat)
        vals.append(value)
    features = SparseMatrix.from_coo(
        n,
        d,
        np.asarray(rows, dtype=np.int64),
        np.asarray(cols, dtype=np.int64),
        np.asarray(vals, dtype=np.float64),
    )

    labels_path = os.path.join(dir_path, "labels.tsv")
    labels = np.full(n, -1, dtype=np.int64)
    for lineno, line in _data_lines(labels_path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise DatasetFormatError(f"{labels_path}:{lineno}: expected node<TAB>class")
        node = _parse_int(parts[0], labels_path, lineno, "node id")
        cls = _parse_int(parts[1], labels_path, lineno, "class id")
        if not 0 <= node < n:
            raise DatasetFormatError(
                f"{labels_path}:{lineno}: node id out of range [0, {n})"
            )
        if not 0 <= cls < n_classes:
            raise DatasetFormatError(
                f"{labels_path}:{lineno}: class id out of range [0, {n_classes})"
            )
        labels[node] = cls
    if (labels < 0).any():
        missing = int(np.flatnonzero(labels < 0)[0])
        raise DatasetFormatError(f"{labels_path}: node {missing} has no label")
    counts = np.bincount(labels, minlength=n_classes)
    if (counts == 0).any():
        empty = int(np.flatnonzero(counts == 0)[0])
        raise DatasetFormatError(f"{labels_path}: class {empty} has zero nodes")

    edges.setflags(write=False)
    labels.setflags(write=False)
    return GraphDataset(name, n, edges, features, labels, n_classes)


def save_dataset(ds: GraphDataset, dir_path: str) -> None:
    """Write ``ds`` in the directory format that :func:`load_dataset` reads."""
    os.makedirs(dir_path, exist_ok=True)
    with open(os.path.join(dir_path, "meta"), "w", encoding="utf-8") as fh:
        fh.write(f"name={ds.name}\n")
        fh.write(f"n_nodes={ds.n}\n")
        fh.write(f"n_features={ds.features.n_cols}\n")
        fh.write(f"n_classes={ds.num_classes}\n")
    with open(os.path.join(dir_path, "edges.tsv"), "w", encoding="utf-8") as fh:
        for s, t in ds.edges:
            fh.write(f"{s}\t{t}\n")
    x = ds.features
    row_ids = x.row_ids()
    with open(os.path.join(dir_path, "features.tsv"), "w", encoding="utf-8") as fh:
        for r, c, v in zip(row_ids, x.col_indices, x.values):
            fh.write(f"{r}\t{c}\t{v:.17g}\n")
    with open(os.path.join(dir_path, "labels.tsv"), "w", encoding="utf-8") as fh:
        for node, cls in enumerate(ds.labels):
            fh.write(f"{node}\t{cls}\n")


def build_adjacency(ds: GraphDataset, graph_type: str, norm: str) -> SparseMatrix:
    """Binary adjacency from the edge list, optionally symmetrized then normalized.

    graph_type "directed" keeps edges as given; "undirected" takes the union
    with reversed edges first. ``norm`` is one of none/row/sym.
    """
    if graph_type not in ("directed", "undirected"):
        raise ValueError(f"unknown graph_type {graph_type!r}")
    a = SparseMatrix.from_coo(
        ds.n,
        ds.n,
        ds.edges[:, 0],
        ds.edges[:, 1],
        np.ones(len(ds.edges), dtype=np.float64),
    )
    if graph_type == "undirected":
        a = symmetrize(a)
    return normalize(a, norm)


def _draw_split(
    rng: np.random.Generator,
    n: int,
    n_train: int,
    n_val: int,
) -> Split:
    perm = rng.permutation(n)
    return Split(
        train=np.sort(perm[:n_train]),
        val=np.sort(perm[n_train : n_train + n_val]),
        test=np.sort(perm[n_train + n_val :]),
    )


def generate_splits(
    ds: GraphDataset,
    ratios: tuple[float, float, float] = (0.48, 0.32, 0.20),
    count: int = 10,
    seed: int = 0,
    sizes: tuple[int, int, int] | None = None,
) -> list[Split]:
    """Random train/val/test partitions, one per index in [0, count).

    With ``ratios``, train and val take floor(ratio * n) nodes and test the
    remainder. ``sizes`` overrides ratios with absolute part sizes (the parts
    must sum to n). A draw is rejected and retried (up to 100 times) if some
    class is absent from train; each split index uses its own derived seed,
    so splits are independent of ``count``.
    """
    if sizes is not None:
        n_train, n_val, n_test = sizes
        if n_train + n_val + n_test != ds.n:
            raise ValueError(f"sizes must sum to {ds.n}")
    else:
        if abs(sum(ratios) - 1.0) > 1e-9:
            raise ValueError("ratios must sum to 1")
        n_train = int(np.floor(ratios[0] * ds.n))
        n_val = int(np.floor(ratios[1] * ds.n))
        n_test = ds.n - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise ValueError("each split part must be nonempty")

    splits = []
    for i in range(count):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        for _attempt in range(100):
            split = _draw_split(rng, ds.n, n_train, n_val)
            covered = np.unique(ds.labels[split.train])
            if covered.size == ds.num_classes:
                break
        else:
            raise ValueError(
                f"split {i}: could not cover all classes in train after 100 draws"
            )
        splits.append(split)
    return splits


def homophily_score(ds: GraphDataset) -> float:
    """Fraction of undirected, deduplicated, non-loop edges joining same-label nodes."""
    if len(ds.edges) == 0:
        raise ValueError("homophily undefined on a graph with no edges")
    lo = np.minimum(ds.edges[:, 0], ds.edges[:, 1])
    hi = np.maximum(ds.edges[:, 0], ds.edges[:, 1])
    keep = lo != hi
    und = np.unique(np.stack([lo[keep], hi[keep]], axis=1), axis=0)
    if len(und) == 0:
        raise ValueError("homophily undefined on a graph with only self-loops")
    same = ds.labels[und[:, 0]] == ds.labels[und[:, 1]]
    return float(same.mean())


def stats(ds: GraphDataset) -> DatasetStats:
    """Recomputed counts plus homophily."""
    lo = np.minimum(ds.edges[:, 0], ds.edges[:, 1])
    hi = np.maximum(ds.edges[:, 0], ds.edges[:, 1])
    n_und = len(np.unique(np.stack([lo, hi], axis=1), axis=0)) if len(ds.edges) else 0
    return DatasetStats(
        name=ds.name,
        n_nodes=ds.n,
        n_edges_directed=len(ds.edges),
        n_edges_undirected=n_und,
        n_features=ds.features.n_cols,
        n_classes=ds.num_classes,
        homophily=homophily_score(ds),
    )


def save_splits(splits: list[Split], dir_path: str) -> None:
    """Write splits/split_<i>.json files (three "part: ids" lines each)."""
    os.makedirs(dir_path, exist_ok=True)
    for i, split in enumerate(splits):
        path = os.path.join(dir_path, f"split_{i}.json")
        with open(path, "w", encoding="utf-8") as fh:
            for tag, idx in (("train", split.train), ("val", split.val), ("test", split.test)):
                fh.write(f"{tag}: " + " ".join(str(j) for j in idx) + "\n")


def load_splits(dir_path: str, n: int) -> list[Split]:
    """Read split_<i>.json files in index order and validate against ``n``."""
    if not os.path.isdir(dir_path):
        raise DatasetFormatError(f"missing splits directory: {dir_path}")
    names = sorted(
        (f for f in os.listdir(dir_path) if f.startswith("split_") and f.endswith(".json")),
        key=lambda f: int(f[len("split_") : -len(".json")]),
    )
    if not names:
        raise DatasetFormatError(f"no split_<i>.json files in {dir_path}")
    splits = []
    for fname in names:
        path = os.path.join(dir_path, fname)
        parts: dict[str, np.ndarray] = {}
        for lineno, line in _data_lines(path):
            tag, _, rest = line.partition(":")
            tag = tag.strip()
            if tag not in ("train", "val", "test"):
                raise DatasetFormatError(f"{path}:{lineno}: unknown part {tag!r}")
            parts[tag] = np.asarray(
                [_parse_int(t, path, lineno, "node id") for t in rest.split()],
                dtype=np.int64,
            )
        for tag in ("train", "val", "test"):
            if tag not in parts:
                raise DatasetFormatError(f"{path}: missing part {tag!r}")
        split = Split(parts["train"], parts["val"], parts["test"])
        split.validate(n)
        splits.append(split)
    return splits
