import os

import numpy as np
import pytest

from hlpsvd.data import (
    DatasetFormatError,
    GraphDataset,
    Split,
    build_adjacency,
    generate_splits,
    homophily_score,
    load_dataset,
    load_splits,
    save_dataset,
    save_splits,
    stats,
)
from hlpsvd.sparse import SparseMatrix
from util import toy_dataset


def _write(dir_path, name, text):
    with open(os.path.join(dir_path, name), "w", encoding="utf-8") as fh:
        fh.write(text)


def _minimal_dir(tmp_path, **overrides):
    """3-node dataset directory; override individual files to break it."""
    files = {
        "meta": "name=mini\nn_nodes=3\nn_features=2\nn_classes=2\n",
        "edges.tsv": "0\t1\n1\t2\n",
        "features.tsv": "0\t0\t1.5\n1\t1\t-2\n2\t0\t0.25\n",
        "labels.tsv": "0\t0\n1\t1\n2\t0\n",
    }
    files.update(overrides)
    d = tmp_path / "mini"
    d.mkdir(exist_ok=True)
    for name, text in files.items():
        _write(str(d), name, text)
    return str(d)


def test_load_minimal_round_trip(tmp_path):
    ds = load_dataset(_minimal_dir(tmp_path))
    assert ds.name == "mini" and ds.n == 3 and ds.num_classes == 2
    np.testing.assert_array_equal(ds.edges, [[0, 1], [1, 2]])
    np.testing.assert_array_equal(ds.labels, [0, 1, 0])
    np.testing.assert_allclose(
        ds.features.to_dense(), [[1.5, 0.0], [0.0, -2.0], [0.25, 0.0]]
    )


def test_save_load_round_trip(tmp_path):
    ds = toy_dataset(n=30, d=6, seed=3)
    out = str(tmp_path / "toy")
    save_dataset(ds, out)
    back = load_dataset(out)
    assert back.name == ds.name
    np.testing.assert_array_equal(back.edges, ds.edges)
    np.testing.assert_array_equal(back.labels, ds.labels)
    np.testing.assert_allclose(back.features.to_dense(), ds.features.to_dense())


def test_comments_and_blank_lines_skipped(tmp_path):
    path = _minimal_dir(
        tmp_path, **{"edges.tsv": "# header\n\n0\t1\n  \n1\t2\n"}
    )
    assert len(load_dataset(path).edges) == 2


def test_duplicate_edges_dropped_self_loops_kept(tmp_path):
    path = _minimal_dir(tmp_path, **{"edges.tsv": "0\t1\n0\t1\n2\t2\n"})
    ds = load_dataset(path)
    np.testing.assert_array_equal(ds.edges, [[0, 1], [2, 2]])


def test_missing_file_error(tmp_path):
    d = tmp_path / "empty"
    d.mkdir()
    with pytest.raises(DatasetFormatError, match="missing file"):
        load_dataset(str(d))


def test_malformed_edge_line_reports_location(tmp_path):
    path = _minimal_dir(tmp_path, **{"edges.tsv": "0\t1\n# ok\nbroken line\n"})
    with pytest.raises(DatasetFormatError, match=r"edges\.tsv:3"):
        load_dataset(path)


def test_edge_endpoint_out_of_range(tmp_path):
    path = _minimal_dir(tmp_path, **{"edges.tsv": "0\t3\n"})
    with pytest.raises(DatasetFormatError, match=r"edges\.tsv:1.*out of range"):
        load_dataset(path)


def test_bad_feature_value_and_ids(tmp_path):
    path = _minimal_dir(tmp_path, **{"features.tsv": "0\t0\tnope\n"})
    with pytest.raises(DatasetFormatError, match=r"features\.tsv:1: bad value"):
        load_dataset(path)
    path = _minimal_dir(tmp_path, **{"features.tsv": "0\t9\t1.0\n"})
    with pytest.raises(DatasetFormatError, match="feature id out of range"):
        load_dataset(path)


def test_label_errors(tmp_path):
    path = _minimal_dir(tmp_path, **{"labels.tsv": "0\t0\n1\t1\n"})
    with pytest.raises(DatasetFormatError, match="node 2 has no label"):
        load_dataset(path)
    path = _minimal_dir(tmp_path, **{"labels.tsv": "0\t0\n1\t5\n2\t0\n"})
    with pytest.raises(DatasetFormatError, match="class id out of range"):
        load_dataset(path)
    path = _minimal_dir(tmp_path, **{"labels.tsv": "0\t0\n1\t0\n2\t0\n"})
    with pytest.raises(DatasetFormatError, match="class 1 has zero nodes"):
        load_dataset(path)


def test_meta_errors(tmp_path):
    path = _minimal_dir(tmp_path, meta="name=x\nn_nodes=3\nn_features=2\n")
    with pytest.raises(DatasetFormatError, match="missing key"):
        load_dataset(path)
    path = _minimal_dir(
        tmp_path, meta="name=x\nn_nodes=0\nn_features=2\nn_classes=2\n"
    )
    with pytest.raises(DatasetFormatError, match="must be positive"):
        load_dataset(path)


def test_dataset_invariants():
    feats = SparseMatrix.identity(3)
    labels = np.array([0, 1, 0])
    edges = np.array([[0, 5]])
    with pytest.raises(ValueError, match="out of range"):
        GraphDataset("x", 3, edges, feats, labels, 2)
    with pytest.raises(ValueError, match="has no nodes"):
        GraphDataset("x", 3, np.zeros((0, 2), int), feats, np.zeros(3, int), 2)


def test_build_adjacency_directed_vs_undirected():
    ds = toy_dataset(n=20, seed=1)
    d = build_adjacency(ds, "directed", "none").to_dense()
    expected = np.zeros((20, 20))
    expected[ds.edges[:, 0], ds.edges[:, 1]] = 1.0
    np.testing.assert_array_equal(d, expected)
    u = build_adjacency(ds, "undirected", "none").to_dense()
    np.testing.assert_array_equal(u, np.maximum(expected, expected.T))
    with pytest.raises(ValueError, match="graph_type"):
        build_adjacency(ds, "mixed", "none")


def test_build_adjacency_sym_norm_single_edge(tmp_path):
    path = _minimal_dir(tmp_path, **{"edges.tsv": "0\t1\n"})
    ds = load_dataset(path)
    a = build_adjacency(ds, "undirected", "sym").to_dense()
    assert a[0, 1] == pytest.approx(1.0) and a[1, 0] == pytest.approx(1.0)
    d = build_adjacency(ds, "directed", "row").to_dense()
    assert d[0, 1] == 1.0 and d[1].sum() == 0.0


def test_generate_splits_partition_and_sizes():
    ds = toy_dataset(n=183, d=4, seed=2)
    splits = generate_splits(ds, count=10, seed=0)
    assert len(splits) == 10
    for s in splits:
        assert (len(s.train), len(s.val), len(s.test)) == (87, 58, 38)
        s.validate(ds.n)
        together = np.concatenate([s.train, s.val, s.test])
        assert np.array_equal(np.sort(together), np.arange(ds.n))
        assert np.unique(ds.labels[s.train]).size == ds.num_classes


def test_generate_splits_deterministic_and_count_independent():
    ds = toy_dataset(n=60, seed=4)
    a = generate_splits(ds, count=3, seed=9)
    b = generate_splits(ds, count=6, seed=9)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.train, y.train)
        np.testing.assert_array_equal(x.test, y.test)
    c = generate_splits(ds, count=3, seed=10)
    assert not np.array_equal(a[0].train, c[0].train)


def test_generate_splits_absolute_sizes():
    ds = toy_dataset(n=50, seed=5)
    splits = generate_splits(ds, count=2, seed=0, sizes=(10, 15, 25))
    assert all(
        (len(s.train), len(s.val), len(s.test)) == (10, 15, 25) for s in splits
    )
    with pytest.raises(ValueError, match="sum to 50"):
        generate_splits(ds, count=1, sizes=(10, 15, 20))


def test_generate_splits_bad_ratios():
    ds = toy_dataset(n=50, seed=5)
    with pytest.raises(ValueError, match="sum to 1"):
        generate_splits(ds, ratios=(0.5, 0.5, 0.5), count=1)


def test_split_validate():
    s = Split(np.array([0, 1]), np.array([1]), np.array([2]))
    with pytest.raises(ValueError, match="overlap"):
        s.validate(3)
    s = Split(np.array([0]), np.array([], dtype=int), np.array([2]))
    with pytest.raises(ValueError, match="empty"):
        s.validate(3)


def test_homophily_triangle():
    feats = SparseMatrix.identity(3)
    edges = np.array([[0, 1], [1, 2], [0, 2]])
    ds = GraphDataset("tri", 3, edges, feats, np.array([0, 0, 1]), 2)
    assert homophily_score(ds) == pytest.approx(1 / 3)


def test_homophily_ignores_direction_duplicates_and_loops():
    feats = SparseMatrix.identity(3)
    # the same undirected edge twice plus a self-loop; one cross edge
    edges = np.array([[0, 1], [1, 0], [2, 2], [1, 2]])
    ds = GraphDataset("dup", 3, edges, feats, np.array([0, 0, 1]), 2)
    assert homophily_score(ds) == pytest.approx(0.5)


def test_homophily_requires_edges():
    ds = GraphDataset(
        "none",
        2,
        np.zeros((0, 2), int),
        SparseMatrix.identity(2),
        np.array([0, 1]),
        2,
    )
    with pytest.raises(ValueError, match="no edges"):
        homophily_score(ds)


def test_stats_counts():
    feats = SparseMatrix.identity(4)
    edges = np.array([[0, 1], [1, 0], [2, 3]])
    ds = GraphDataset("s", 4, edges, feats, np.array([0, 0, 1, 1]), 2)
    st = stats(ds)
    assert st.n_edges_directed == 3
    assert st.n_edges_undirected == 2
    assert st.n_nodes == 4 and st.n_features == 4 and st.n_classes == 2
    assert st.homophily == pytest.approx(1.0)


def test_save_and_load_splits(tmp_path):
    ds = toy_dataset(n=40, seed=6)
    splits = generate_splits(ds, count=3, seed=1)
    out = str(tmp_path / "splits")
    save_splits(splits, out)
    back = load_splits(out, ds.n)
    assert len(back) == 3
    for x, y in zip(splits, back):
        np.testing.assert_array_equal(x.train, y.train)
        np.testing.assert_array_equal(x.val, y.val)
        np.testing.assert_array_equal(x.test, y.test)


def test_load_splits_errors(tmp_path):
    with pytest.raises(DatasetFormatError, match="missing splits directory"):
        load_splits(str(tmp_path / "nope"), 5)
    d = tmp_path / "splits"
    d.mkdir()
    with pytest.raises(DatasetFormatError, match="no split_"):
        load_splits(str(d), 5)
    _write(str(d), "split_0.json", "train: 0 1\nval: 2\n")
    with pytest.raises(DatasetFormatError, match="missing part 'test'"):
        load_splits(str(d), 5)
    _write(str(d), "split_0.json", "train: 0 1\nval: 2\nweird: 3\n")
    with pytest.raises(DatasetFormatError, match="unknown part"):
        load_splits(str(d), 5)
