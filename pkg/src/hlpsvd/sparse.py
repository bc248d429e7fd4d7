"""CSR sparse and row-major dense matrix kernels.

Every other module works on the two containers defined here: an immutable
canonical CSR ``SparseMatrix`` for adjacency and feature data, and plain
float64 C-order numpy arrays for dense data (``DenseMatrix`` is an alias).

Canonical CSR means: column indices strictly increasing within each row,
duplicate entries summed at construction, explicit zeros dropped. All
values are float64. Instances are immutable and safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as _scipy_sparse

__all__ = [
    "DenseMatrix",
    "SparseMatrix",
    "spmm",
    "transpose",
    "symmetrize",
    "normalize",
    "degree_vector",
]

# 2-D float64 C-order array; kept as an alias because wrapping numpy buys
# nothing here.
DenseMatrix = np.ndarray


def as_dense(values, n_rows: int | None = None, n_cols: int | None = None) -> np.ndarray:
    """Coerce to a finite float64 C-order 2-D array, optionally checking shape."""
    out = np.ascontiguousarray(values, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError(f"dense matrix must be 2-D, got ndim={out.ndim}")
    if n_rows is not None and out.shape[0] != n_rows:
        raise ValueError(f"expected {n_rows} rows, got {out.shape[0]}")
    if n_cols is not None and out.shape[1] != n_cols:
        raise ValueError(f"expected {n_cols} columns, got {out.shape[1]}")
    if not np.isfinite(out).all():
        raise ValueError("dense matrix contains non-finite entries")
    return out


@dataclass(frozen=True)
class SparseMatrix:
    """Immutable CSR matrix in canonical form.

    Use :meth:`from_coo` or :meth:`from_dense` instead of the raw
    constructor; they establish the canonical invariants (sorted unique
    columns per row, no stored zeros, float64 values).
    """

    n_rows: int
    n_cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    @staticmethod
    def from_coo(n_rows, n_cols, rows, cols, vals) -> "SparseMatrix":
        """Build from triplets; duplicates are summed, zeros dropped."""
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=np.float64).ravel()
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("rows, cols, vals must have equal length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= n_rows:
                raise ValueError("row index out of range")
            if cols.min() < 0 or cols.max() >= n_cols:
                raise ValueError("column index out of range")
        if not np.isfinite(vals).all():
            raise ValueError("sparse matrix values must be finite")

        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            # sum duplicates: run starts of unique (row, col) pairs
            keys = rows * np.int64(n_cols) + cols
            starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
            keep = vals != 0.0
            rows, cols, vals = rows[keep], cols[keep], vals[keep]

        offsets = np.zeros(n_rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n_rows), out=offsets[1:])
        m = SparseMatrix(int(n_rows), int(n_cols), offsets, cols, vals)
        for arr in (m.row_offsets, m.col_indices, m.values):
            arr.flags.writeable = False
        return m

    @staticmethod
    def from_dense(arr) -> "SparseMatrix":
        arr = np.asarray(arr, dtype=np.float64)
        rows, cols = np.nonzero(arr)
        return SparseMatrix.from_coo(arr.shape[0], arr.shape[1], rows, cols, arr[rows, cols])

    @staticmethod
    def identity(n: int) -> "SparseMatrix":
        idx = np.arange(n)
        return SparseMatrix.from_coo(n, n, idx, idx, np.ones(n))

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    def row_ids(self) -> np.ndarray:
        """Expand row_offsets to one row id per stored entry."""
        return np.repeat(np.arange(self.n_rows, dtype=np.int64), np.diff(self.row_offsets))

    def to_scipy(self) -> _scipy_sparse.csr_matrix:
        """Zero-copy scipy view, used for the compiled product kernels."""
        return _scipy_sparse.csr_matrix(
            (self.values, self.col_indices, self.row_offsets),
            shape=(self.n_rows, self.n_cols),
        )

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols))
        out[self.row_ids(), self.col_indices] = self.values
        return out


def spmm(a: SparseMatrix, b: np.ndarray) -> np.ndarray:
    """Sparse-dense product ``a @ b``.

    Delegates to scipy's compiled CSR kernel, which accumulates each output
    row over the stored entries in index order (deterministic).
    """
    b = np.asarray(b, dtype=np.float64)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    if a.n_cols != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.n_rows}x{a.n_cols} @ {b.shape}")
    out = a.to_scipy() @ b
    out = np.ascontiguousarray(out)
    return out[:, 0] if squeeze else out


def transpose(a: SparseMatrix) -> SparseMatrix:
    """Exchange rows and columns; the result is canonical."""
    return SparseMatrix.from_coo(a.n_cols, a.n_rows, a.col_indices, a.row_ids(), a.values)


def symmetrize(a: SparseMatrix) -> SparseMatrix:
    """Binarized union of a square matrix's pattern with its transpose.

    result[i, j] = 1 where a[i, j] != 0 or a[j, i] != 0.
    """
    if a.n_rows != a.n_cols:
        raise ValueError("symmetrize requires a square matrix")
    rows = np.concatenate([a.row_ids(), a.col_indices])
    cols = np.concatenate([a.col_indices, a.row_ids()])
    m = SparseMatrix.from_coo(a.n_rows, a.n_cols, rows, cols, np.ones(rows.size))
    ones = np.ones_like(m.values)
    ones.flags.writeable = False
    return SparseMatrix(m.n_rows, m.n_cols, m.row_offsets, m.col_indices, ones)


def degree_vector(a: SparseMatrix) -> np.ndarray:
    """Row sums of a square matrix."""
    if a.n_rows != a.n_cols:
        raise ValueError("degree_vector requires a square matrix")
    out = np.zeros(a.n_rows)
    np.add.at(out, a.row_ids(), a.values)
    return out


def normalize(a: SparseMatrix, mode: str) -> SparseMatrix:
    """Degree normalization of a square non-negative matrix.

    mode 'none' returns the input; 'row' scales row i by 1/deg(i); 'sym'
    scales entry (i, j) by 1/sqrt(deg(i) deg(j)). Rows with zero degree get
    scale factor 0, so isolated nodes stay all-zero instead of producing
    NaN.
    """
    if mode not in ("none", "row", "sym"):
        raise ValueError(f"unknown normalization mode: {mode!r}")
    if a.n_rows != a.n_cols:
        raise ValueError("normalize requires a square matrix")
    if a.values.size and a.values.min() < 0:
        raise ValueError("normalize requires non-negative values")
    if mode == "none":
        return a
    deg = degree_vector(a)
    with np.errstate(divide="ignore"):
        if mode == "row":
            scale = np.where(deg > 0, 1.0 / deg, 0.0)
            vals = a.values * scale[a.row_ids()]
        else:
            scale = np.where(deg > 0, 1.0 / np.sqrt(deg), 0.0)
            vals = a.values * scale[a.row_ids()] * scale[a.col_indices]
    return SparseMatrix.from_coo(a.n_rows, a.n_cols, a.row_ids(), a.col_indices, vals)
