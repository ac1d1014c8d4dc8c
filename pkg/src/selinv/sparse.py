"""Compressed-sparse-column containers, permutations and Matrix Market I/O."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import BinaryIO, TextIO, Union

import numpy as np
import scipy.sparse as sp


class MatrixMarketError(ValueError):
    """Malformed Matrix Market input."""


@dataclass(frozen=True)
class CscMatrix:
    """General sparse matrix in compressed-sparse-column form.

    Row indices are strictly increasing within each column and no (row, col)
    pair is stored twice.  Use :meth:`from_coo` to build one from unsorted
    triplets.
    """

    n_rows: int
    n_cols: int
    col_ptr: np.ndarray
    row_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        col_ptr = np.asarray(self.col_ptr, dtype=np.int64)
        row_idx = np.asarray(self.row_idx, dtype=np.int64)
        values = np.asarray(self.values)
        object.__setattr__(self, "col_ptr", col_ptr)
        object.__setattr__(self, "row_idx", row_idx)
        object.__setattr__(self, "values", values)
        if col_ptr.shape != (self.n_cols + 1,) or col_ptr[0] != 0:
            raise ValueError("col_ptr must have length n_cols + 1 and start at 0")
        if np.any(np.diff(col_ptr) < 0):
            raise ValueError("col_ptr must be non-decreasing")
        if col_ptr[-1] != len(row_idx) or len(row_idx) != len(values):
            raise ValueError("col_ptr[-1], len(row_idx) and len(values) disagree")
        if len(row_idx):
            if row_idx.min() < 0 or row_idx.max() >= self.n_rows:
                raise ValueError("row index out of range")
            steps = np.diff(row_idx)
            # a non-increasing step is only allowed across a column boundary
            starts = np.zeros(len(row_idx), dtype=bool)
            starts[col_ptr[:-1][col_ptr[:-1] < len(row_idx)]] = True
            if np.any((steps <= 0) & ~starts[1:]):
                raise ValueError("row indices must be strictly increasing per column")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self) -> int:
        return int(self.col_ptr[-1])

    @property
    def dtype(self):
        return self.values.dtype

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, values, dtype=None) -> "CscMatrix":
        """Build from triplets; duplicates are summed, explicit zeros kept."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=dtype)
        if values.dtype.kind not in "fc":
            values = values.astype(np.float64)
        if len(rows) and (rows.min() < 0 or rows.max() >= n_rows
                          or cols.min() < 0 or cols.max() >= n_cols):
            raise ValueError("index out of bounds")
        order = np.lexsort((rows, cols))
        rows, cols, values = rows[order], cols[order], values[order]
        if len(rows):
            new = np.ones(len(rows), dtype=bool)
            new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            group = np.cumsum(new) - 1
            summed = np.zeros(int(group[-1]) + 1, dtype=values.dtype)
            np.add.at(summed, group, values)
            rows, cols, values = rows[new], cols[new], summed
        col_ptr = np.zeros(n_cols + 1, dtype=np.int64)
        np.add.at(col_ptr, cols + 1, 1)
        return cls(n_rows, n_cols, np.cumsum(col_ptr), rows, values)

    @classmethod
    def from_dense(cls, a, keep_zeros: bool = False) -> "CscMatrix":
        a = np.asarray(a)
        if a.dtype.kind not in "fc":
            a = a.astype(np.float64)
        mask = np.ones(a.shape, dtype=bool) if keep_zeros else a != 0
        rows, cols = np.nonzero(mask)
        return cls.from_coo(a.shape[0], a.shape[1], rows, cols, a[rows, cols])

    @classmethod
    def identity(cls, n: int, dtype=np.float64) -> "CscMatrix":
        idx = np.arange(n, dtype=np.int64)
        return cls(n, n, np.arange(n + 1, dtype=np.int64), idx, np.ones(n, dtype=dtype))

    @classmethod
    def from_scipy(cls, m) -> "CscMatrix":
        m = sp.csc_matrix(m)
        m.sum_duplicates()
        m.sort_indices()
        values = m.data if m.data.dtype.kind in "fc" else m.data.astype(np.float64)
        return cls(m.shape[0], m.shape[1], m.indptr.copy(), m.indices.copy(), values.copy())

    def to_scipy(self) -> sp.csc_matrix:
        return sp.csc_matrix((self.values, self.row_idx, self.col_ptr), shape=self.shape)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=self.values.dtype)
        out[self.row_idx, self.col_indices()] = self.values
        return out

    def col_indices(self) -> np.ndarray:
        """Column index of every stored entry (parallel to ``row_idx``)."""
        return np.repeat(np.arange(self.n_cols), np.diff(self.col_ptr))

    def triplets(self):
        return self.row_idx, self.col_indices(), self.values

    def transpose(self) -> "CscMatrix":
        r, c, v = self.triplets()
        return CscMatrix.from_coo(self.n_cols, self.n_rows, c, r, v)

    def astype(self, dtype) -> "CscMatrix":
        return CscMatrix(self.n_rows, self.n_cols, self.col_ptr, self.row_idx,
                         self.values.astype(dtype))

    def pattern_equal(self, other: "CscMatrix") -> bool:
        return (self.shape == other.shape
                and np.array_equal(self.col_ptr, other.col_ptr)
                and np.array_equal(self.row_idx, other.row_idx))

    def __eq__(self, other):
        if not isinstance(other, CscMatrix):
            return NotImplemented
        return self.pattern_equal(other) and np.array_equal(self.values, other.values)

    __hash__ = None


def identity(n: int, dtype=np.float64) -> CscMatrix:
    idx = np.arange(n)
    return CscMatrix(n, n, np.arange(n + 1), idx, np.ones(n, dtype=dtype))


@dataclass
class Permutation:
    """Bijection on ``range(n)``; ``perm[old] = new``."""

    perm: np.ndarray
    _inverse: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.perm = np.asarray(self.perm, dtype=np.int64)
        n = len(self.perm)
        seen = np.zeros(n, dtype=bool)
        if n and (self.perm.min() < 0 or self.perm.max() >= n):
            raise ValueError("permutation entries out of range")
        seen[self.perm] = True
        if not seen.all():
            raise ValueError("not a permutation")

    def __len__(self):
        return len(self.perm)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n))

    @classmethod
    def from_order(cls, order) -> "Permutation":
        """From an elimination order: ``order[new] = old``."""
        order = np.asarray(order, dtype=np.int64)
        perm = np.empty_like(order)
        perm[order] = np.arange(len(order))
        return cls(perm)

    @property
    def inverse(self) -> np.ndarray:
        """``inverse[new] = old``."""
        if self._inverse is None:
            inv = np.empty_like(self.perm)
            inv[self.perm] = np.arange(len(self.perm))
            self._inverse = inv
        return self._inverse

    def inverted(self) -> "Permutation":
        return Permutation(self.inverse)

    def compose(self, first: "Permutation") -> "Permutation":
        """Apply ``first`` then ``self``."""
        return Permutation(self.perm[first.perm])

    def matrix(self) -> np.ndarray:
        """Dense matrix M with ``M[perm[i], i] = 1``, so ``(M x)[perm[i]] = x[i]``."""
        n = len(self.perm)
        m = np.zeros((n, n))
        m[self.perm, np.arange(n)] = 1.0
        return m

    def __eq__(self, other):
        return isinstance(other, Permutation) and np.array_equal(self.perm, other.perm)


def permute(a: CscMatrix, p: Permutation, q: Permutation) -> CscMatrix:
    """Return ``P A Q`` as a new matrix.

    Entry ``A[i, j]`` lands at ``[p.perm[i], q.perm[j]]``.  As dense matrices
    this is ``p.matrix() @ A @ q.matrix().T``.
    """
    if len(p) != a.n_rows or len(q) != a.n_cols:
        raise ValueError(
            f"permutation sizes ({len(p)}, {len(q)}) do not match matrix {a.shape}")
    r, c, v = a.triplets()
    return CscMatrix.from_coo(a.n_rows, a.n_cols, p.perm[r], q.perm[c], v)


# --------------------------------------------------------------------------
# Matrix Market

_FIELDS = ("real", "complex", "integer", "pattern")
_SYMMETRIES = ("general", "symmetric")


def _as_text(source) -> TextIO:
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(source.decode())
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r")
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="ascii")


def mm_read(source: Union[str, os.PathLike, bytes, BinaryIO, TextIO]) -> CscMatrix:
    """Parse a Matrix Market ``coordinate`` file.

    Symmetric storage is expanded, pattern entries become 1 and duplicate
    entries are summed.  Errors carry the 1-based line number.
    """
    owns = isinstance(source, (str, os.PathLike))
    fh = _as_text(source)
    try:
        lines = fh.read().splitlines()
    finally:
        if owns:
            fh.close()

    if not lines:
        raise MatrixMarketError("line 1: empty input")
    head = lines[0].split()
    if len(head) != 5 or head[0].lower() != "%%matrixmarket" or head[1].lower() != "matrix":
        raise MatrixMarketError("line 1: malformed header")
    fmt, fld, sym = (h.lower() for h in head[2:])
    if fmt != "coordinate":
        raise MatrixMarketError(f"line 1: unsupported format {fmt!r} (need coordinate)")
    if fld not in _FIELDS:
        raise MatrixMarketError(f"line 1: unsupported field {fld!r}")
    if sym not in _SYMMETRIES:
        raise MatrixMarketError(f"line 1: unsupported symmetry {sym!r}")

    lineno = 1
    size_line = None
    for lineno in range(2, len(lines) + 1):
        text = lines[lineno - 1].strip()
        if text and not text.startswith("%"):
            size_line = text
            break
    if size_line is None:
        raise MatrixMarketError(f"line {lineno}: missing size line")
    try:
        n_rows, n_cols, nnz = (int(t) for t in size_line.split())
    except ValueError:
        raise MatrixMarketError(f"line {lineno}: malformed size line") from None

    ncol_expected = {"pattern": 2, "complex": 4}.get(fld, 3)
    rows, cols, vals = [], [], []
    n_entries = 0
    for k in range(lineno + 1, len(lines) + 1):
        text = lines[k - 1].strip()
        if not text or text.startswith("%"):
            continue
        tok = text.split()
        if len(tok) != ncol_expected:
            raise MatrixMarketError(f"line {k}: expected {ncol_expected} fields, got {len(tok)}")
        try:
            i, j = int(tok[0]), int(tok[1])
            if fld == "pattern":
                v = 1.0
            elif fld == "complex":
                v = complex(float(tok[2]), float(tok[3]))
            else:
                v = float(tok[2])
        except ValueError:
            raise MatrixMarketError(f"line {k}: malformed entry") from None
        if not (1 <= i <= n_rows and 1 <= j <= n_cols):
            raise MatrixMarketError(f"index out of bounds at line {k}: ({i}, {j})")
        n_entries += 1
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(v)
        if sym == "symmetric" and i != j:
            rows.append(j - 1)
            cols.append(i - 1)
            vals.append(v)

    if n_entries != nnz:
        raise MatrixMarketError(f"line {len(lines)}: expected {nnz} entries, found {n_entries}")
    dtype = np.complex128 if fld == "complex" else np.float64
    return CscMatrix.from_coo(n_rows, n_cols, rows, cols, np.array(vals, dtype=dtype))


def mm_write(a: CscMatrix, sink: Union[str, os.PathLike, BinaryIO, TextIO], comment: str | None = None) -> None:
    """Write ``a`` as a general coordinate file (real or complex)."""
    is_complex = a.values.dtype.kind == "c"
    out = [f"%%MatrixMarket matrix coordinate {'complex' if is_complex else 'real'} general"]
    if comment:
        out.extend("%" + line for line in comment.splitlines())
    out.append(f"{a.n_rows} {a.n_cols} {a.nnz}")
    r, c, v = a.triplets()
    for i, j, x in zip(r, c, v):
        if is_complex:
            out.append(f"{i + 1} {j + 1} {float(x.real)!r} {float(x.imag)!r}")
        else:
            out.append(f"{i + 1} {j + 1} {float(x)!r}")
    text = "\n".join(out) + "\n"
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w") as fh:
            fh.write(text)
    elif isinstance(sink, io.TextIOBase):
        sink.write(text)
    else:
        sink.write(text.encode("ascii"))
