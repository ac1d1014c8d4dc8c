"""Supernodal LU factorization without dynamic pivoting, and factor normalization."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .kernels import (FlopCounter, SingularBlockError, dense_gemm, dense_lu_nopivot,
                      dense_trsm)
from .sparse import CscMatrix, Permutation
from .symbolic import FillPattern, SupernodePartition

log = logging.getLogger(__name__)

FACTORED, NORMALIZED, INVERTED = "factored", "normalized", "inverted"


class SingularPivotError(ZeroDivisionError):
    """Exact zero pivot met during factorization (perturbation disabled)."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"singular pivot at index {index}")


class StateError(RuntimeError):
    pass


@dataclass
class LUFactors:
    """Supernodal block storage of ``L`` and ``U``.

    Per supernode ``K`` of size ``s`` with ``m`` stored rows below it:

    * ``diag[K]`` is ``s x s``: unit-lower ``L_KK`` strictly below the
      diagonal and ``U_KK`` on and above it;
    * ``lpanel[K]`` is ``m x s`` and holds ``L`` at rows ``fill.rows[K]``;
    * ``upanel[K]`` is ``s x m`` and holds ``U`` at columns ``fill.rows[K]``.

    After :func:`normalize` the panels hold the normalized factors and after
    selected inversion all three hold entries of the transposed inverse at
    the same positions.
    """

    fill: FillPattern
    diag: list[np.ndarray]
    lpanel: list[np.ndarray]
    upanel: list[np.ndarray]
    row_perm: Permutation
    col_perm: Permutation
    state: str = FACTORED
    flops: FlopCounter = field(default_factory=FlopCounter)
    perturbations: list[tuple[int, complex, complex]] = field(default_factory=list)
    debug: dict | None = None

    @property
    def partition(self) -> SupernodePartition:
        return self.fill.partition

    @property
    def n(self) -> int:
        return self.partition.n

    @property
    def dtype(self):
        return self.diag[0].dtype if self.diag else np.float64

    def require(self, state: str) -> None:
        if self.state != state:
            raise StateError(f"factors are {self.state!r}, operation needs {state!r}")

    def l_blocks(self, k: int):
        """``(I, rows, block)`` for every stored off-diagonal block of column ``K``."""
        f = self.fill
        ptr = f.block_ptr[k]
        return [(int(i), f.rows[k][ptr[t]:ptr[t + 1]], self.lpanel[k][ptr[t]:ptr[t + 1], :])
                for t, i in enumerate(f.block_ids[k])]

    def u_blocks(self, k: int):
        f = self.fill
        ptr = f.block_ptr[k]
        return [(int(j), f.rows[k][ptr[t]:ptr[t + 1]], self.upanel[k][:, ptr[t]:ptr[t + 1]])
                for t, j in enumerate(f.block_ids[k])]

    def lu_nnz(self) -> int:
        return self.fill.lu_nnz()

    def dense_factors(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense ``L`` (unit lower) and ``U`` assembled from the blocks."""
        self.require(FACTORED)
        n, part = self.n, self.partition
        lo = np.zeros((n, n), dtype=self.dtype)
        up = np.zeros((n, n), dtype=self.dtype)
        for k in range(part.count):
            c = np.arange(part.first(k), part.last(k) + 1)
            d = self.diag[k]
            lo[np.ix_(c, c)] = np.tril(d, -1) + np.eye(len(c))
            up[np.ix_(c, c)] = np.triu(d)
            rows = self.fill.rows[k]
            lo[np.ix_(rows, c)] = self.lpanel[k]
            up[np.ix_(c, rows)] = self.upanel[k]
        return lo, up

    def lookup(self, r, c) -> tuple[np.ndarray, np.ndarray]:
        """Values stored at permuted positions ``(r[t], c[t])`` and a found mask."""
        r = np.asarray(r, dtype=np.int64)
        c = np.asarray(c, dtype=np.int64)
        part, f = self.partition, self.fill
        vals = np.zeros(len(r), dtype=self.dtype)
        found = np.zeros(len(r), dtype=bool)
        sr, sc = part.col_to_snode[r], part.col_to_snode[c]
        for t in range(len(r)):
            i, j = int(r[t]), int(c[t])
            if sr[t] == sc[t]:
                k = sr[t]
                vals[t] = self.diag[k][i - part.first(k), j - part.first(k)]
                found[t] = True
            elif sr[t] > sc[t]:
                k = sc[t]
                pos = np.searchsorted(f.rows[k], i)
                if pos < len(f.rows[k]) and f.rows[k][pos] == i:
                    vals[t] = self.lpanel[k][pos, j - part.first(k)]
                    found[t] = True
            else:
                k = sr[t]
                pos = np.searchsorted(f.rows[k], j)
                if pos < len(f.rows[k]) and f.rows[k][pos] == j:
                    vals[t] = self.upanel[k][i - part.first(k), pos]
                    found[t] = True
        return vals, found

    def gather(self, idx: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        """Dense ``len(idx) x len(idx)`` submatrix of the store at ``idx x idx``.

        ``idx`` must be ascending.  Positions that are not stored read as zero.
        """
        part, f = self.partition, self.fill
        m = len(idx)
        g = np.zeros((m, m), dtype=self.dtype) if out is None else out
        if out is not None:
            g[...] = 0
        snodes = part.col_to_snode[idx]
        cuts = np.concatenate([[0], np.flatnonzero(np.diff(snodes)) + 1, [m]])
        for a in range(len(cuts) - 1):
            blk = slice(cuts[a], cuts[a + 1])
            below = slice(cuts[a + 1], m)
            k = int(snodes[cuts[a]])
            local = idx[blk] - part.first(k)
            g[blk, blk] = self.diag[k][np.ix_(local, local)]
            if cuts[a + 1] < m:
                pos, ok = _positions(f.rows[k], idx[below])
                g[below, blk] = np.where(ok[:, None], self.lpanel[k][np.ix_(pos, local)], 0)
                g[blk, below] = np.where(ok[None, :], self.upanel[k][np.ix_(local, pos)], 0)
        return g


def _positions(haystack: np.ndarray, needles: np.ndarray):
    pos = np.searchsorted(haystack, needles)
    pos_c = np.minimum(pos, max(len(haystack) - 1, 0))
    ok = (pos < len(haystack)) & (haystack[pos_c] == needles) if len(haystack) else \
        np.zeros(len(needles), dtype=bool)
    return pos_c, ok


def _pivot_fixer(threshold: float, events: list, offset: int):
    def fix(k, value):
        if abs(value) >= threshold:
            return value
        new = (value / abs(value) if value != 0 else 1.0) * threshold
        events.append((offset + k, value, new))
        log.warning("perturbed pivot %d: %r -> %r", offset + k, value, new)
        return new
    return fix


def factorize(a_perm: CscMatrix, part: SupernodePartition, fill: FillPattern, *,
              row_perm: Permutation | None = None, col_perm: Permutation | None = None,
              perturb_pivots: bool = False, pivot_threshold: float | None = None,
              dtype=None) -> LUFactors:
    """Left-looking supernodal LU of an already-permuted matrix.

    Each supernode assembles its column and row panels from ``a_perm``, takes
    the updates of every descendant whose structure touches it, factors the
    diagonal block without pivoting and solves for the off-diagonal panels.
    """
    n = a_perm.n_rows
    if a_perm.n_cols != n or part.n != n:
        raise ValueError("matrix, partition and fill pattern sizes disagree")
    dtype = np.result_type(a_perm.values.dtype, np.float64) if dtype is None else np.dtype(dtype)
    flops = FlopCounter(phase="factor")
    perturbations: list = []
    if perturb_pivots and pivot_threshold is None:
        norm_inf = np.abs(a_perm.to_scipy()).sum(axis=1).max() if a_perm.nnz else 0.0
        pivot_threshold = float(np.sqrt(np.finfo(np.float64).eps) * norm_inf)

    csc = a_perm.to_scipy().astype(dtype)
    csr = sp.csr_matrix(csc)
    nsn = part.count
    updaters: list[list[int]] = [[] for _ in range(nsn)]
    for d in range(nsn):
        for i in fill.block_ids[d]:
            updaters[int(i)].append(d)

    diag, lpanel, upanel = [], [], []
    for k in range(nsn):
        first, last, s = part.first(k), part.last(k), part.size(k)
        rows = fill.rows[k]
        m = len(rows)
        lbuf = np.zeros((s + m, s), dtype=dtype)
        ubuf = np.zeros((s, m), dtype=dtype)

        def local_rows(g):
            out = np.where(g <= last, g - first, 0)
            below = g > last
            pos = np.searchsorted(rows, g[below])
            if np.any(pos >= m) or np.any(rows[np.minimum(pos, m - 1)] != g[below]):
                raise ValueError(f"entry outside the symbolic pattern of supernode {k}")
            out[below] = s + pos
            return out

        for j in range(first, last + 1):
            lo, hi = csc.indptr[j], csc.indptr[j + 1]
            ri, vv = csc.indices[lo:hi], csc.data[lo:hi]
            keep = ri >= first
            lbuf[local_rows(ri[keep]), j - first] = vv[keep]
            lo, hi = csr.indptr[j], csr.indptr[j + 1]
            ci, vv = csr.indices[lo:hi], csr.data[lo:hi]
            keep = ci > last
            ubuf[j - first, local_rows(ci[keep]) - s] = vv[keep]

        for d in updaters[k]:
            rd = fill.rows[d]
            start = np.searchsorted(rd, first)
            kend = np.searchsorted(rd, last + 1)
            inner = rd[start:kend] - first
            prod = dense_gemm(1.0, lpanel[d][start:], False, upanel[d][:, start:kend], False,
                              flops=flops)
            lbuf[np.ix_(local_rows(rd[start:]), inner)] -= prod
            if kend < len(rd):
                prod = dense_gemm(1.0, lpanel[d][start:kend], False, upanel[d][:, kend:], False,
                                  flops=flops)
                ubuf[np.ix_(inner, local_rows(rd[kend:]) - s)] -= prod

        fix = _pivot_fixer(pivot_threshold, perturbations, first) if perturb_pivots else None
        try:
            lu = dense_lu_nopivot(lbuf[:s], flops=flops, fix_pivot=fix)
            lp = dense_trsm(lu, lbuf[s:], side="right", lower=False, flops=flops)
        except SingularBlockError as exc:
            raise SingularPivotError(first + exc.index) from None
        up = dense_trsm(lu, ubuf, side="left", lower=True, unit_diag=True, flops=flops)
        diag.append(lu)
        lpanel.append(lp)
        upanel.append(up)

    return LUFactors(fill, diag, lpanel, upanel,
                     row_perm if row_perm is not None else Permutation.identity(n),
                     col_perm if col_perm is not None else Permutation.identity(n),
                     FACTORED, flops, perturbations)


def normalize(fac: LUFactors) -> LUFactors:
    """Overwrite panels with ``L_IK (L_KK)^-1`` and ``(U_KK)^-1 U_KJ`` in place."""
    fac.require(FACTORED)
    fac.flops.phase = "selinv"
    for k in range(fac.partition.count):
        d = fac.diag[k]
        try:
            fac.lpanel[k] = dense_trsm(d, fac.lpanel[k], side="right", lower=True,
                                       unit_diag=True, flops=fac.flops)
            fac.upanel[k] = dense_trsm(d, fac.upanel[k], side="left", lower=False,
                                       flops=fac.flops)
        except SingularBlockError as exc:
            raise SingularPivotError(fac.partition.first(k) + exc.index) from None
    fac.state = NORMALIZED
    return fac


def lu_solve(fac: LUFactors, b) -> np.ndarray:
    """Solve ``L U x = b`` for the permuted system by block substitution."""
    fac.require(FACTORED)
    part, f = fac.partition, fac.fill
    y = np.array(b, dtype=np.result_type(fac.dtype, np.asarray(b).dtype))
    for k in range(part.count):
        c = slice(part.first(k), part.last(k) + 1)
        y[c] = dense_trsm(fac.diag[k], y[c], side="left", lower=True, unit_diag=True)
        if len(f.rows[k]):
            y[f.rows[k]] -= fac.lpanel[k] @ y[c]
    x = y
    for k in range(part.count - 1, -1, -1):
        c = slice(part.first(k), part.last(k) + 1)
        rhs = x[c] - (fac.upanel[k] @ x[f.rows[k]] if len(f.rows[k]) else 0)
        x[c] = dense_trsm(fac.diag[k], rhs, side="left", lower=False)
    return x


def flop_report(fac: LUFactors) -> FlopCounter:
    return fac.flops.snapshot()
