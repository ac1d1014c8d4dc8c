"""Sequential selected inversion over normalized supernodal factors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import dense_gemm, dense_trsm
from .numeric import INVERTED, NORMALIZED, LUFactors, StateError
from .sparse import CscMatrix


class EntryNotComputedError(KeyError):
    """Requested inverse entries fall outside the stored pattern."""

    def __init__(self, missing):
        self.missing = list(missing)
        shown = ", ".join(f"({i}, {j})" for i, j in self.missing[:10])
        more = "" if len(self.missing) <= 10 else f" and {len(self.missing) - 10} more"
        super().__init__(f"entry-not-computed: {shown}{more}")


class PatternError(ValueError):
    def __init__(self, offending):
        self.offending = list(offending)
        shown = ", ".join(f"({i}, {j})" for i, j in self.offending[:10])
        super().__init__(f"pattern containment violated at {shown}")


class _Workspace:
    """Growth-only square scratch buffer."""

    def __init__(self, dtype):
        self.buf = np.zeros((0, 0), dtype=dtype)

    def square(self, m: int) -> np.ndarray:
        if self.buf.shape[0] < m:
            self.buf = np.zeros((m, m), dtype=self.buf.dtype)
        return self.buf[:m, :m]


def diag_inverse_term(d: np.ndarray, flops=None) -> np.ndarray:
    """``(L_KK)^-T (U_KK)^-T`` from a packed diagonal block."""
    eye = np.eye(d.shape[0], dtype=d.dtype)
    ut_inv = dense_trsm(d, eye, side="left", lower=False, trans=True, flops=flops)
    return dense_trsm(d, ut_inv, side="left", lower=True, trans=True, unit_diag=True,
                      flops=flops)


def selected_inversion(fac: LUFactors, diag_formula: str = "row",
                       debug: bool = False) -> LUFactors:
    """Overwrite normalized factors with the transposed inverse, in place.

    Supernodes are visited from last to first.  For supernode ``K`` the
    already-final entries at ``C_L x C_U`` are gathered into a dense work
    matrix ``G`` and

    * row panel     ``X_{K,C} = -Lhat_{C,K}^T G``
    * diagonal      ``X_{K,K} = L_KK^-T U_KK^-T - X_{K,C} Uhat_{K,C}^T``
    * column panel  ``X_{C,K} = -G Uhat_{K,C}^T``

    ``diag_formula="column"`` uses the equivalent
    ``L_KK^-T U_KK^-T - Lhat_{C,K}^T X_{C,K}`` instead, which is the form the
    distributed schedule evaluates.  ``debug=True`` keeps the normalized
    panels so :func:`diag_step_crosscheck` can compare both forms afterwards.
    """
    fac.require(NORMALIZED)
    if diag_formula not in ("row", "column"):
        raise ValueError(f"diag_formula must be 'row' or 'column', not {diag_formula!r}")
    flops = fac.flops
    flops.phase = "selinv"
    work = _Workspace(fac.dtype)
    fac.debug = {} if debug else None
    for k in range(fac.partition.count - 1, -1, -1):
        rows = fac.fill.rows[k]
        lhat, uhat = fac.lpanel[k], fac.upanel[k]
        base = diag_inverse_term(fac.diag[k], flops=flops)
        if debug:
            fac.debug[k] = (lhat.copy(), uhat.copy(), base.copy())
        if len(rows) == 0:
            fac.diag[k] = base
            continue
        g = fac.gather(rows, out=work.square(len(rows)))
        x_row = dense_gemm(-1.0, lhat, True, g, False, flops=flops)
        x_col = dense_gemm(-1.0, g, False, uhat, True, flops=flops)
        if diag_formula == "row":
            x_diag = dense_gemm(-1.0, x_row, False, uhat, True, 1.0, base, flops=flops)
        else:
            x_diag = dense_gemm(-1.0, lhat, True, x_col, False, 1.0, base, flops=flops)
        fac.diag[k] = x_diag
        fac.lpanel[k] = x_col
        fac.upanel[k] = x_row
    fac.state = INVERTED
    return fac


def diag_step_crosscheck(fac: LUFactors, k: int) -> float:
    """Largest entrywise gap between the two diagonal-update formulas at ``K``."""
    fac.require(INVERTED)
    if not fac.debug or k not in fac.debug:
        raise StateError("debug data unavailable; rerun selected_inversion(debug=True)")
    lhat, uhat, base = fac.debug[k]
    if lhat.shape[0] == 0:
        return float(np.max(np.abs(fac.diag[k] - base), initial=0.0))
    row_form = base - fac.upanel[k] @ uhat.T
    col_form = base - lhat.T @ fac.lpanel[k]
    return float(np.max(np.abs(row_form - col_form)))


@dataclass
class SelectedEntries:
    """Entries ``(rows[t], cols[t]) -> values[t]`` of the inverse, original indexing."""

    n: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    selection: str = "transpose-pattern"

    def __len__(self):
        return len(self.values)

    def to_csc(self) -> CscMatrix:
        return CscMatrix.from_coo(self.n, self.n, self.rows, self.cols, self.values)

    def as_dict(self) -> dict:
        return {(int(i), int(j)): v for i, j, v in zip(self.rows, self.cols, self.values)}

    def diagonal(self) -> dict:
        on = self.rows == self.cols
        return dict(zip(self.rows[on].tolist(), self.values[on]))

    def _keys(self):
        return self.rows * self.n + self.cols

    def get(self, i, j):
        """Vectorized lookup; returns (values, found)."""
        keys = self._keys()
        order = np.argsort(keys, kind="stable")
        want = np.asarray(i, dtype=np.int64) * self.n + np.asarray(j, dtype=np.int64)
        pos = np.searchsorted(keys[order], want)
        pos_c = np.minimum(pos, max(len(keys) - 1, 0))
        found = (pos < len(keys)) & (keys[order][pos_c] == want) if len(keys) else \
            np.zeros(np.shape(want), dtype=bool)
        vals = np.where(found, self.values[order][pos_c] if len(keys) else 0, 0)
        return vals, found


def extract_selected(fac: LUFactors, pattern: CscMatrix) -> SelectedEntries:
    """Entries ``Ainv[i, j]`` for every stored ``pattern[j, i]``, in original indexing.

    With ``P A Q = LU`` the inverse satisfies ``Ainv = Q Ãinv P``, so
    ``Ainv[i, j]`` is read from the transposed-inverse store at
    ``(p[j], q[i])``.
    """
    fac.require(INVERTED)
    if pattern.shape != (fac.n, fac.n):
        raise ValueError(f"pattern shape {pattern.shape} does not match n={fac.n}")
    pr, pc, _ = pattern.triplets()
    i_out, j_out = pc, pr
    vals, found = fac.lookup(fac.row_perm.perm[j_out], fac.col_perm.perm[i_out])
    if not found.all():
        miss = np.flatnonzero(~found)
        raise EntryNotComputedError(zip(i_out[miss].tolist(), j_out[miss].tolist()))
    return SelectedEntries(fac.n, i_out.copy(), j_out.copy(), vals)


def trace_product(b: CscMatrix, sel: SelectedEntries):
    """``Tr[B Ainv] = sum_ij B[i, j] Ainv[j, i]`` over the stored entries of ``B``."""
    br, bc, bv = b.triplets()
    vals, found = sel.get(bc, br)
    if not found.all():
        miss = np.flatnonzero(~found)
        raise PatternError(zip(br[miss].tolist(), bc[miss].tolist()))
    return np.sum(bv * vals)
