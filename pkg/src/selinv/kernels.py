"""Dense block kernels with a fixed summation order.

Every kernel accumulates in the same loop order on every call, so two code
paths that feed identical operands produce bitwise-identical results.  BLAS
is deliberately avoided here for that reason.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SingularBlockError(ZeroDivisionError):
    """A triangular or LU kernel met an exact zero on the diagonal."""

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"zero diagonal element at index {index}")


@dataclass
class FlopCounter:
    """Flop totals for the two phases.

    A multiply-add counts 2 flops and a division counts 1, for real and
    complex scalars alike.
    """

    factor_flops: int = 0
    selinv_flops: int = 0
    phase: str = "factor"

    def add(self, n: int) -> None:
        if self.phase == "factor":
            self.factor_flops += int(n)
        else:
            self.selinv_flops += int(n)

    def snapshot(self) -> "FlopCounter":
        return FlopCounter(self.factor_flops, self.selinv_flops, self.phase)

    @property
    def ratio(self) -> float:
        return self.selinv_flops / self.factor_flops if self.factor_flops else float("nan")


def _op(a: np.ndarray, trans: bool) -> np.ndarray:
    return a.T if trans else a


def dense_gemm(alpha, x: np.ndarray, trans_x: bool, y: np.ndarray, trans_y: bool,
               beta=0.0, z: np.ndarray | None = None, flops: FlopCounter | None = None) -> np.ndarray:
    """``alpha * op(x) @ op(y) + beta * z`` with a shape-independent summation order.

    ``op`` is a plain transpose (never conjugate).  ``z`` is not modified;
    when ``beta == 0`` it is ignored entirely.
    """
    ox, oy = _op(x, trans_x), _op(y, trans_y)
    m, k = ox.shape
    k2, n = oy.shape
    if k != k2:
        raise ValueError(f"inner dimensions differ: {ox.shape} @ {oy.shape}")
    if z is not None and beta != 0 and z.shape != (m, n):
        raise ValueError(f"output shape {z.shape} does not match {(m, n)}")
    dtype = np.result_type(ox, oy, alpha, *([z] if z is not None and beta != 0 else []))
    xs = np.ascontiguousarray(ox.T, dtype=dtype)
    ys = np.ascontiguousarray(oy, dtype=dtype)
    acc = _outer_sum(xs, ys)
    if flops is not None:
        flops.add(2 * m * n * k)
    out = alpha * acc
    if beta != 0 and z is not None:
        out = out + beta * z
    return out


_CHUNK = 16


def _outer_sum(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """``sum_p outer(xs[p], ys[p])``, summed over ``p`` in fixed chunks of 16.

    Each output element sees the same sequence of scalar operations no matter
    how many rows or columns surround it (``accumulate`` is strictly
    sequential, unlike ``reduce``, which may switch to pairwise summation
    for some shapes).  Complex parts are combined with
    real operations only, since complex ufunc loops may fuse multiply-adds
    depending on vector length.
    """
    k, m, n = xs.shape[0], xs.shape[1], ys.shape[1]
    cplx = xs.dtype.kind == "c"
    re = np.zeros((m, n))
    im = np.zeros((m, n)) if cplx else None
    for c in range(0, k, _CHUNK):
        sl = slice(c, min(c + _CHUNK, k))
        if cplx:
            xr, xi = xs.real[sl, :, None], xs.imag[sl, :, None]
            yr, yi = ys.real[sl, None, :], ys.imag[sl, None, :]
            re += np.add.accumulate(xr * yr - xi * yi, axis=0)[-1]
            im += np.add.accumulate(xr * yi + xi * yr, axis=0)[-1]
        else:
            re += np.add.accumulate(xs[sl, :, None] * ys[sl, None, :], axis=0)[-1]
    if not cplx:
        return re if re.dtype == xs.dtype else re.astype(xs.dtype)
    out = np.empty((m, n), dtype=xs.dtype)
    out.real, out.imag = re, im
    return out


def _lower_solve(m: np.ndarray, b: np.ndarray, unit: bool) -> np.ndarray:
    n = m.shape[0]
    x = np.array(b, dtype=np.result_type(m, b), order="C")
    m = np.ascontiguousarray(m)
    for i in range(n):
        for j in range(i):
            x[i] -= m[i, j] * x[j]
        if not unit:
            if m[i, i] == 0:
                raise SingularBlockError(i)
            x[i] /= m[i, i]
    return x


def _upper_solve(m: np.ndarray, b: np.ndarray, unit: bool) -> np.ndarray:
    n = m.shape[0]
    x = np.array(b, dtype=np.result_type(m, b), order="C")
    m = np.ascontiguousarray(m)
    for i in range(n - 1, -1, -1):
        for j in range(n - 1, i, -1):
            x[i] -= m[i, j] * x[j]
        if not unit:
            if m[i, i] == 0:
                raise SingularBlockError(i)
            x[i] /= m[i, i]
    return x


def dense_trsm(t: np.ndarray, b: np.ndarray, side: str = "left", lower: bool = True,
               trans: bool = False, unit_diag: bool = False,
               flops: FlopCounter | None = None) -> np.ndarray:
    """Triangular solve with one triangle of ``t``.

    ``side='left'`` solves ``op(T) X = B``; ``side='right'`` solves
    ``X op(T) = B``.  Only the ``lower`` (or upper) triangle of ``t`` is read;
    with ``unit_diag`` its diagonal is taken to be 1.  Returns a new array.
    """
    n = t.shape[0]
    if t.shape != (n, n):
        raise ValueError("triangular factor must be square")
    if side == "left":
        if b.shape[0] != n:
            raise ValueError(f"left solve needs {n} rows, got {b.shape}")
        mat, rhs, eff_lower = _op(t, trans), b, lower != trans
    elif side == "right":
        if b.shape[-1] != n:
            raise ValueError(f"right solve needs {n} columns, got {b.shape}")
        # X op(T) = B  <=>  op(T)^T X^T = B^T
        mat, rhs, eff_lower = _op(t, not trans), b.T, lower == trans
    else:
        raise ValueError(f"side must be 'left' or 'right', not {side!r}")
    solve = _lower_solve if eff_lower else _upper_solve
    x = solve(mat, rhs, unit_diag)
    if flops is not None:
        nrhs = rhs.shape[1] if rhs.ndim == 2 else 1
        flops.add(nrhs * (n * (n - 1) + (0 if unit_diag else n)))
    return x.T if side == "right" else x


def dense_lu_nopivot(a: np.ndarray, flops: FlopCounter | None = None, fix_pivot=None) -> np.ndarray:
    """In-order LU of a square block without pivoting, packed in one array.

    The strict lower triangle holds the unit-lower factor and the upper
    triangle (with diagonal) the upper factor.  ``fix_pivot(k, value)`` may
    return a replacement for a pivot; if it is ``None`` a zero pivot raises
    :class:`SingularBlockError`.
    """
    lu = np.array(a, dtype=a.dtype, order="C")
    n = lu.shape[0]
    for k in range(n):
        if fix_pivot is not None:
            lu[k, k] = fix_pivot(k, lu[k, k])
        if lu[k, k] == 0:
            raise SingularBlockError(k)
        if k + 1 < n:
            lu[k + 1:, k] /= lu[k, k]
            lu[k + 1:, k + 1:] -= np.multiply.outer(lu[k + 1:, k], lu[k, k + 1:])
    if flops is not None:
        flops.add(sum((n - k - 1) + 2 * (n - k - 1) ** 2 for k in range(n)))
    return lu
