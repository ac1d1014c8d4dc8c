"""Dense oracles and comparison reports."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .inverse import SelectedEntries, trace_product
from .sparse import CscMatrix


class SingularMatrixError(ZeroDivisionError):
    pass


@dataclass
class DenseInverse:
    """Full inverse as a plain 2D array plus its self-residual."""

    data: np.ndarray
    residual: float

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.data), initial=0.0))


def dense_invert(a: CscMatrix, cap: int = 512) -> DenseInverse:
    """Invert by LU with partial pivoting; reports ``max|A Ainv - I|``."""
    n = a.n_rows
    if a.n_cols != n:
        raise ValueError(f"matrix must be square, got {a.shape}")
    if n > cap:
        raise ValueError(f"n={n} exceeds the dense oracle cap {cap}")
    d = a.to_dense()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(d, check_finite=True)
    udiag = np.abs(np.diag(lu))
    if n and (udiag.min() == 0 or udiag.min() <= np.finfo(float).eps * n * udiag.max()):
        raise SingularMatrixError("matrix is singular to working precision")
    inv = sla.lu_solve((lu, piv), np.eye(n, dtype=lu.dtype))
    res = float(np.max(np.abs(d @ inv - np.eye(n)), initial=0.0))
    return DenseInverse(inv, res)


@dataclass
class ComparisonReport:
    """Deviations of selected entries from a dense oracle.

    All deviations are divided by ``scale = max|oracle|``.
    """

    scale: float
    max_dev: float
    norm_dev: float
    diag_max_dev: float
    diag_norm_dev: float
    tol: float
    count: int
    violations: list = field(default_factory=list)
    rows: np.ndarray | None = None
    cols: np.ndarray | None = None
    computed: np.ndarray | None = None
    expected: np.ndarray | None = None

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "entries": self.count,
            "scale": self.scale,
            "max_dev": self.max_dev,
            "norm_dev": self.norm_dev,
            "diag_max_dev": self.diag_max_dev,
            "diag_norm_dev": self.diag_norm_dev,
            "tol": self.tol,
            "violations": len(self.violations),
            "passed": self.passed,
        }

    def recomputed_max_dev(self) -> float:
        if self.count == 0:
            return 0.0
        return float(np.max(np.abs(self.computed - self.expected)) / self.scale)


def compare_selected(sel: SelectedEntries, oracle: DenseInverse, tol: float = 1e-8,
                     max_listed: int = 50) -> ComparisonReport:
    if sel.n != oracle.n:
        raise ValueError(f"selected entries have n={sel.n}, oracle has n={oracle.n}")
    if len(sel) and (sel.rows.min() < 0 or sel.cols.min() < 0
                     or max(sel.rows.max(), sel.cols.max()) >= oracle.n):
        raise IndexError("selected entry index outside the oracle")
    scale = oracle.max_abs or 1.0
    expected = oracle.data[sel.rows, sel.cols]
    dev = np.abs(sel.values - expected) / scale
    on = sel.rows == sel.cols
    bad = np.flatnonzero(dev > tol)
    viol = [(int(sel.rows[t]), int(sel.cols[t]), float(dev[t])) for t in bad[:max_listed]]
    if len(bad) > max_listed:
        viol += [None] * (len(bad) - max_listed)
    return ComparisonReport(
        scale=scale,
        max_dev=float(dev.max(initial=0.0)),
        norm_dev=float(np.linalg.norm(sel.values - expected) / scale),
        diag_max_dev=float(dev[on].max(initial=0.0)),
        diag_norm_dev=float(np.linalg.norm((sel.values - expected)[on]) / scale),
        tol=tol, count=len(sel), violations=viol,
        rows=sel.rows, cols=sel.cols, computed=sel.values, expected=expected,
    )


def trace_identity_check(a: CscMatrix, sel: SelectedEntries) -> float:
    """``|Tr[A Ainv] - N| / N``."""
    n = a.n_rows
    if n == 0:
        return 0.0
    return float(abs(trace_product(a, sel) - n) / n)


def condition_estimate(a: CscMatrix) -> float:
    """Infinity-norm condition number from the dense inverse (small matrices only)."""
    d = a.to_dense()
    return float(np.linalg.norm(d, np.inf) * np.linalg.norm(np.linalg.inv(d), np.inf))


def factor_residual(fac, a_perm: CscMatrix) -> float:
    """``||L U - Ã||_F / ||Ã||_F`` for factors in the factored state."""
    lo, up = fac.dense_factors()
    ad = a_perm.to_dense()
    return float(np.linalg.norm(lo @ up - ad) / np.linalg.norm(ad))


def normalization_residual(factored, normalized) -> float:
    """Largest relative gap in ``Lhat L_KK = L_{C,K}`` and ``U_KK Uhat = U_{K,C}``."""
    worst = 0.0
    for k in range(factored.partition.count):
        d = factored.diag[k]
        lkk = np.tril(d, -1) + np.eye(d.shape[0])
        ukk = np.triu(d)
        for got, want in ((normalized.lpanel[k] @ lkk, factored.lpanel[k]),
                          (ukk @ normalized.upanel[k], factored.upanel[k])):
            if want.size:
                scale = max(np.max(np.abs(want)), np.finfo(float).tiny)
                worst = max(worst, float(np.max(np.abs(got - want)) / scale))
    return worst


def max_block_deviation(got, want) -> float:
    """Largest ``max|got - want| / max|want|`` over every stored block."""
    worst = 0.0
    for k in range(want.partition.count):
        pairs = [(got.diag[k], want.diag[k])]
        pairs += [(g[2], w[2]) for g, w in zip(got.l_blocks(k), want.l_blocks(k))]
        pairs += [(g[2], w[2]) for g, w in zip(got.u_blocks(k), want.u_blocks(k))]
        for g, w in pairs:
            if g.shape != w.shape:
                raise ValueError(f"block shapes differ in supernode {k}: {g.shape} vs {w.shape}")
            diff = float(np.max(np.abs(g - w), initial=0.0))
            if diff:
                worst = max(worst, diff / max(float(np.max(np.abs(w))), np.finfo(float).tiny))
    return worst


def bitwise_equal(got, want) -> bool:
    return all(np.array_equal(g, w) for g, w in zip(got.diag + got.lpanel + got.upanel,
                                                     want.diag + want.lpanel + want.upanel))
