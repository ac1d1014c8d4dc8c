"""End-to-end driver: order, analyze, factor, normalize, invert, extract."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .inverse import SelectedEntries, extract_selected, selected_inversion
from .numeric import LUFactors, factorize, normalize
from .sparse import CscMatrix, Permutation, permute
from .symbolic import (EliminationTree, FillPattern, RelaxParams, SupernodePartition,
                       SymPattern, detect_supernodes, elimination_tree,
                       fill_reducing_order, scalar_lu_nnz, symbolic_factorize,
                       symmetrize_pattern)

Ordering = Union[str, Permutation]


def read_permutation(path: str) -> Permutation:
    """One integer per line: the new (0-based) position of each old index."""
    return Permutation(np.loadtxt(path, dtype=np.int64, ndmin=1))


def resolve_ordering(a: CscMatrix, ordering: Ordering) -> Permutation:
    if isinstance(ordering, Permutation):
        return ordering
    if ordering.startswith("file:"):
        return read_permutation(ordering[5:])
    return fill_reducing_order(symmetrize_pattern(a), ordering)


@dataclass
class Analysis:
    a_perm: CscMatrix
    row_perm: Permutation
    col_perm: Permutation
    partition: SupernodePartition
    fill: FillPattern
    etree: EliminationTree
    sym: SymPattern

    @property
    def nnz_lu(self) -> int:
        """Structural ``|L + U|``; padding inside relaxed supernodes is not counted."""
        return scalar_lu_nnz(self.sym)

    @property
    def nnz_lu_stored(self) -> int:
        return self.fill.lu_nnz()


def analyze(a: CscMatrix, ordering: Ordering = "mindeg", relax: RelaxParams = RelaxParams(),
            row_perm: Permutation | None = None, col_perm: Permutation | None = None,
            static_row_perm: Permutation | None = None,
            partition: SupernodePartition | None = None) -> Analysis:
    """Choose ``P`` and ``Q``, permute, and run the structural analysis.

    Either pass both ``row_perm`` and ``col_perm`` explicitly, or let
    ``ordering`` pick a symmetric fill-reducing permutation of
    ``static_row_perm @ A`` (the static row permutation is applied first).
    """
    if a.n_rows != a.n_cols:
        raise ValueError(f"matrix must be square, got {a.shape}")
    n = a.n_rows
    if (row_perm is None) != (col_perm is None):
        raise ValueError("pass both row_perm and col_perm, or neither")
    if row_perm is None:
        p0 = static_row_perm if static_row_perm is not None else Permutation.identity(n)
        a0 = permute(a, p0, Permutation.identity(n))
        r = resolve_ordering(a0, ordering)
        row_perm, col_perm = r.compose(p0), r
    a_perm = permute(a, row_perm, col_perm)
    sym = symmetrize_pattern(a_perm)
    part = partition if partition is not None else detect_supernodes(sym, None, relax)
    fill = symbolic_factorize(sym, None, part)
    return Analysis(a_perm, row_perm, col_perm, part, fill, elimination_tree(fill, part), sym)


def factor(a: CscMatrix, dtype=None, perturb_pivots: bool = False,
           pivot_threshold: float | None = None, **kwargs) -> tuple[Analysis, LUFactors]:
    an = analyze(a, **kwargs)
    fac = factorize(an.a_perm, an.partition, an.fill, row_perm=an.row_perm,
                    col_perm=an.col_perm, perturb_pivots=perturb_pivots,
                    pivot_threshold=pivot_threshold, dtype=dtype)
    return an, fac


@dataclass
class SelInvResult:
    analysis: Analysis
    factors: LUFactors
    selected: SelectedEntries

    @property
    def nnz_a(self) -> int:
        return self.analysis.a_perm.nnz

    @property
    def nnz_lu(self) -> int:
        return self.analysis.nnz_lu

    @property
    def factor_flops(self) -> int:
        return self.factors.flops.factor_flops

    @property
    def selinv_flops(self) -> int:
        return self.factors.flops.selinv_flops


def run_selinv(a: CscMatrix, pattern: CscMatrix | None = None, diag_formula: str = "row",
               debug: bool = False, dtype=None, perturb_pivots: bool = False,
               pivot_threshold: float | None = None, **kwargs) -> SelInvResult:
    """Selected entries of ``inv(A)`` at the transpose of ``pattern`` (default: ``A``)."""
    an, fac = factor(a, dtype=dtype, perturb_pivots=perturb_pivots,
                     pivot_threshold=pivot_threshold, **kwargs)
    normalize(fac)
    selected_inversion(fac, diag_formula=diag_formula, debug=debug)
    sel = extract_selected(fac, a if pattern is None else pattern)
    return SelInvResult(an, fac, sel)
