"""Deterministic test matrices.

Four families: random sparse nonsymmetric, 2D five-point grids with a
convection term, sparse triangular, and complex structurally symmetric
k-point style Hamiltonians shifted off the real axis.  All are diagonally
dominant or close to it, so static (no) pivoting is safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sparse import CscMatrix
from .symbolic import SupernodePartition


@dataclass(frozen=True)
class CorpusMatrix:
    name: str
    family: str
    matrix: CscMatrix

    @property
    def n(self) -> int:
        return self.matrix.n_rows

    @property
    def structurally_symmetric(self) -> bool:
        m = self.matrix.to_scipy() != 0
        return (m != m.T).nnz == 0


def random_sparse(n: int, density: float, seed: int, dtype=np.float64) -> CscMatrix:
    """Nonsymmetric random pattern, diagonally dominant by rows."""
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < density
    d = np.where(mask, rng.standard_normal((n, n)), 0.0).astype(dtype)
    if np.iscomplexobj(d):
        d = d + 1j * np.where(mask, rng.standard_normal((n, n)), 0.0)
    np.fill_diagonal(d, 0)
    rowsum = np.abs(d).sum(axis=1)
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    np.fill_diagonal(d, sign * (rowsum + 1.0 + rng.random(n)))
    return CscMatrix.from_dense(d)


def grid5(side: int, convection: float = 0.3, shift: float = 0.0) -> CscMatrix:
    """Five-point operator on a ``side x side`` grid; upwind-skewed off-diagonals."""
    n = side * side
    rows, cols, vals = [], [], []
    for y in range(side):
        for x in range(side):
            k = y * side + x
            rows.append(k), cols.append(k), vals.append(4.0 + shift)
            for dx, dy, w in ((1, 0, -1 + convection), (-1, 0, -1 - convection),
                              (0, 1, -1 + convection / 2), (0, -1, -1 - convection / 2)):
                xx, yy = x + dx, y + dy
                if 0 <= xx < side and 0 <= yy < side:
                    rows.append(k), cols.append(yy * side + xx), vals.append(w)
    return CscMatrix.from_coo(n, n, rows, cols, vals)


def triangular(n: int, density: float, seed: int, lower: bool = True) -> CscMatrix:
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < density
    d = np.where(mask, 0.5 * rng.standard_normal((n, n)), 0.0)
    d = np.tril(d, -1) if lower else np.triu(d, 1)
    off = np.abs(d).sum(axis=1)
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    np.fill_diagonal(d, sign * (off + 0.5 + rng.random(n)))
    return CscMatrix.from_dense(d)


def kpoint(ncell: int, block: int, kpt: float, seed: int, eta: float = 0.5) -> CscMatrix:
    """``H(k) - z I`` for a periodic chain of ``ncell`` cells with ``block`` orbitals.

    ``H(k)`` is Hermitian with Bloch phases on the wrap-around blocks and
    ``z = E + i*eta`` is complex, so the result is complex, structurally
    symmetric and not Hermitian.
    """
    rng = np.random.default_rng(seed)
    n = ncell * block
    onsite = rng.standard_normal((block, block)) * (rng.random((block, block)) < 0.6)
    onsite = (onsite + onsite.T) / 2
    hop = 0.4 * rng.standard_normal((block, block)) * (rng.random((block, block)) < 0.5)
    h = np.zeros((n, n), dtype=complex)
    for c in range(ncell):
        s = slice(c * block, (c + 1) * block)
        h[s, s] = onsite + np.diag(rng.random(block))
        nxt = (c + 1) % ncell
        if nxt == c:
            continue
        t = slice(nxt * block, (nxt + 1) * block)
        phase = np.exp(2j * np.pi * kpt) if nxt == 0 else 1.0
        h[s, t] += hop * phase
        h[t, s] += (hop * phase).conj().T
    z = -(np.abs(h).sum(axis=1).max() + 0.5) + 1j * eta
    a = h - z * np.eye(n)
    return CscMatrix.from_dense(a)


def ten_supernode_blocks() -> tuple[list[int], dict[int, list[int]]]:
    """Supernode sizes and 1-based block structure for the ten-supernode example."""
    sizes = [2, 2, 4, 2, 6, 2, 2, 3, 2, 4]
    lower = {1: [3], 2: [5, 9], 3: [4, 10], 4: [7], 5: [9], 6: [8, 10], 7: [8], 8: [9],
             9: [10], 10: []}
    return sizes, lower


def ten_supernode_matrix(seed: int = 6) -> tuple[CscMatrix, SupernodePartition]:
    """Matrix with dense blocks on the ten-supernode pattern plus its partition."""
    sizes, lower = ten_supernode_blocks()
    part = SupernodePartition.from_sizes(sizes)
    rng = np.random.default_rng(seed)
    n = part.n
    d = np.zeros((n, n))
    for k, below in lower.items():
        ck = part.cols(k - 1)
        d[ck.start:ck.stop, ck.start:ck.stop] = rng.standard_normal((len(ck), len(ck)))
        for i in below:
            ci = part.cols(i - 1)
            d[ci.start:ci.stop, ck.start:ck.stop] = rng.standard_normal((len(ci), len(ck)))
            d[ck.start:ck.stop, ci.start:ci.stop] = rng.standard_normal((len(ck), len(ci)))
    np.fill_diagonal(d, 0)
    np.fill_diagonal(d, np.abs(d).sum(axis=1) + 1.0)
    return CscMatrix.from_dense(d), part


def corpus() -> list[CorpusMatrix]:
    """The fixed 31-member acceptance corpus (n from 2 to 200)."""
    out: list[CorpusMatrix] = []
    specs = [(2, 0.10), (5, 0.10), (10, 0.10), (20, 0.08), (40, 0.06), (60, 0.05),
             (80, 0.04), (100, 0.03), (150, 0.025), (200, 0.02)]
    for t, (n, dens) in enumerate(specs):
        out.append(CorpusMatrix(f"rand{n}", "random", random_sparse(n, dens, 100 + t)))
    for side in (2, 4, 6, 8, 10, 12, 14):
        out.append(CorpusMatrix(f"grid{side}", "grid", grid5(side, 0.3)))
    for t, (n, dens, lower) in enumerate([(3, 0.5, True), (10, 0.2, False), (30, 0.1, True),
                                          (60, 0.05, False), (120, 0.03, True),
                                          (200, 0.02, False)]):
        kind = "lower" if lower else "upper"
        out.append(CorpusMatrix(f"tri{kind}{n}", "triangular",
                                triangular(n, dens, 200 + t, lower)))
    for t, (ncell, blk, kpt) in enumerate([(2, 2, 0.0), (4, 3, 0.25), (5, 5, 0.1),
                                           (10, 5, 0.3), (12, 8, 0.5), (20, 6, 0.125),
                                           (25, 8, 0.4), (8, 2, 0.0)]):
        out.append(CorpusMatrix(f"kpt{ncell}x{blk}", "kpoint",
                                kpoint(ncell, blk, kpt, 300 + t)))
    return out
