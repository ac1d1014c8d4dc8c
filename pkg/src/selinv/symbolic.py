"""Structural analysis: symmetrized pattern, ordering, supernodes and fill.

All analysis runs on the pattern of ``A + A^T``, so the stored structure of
``L`` is the transpose of the stored structure of ``U`` at every level.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .sparse import CscMatrix, Permutation


@dataclass(frozen=True)
class SymPattern:
    """Boolean CSC pattern of ``A + A^T`` with a full diagonal."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray

    def neighbors(self, j: int) -> np.ndarray:
        return self.indices[self.indptr[j]:self.indptr[j + 1]]

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n), dtype=bool)
        cols = np.repeat(np.arange(self.n), np.diff(self.indptr))
        out[self.indices, cols] = True
        return out

    def permuted(self, perm: Permutation) -> "SymPattern":
        if np.array_equal(perm.perm, np.arange(self.n)):
            return self
        cols = np.repeat(np.arange(self.n), np.diff(self.indptr))
        return _pattern_from_pairs(self.n, perm.perm[self.indices], perm.perm[cols])

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])


def _pattern_from_pairs(n, rows, cols) -> SymPattern:
    diag = np.arange(n)
    all_rows = np.concatenate([rows, cols, diag])
    all_cols = np.concatenate([cols, rows, diag])
    key = np.unique(all_cols * n + all_rows)
    cols, rows = np.divmod(key, n) if n else (key, key)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, cols + 1, 1)
    return SymPattern(n, np.cumsum(indptr), rows.astype(np.int64))


def symmetrize_pattern(a: CscMatrix) -> SymPattern:
    """Pattern of ``A + A^T`` plus the diagonal (structural, values ignored)."""
    if a.n_rows != a.n_cols:
        raise ValueError(f"matrix must be square, got {a.shape}")
    r, c, _ = a.triplets()
    return _pattern_from_pairs(a.n_rows, r, c)


# --------------------------------------------------------------------------
# ordering

def fill_reducing_order(s: SymPattern, method: str = "mindeg") -> Permutation:
    """Fill-reducing symmetric permutation (``perm[old] = new``).

    ``method`` is ``"natural"`` or ``"mindeg"``: exact minimum degree on the
    elimination graph.  Ties go to the smaller degree in the original
    graph, then to the lowest original index.
    """
    if method == "natural":
        return Permutation.identity(s.n)
    if method != "mindeg":
        raise ValueError(f"unknown ordering {method!r}")
    adj = [set(s.neighbors(j).tolist()) - {j} for j in range(s.n)]
    deg0 = [len(a) for a in adj]
    heap = [(deg0[j], deg0[j], j) for j in range(s.n)]
    heapq.heapify(heap)
    eliminated = np.zeros(s.n, dtype=bool)
    order = []
    while heap:
        deg, _, v = heapq.heappop(heap)
        if eliminated[v] or deg != len(adj[v]):
            continue
        eliminated[v] = True
        order.append(v)
        nbrs = adj[v]
        for u in nbrs:
            adj[u].discard(v)
            adj[u] |= nbrs - {u}
            heapq.heappush(heap, (len(adj[u]), deg0[u], u))
        adj[v] = set()
    return Permutation.from_order(order)


# --------------------------------------------------------------------------
# supernodes

@dataclass(frozen=True)
class RelaxParams:
    max_snode_size: int = 64
    max_extra_zeros_per_col: int = 8

    def __post_init__(self):
        if self.max_snode_size < 1 or self.max_extra_zeros_per_col < 0:
            raise ValueError("need max_snode_size >= 1 and max_extra_zeros_per_col >= 0")


@dataclass(frozen=True)
class SupernodePartition:
    """Contiguous column groups; supernode ``K`` spans ``first_col[K]:first_col[K+1]``.

    ``first_col`` carries a trailing sentinel equal to ``n``.
    """

    first_col: np.ndarray
    col_to_snode: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        fc = np.asarray(self.first_col, dtype=np.int64)
        if len(fc) < 1 or fc[0] != 0 or np.any(np.diff(fc) <= 0):
            raise ValueError("first_col must start at 0 and be strictly increasing")
        object.__setattr__(self, "first_col", fc)
        object.__setattr__(self, "col_to_snode",
                           np.repeat(np.arange(len(fc) - 1), np.diff(fc)))

    @classmethod
    def from_sizes(cls, sizes) -> "SupernodePartition":
        return cls(np.concatenate([[0], np.cumsum(sizes)]))

    @classmethod
    def singletons(cls, n: int) -> "SupernodePartition":
        return cls(np.arange(n + 1))

    @property
    def n(self) -> int:
        return int(self.first_col[-1])

    @property
    def count(self) -> int:
        return len(self.first_col) - 1

    def __len__(self):
        return self.count

    def size(self, k: int) -> int:
        return int(self.first_col[k + 1] - self.first_col[k])

    def cols(self, k: int) -> range:
        return range(int(self.first_col[k]), int(self.first_col[k + 1]))

    def first(self, k: int) -> int:
        return int(self.first_col[k])

    def last(self, k: int) -> int:
        return int(self.first_col[k + 1]) - 1

    def sizes(self) -> np.ndarray:
        return np.diff(self.first_col)


def column_structures(s: SymPattern) -> list[np.ndarray]:
    """Row structure strictly below the diagonal of every column of ``L``.

    Scalar symbolic factorization on an already-ordered symmetric pattern.
    """
    n = s.n
    children: list[list[int]] = [[] for _ in range(n)]
    structs: list[np.ndarray] = []
    for j in range(n):
        nb = s.neighbors(j)
        parts = [nb[nb > j]]
        for c in children[j]:
            sc = structs[c]
            parts.append(sc[sc > j])
        st = np.unique(np.concatenate(parts)) if len(parts) > 1 else parts[0]
        structs.append(st)
        if len(st):
            children[int(st[0])].append(j)
    return structs


def scalar_lu_nnz(s: SymPattern) -> int:
    """Structural nonzeros of ``L + U`` without supernode padding."""
    return s.n + 2 * sum(len(st) for st in column_structures(s))


def detect_supernodes(s: SymPattern, perm: Permutation | None = None,
                      relax: RelaxParams = RelaxParams()) -> SupernodePartition:
    """Greedy left-to-right grouping of columns into relaxed supernodes.

    A column joins the current group when the group stays within
    ``max_snode_size`` and, for every column of the enlarged group, the
    stored rows below the group exceed that column's own rows by at most
    ``max_extra_zeros_per_col``.  With a zero budget only columns with
    identical structure below the group are merged.
    """
    if perm is not None:
        s = s.permuted(perm)
    structs = column_structures(s)
    n = s.n
    if n == 0:
        return SupernodePartition(np.array([0]))
    firsts = [0]
    members = [0]
    for j in range(1, n):
        if len(members) < relax.max_snode_size:
            below = [st[st > j] for st in (structs[c] for c in members + [j])]
            union = np.unique(np.concatenate(below))
            extra = max(len(union) - len(b) for b in below)
            if extra <= relax.max_extra_zeros_per_col:
                members.append(j)
                continue
        firsts.append(j)
        members = [j]
    return SupernodePartition(np.array(firsts + [n]))


# --------------------------------------------------------------------------
# supernodal fill

@dataclass
class FillPattern:
    """Supernodal nonzero structure of ``L`` (and, transposed, of ``U``).

    ``rows[K]`` lists, ascending, the global row indices below supernode
    ``K`` that are stored in its column panel of ``L``; the same indices are
    the stored column indices of its row panel of ``U``.  ``block_ids[K]``
    names the supernode of each run of rows and ``block_ptr[K]`` delimits the
    runs inside ``rows[K]``.
    """

    partition: SupernodePartition
    rows: list[np.ndarray]
    block_ids: list[np.ndarray]
    block_ptr: list[np.ndarray]

    def c_l(self, k: int) -> list[int]:
        return self.block_ids[k].tolist()

    c_u = c_l

    def block_rows(self, k: int, pos: int) -> np.ndarray:
        return self.rows[k][self.block_ptr[k][pos]:self.block_ptr[k][pos + 1]]

    def lu_nnz(self) -> int:
        """Stored entries of ``L + U`` (dense diagonal blocks, padded panels)."""
        sizes = self.partition.sizes()
        return int(sum(int(s) * int(s) + 2 * int(s) * len(r) for s, r in zip(sizes, self.rows)))

    def stored_mask(self) -> np.ndarray:
        """Dense boolean map of stored positions; for tests and small inputs."""
        part = self.partition
        out = np.zeros((part.n, part.n), dtype=bool)
        for k in range(part.count):
            cols = np.arange(part.first(k), part.last(k) + 1)
            out[np.ix_(cols, cols)] = True
            out[np.ix_(self.rows[k], cols)] = True
            out[np.ix_(cols, self.rows[k])] = True
        return out


def _split_blocks(rows: np.ndarray, part: SupernodePartition):
    snodes = part.col_to_snode[rows]
    if len(rows) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(1, dtype=np.int64)
    change = np.flatnonzero(np.diff(snodes)) + 1
    starts = np.concatenate([[0], change])
    return snodes[starts], np.concatenate([starts, [len(rows)]]).astype(np.int64)


def symbolic_factorize(s: SymPattern, perm: Permutation | None,
                       part: SupernodePartition) -> FillPattern:
    """Supernodal symbolic factorization on the (permuted) symmetric pattern.

    The structure of supernode ``K`` is the union of its columns' own rows
    below the supernode and of its children's structures.  The result is
    closed under the updates of block elimination for any contiguous
    partition.
    """
    if perm is not None:
        s = s.permuted(perm)
    if part.n != s.n:
        raise ValueError("partition does not cover the matrix")
    nsn = part.count
    children: list[list[int]] = [[] for _ in range(nsn)]
    rows, block_ids, block_ptr = [], [], []
    for k in range(nsn):
        last = part.last(k)
        parts = []
        for j in part.cols(k):
            nb = s.neighbors(j)
            parts.append(nb[nb > last])
        for c in children[k]:
            rc = rows[c]
            parts.append(rc[rc > last])
        st = np.unique(np.concatenate(parts)).astype(np.int64) if parts else np.zeros(0, np.int64)
        rows.append(st)
        ids, ptr = _split_blocks(st, part)
        block_ids.append(ids)
        block_ptr.append(ptr)
        if len(st):
            children[int(part.col_to_snode[st[0]])].append(k)
    return FillPattern(part, rows, block_ids, block_ptr)


# --------------------------------------------------------------------------
# elimination tree

@dataclass(frozen=True)
class EliminationTree:
    parent: np.ndarray  # -1 for roots
    depth: np.ndarray
    postorder: np.ndarray

    def __len__(self):
        return len(self.parent)

    def children(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(len(self.parent))]
        for k, p in enumerate(self.parent):
            if p >= 0:
                out[p].append(k)
        return out

    def roots(self) -> list[int]:
        return np.flatnonzero(self.parent < 0).tolist()

    def ancestors(self, k: int) -> list[int]:
        out = []
        p = self.parent[k]
        while p >= 0:
            out.append(int(p))
            p = self.parent[p]
        return out


def tree_from_parents(parent) -> EliminationTree:
    """Depths and a DFS postorder for a parent array with ``parent[k] > k``."""
    parent = np.asarray(parent, dtype=np.int64)
    nsn = len(parent)
    for k, p in enumerate(parent):
        if p >= 0 and p <= k:
            raise ValueError(f"parent({k}) = {p} is not greater than {k}")
    depth = np.zeros(nsn, dtype=np.int64)
    for k in range(nsn - 1, -1, -1):
        if parent[k] >= 0:
            depth[k] = depth[parent[k]] + 1
    kids: list[list[int]] = [[] for _ in range(nsn)]
    for k in range(nsn):
        if parent[k] >= 0:
            kids[parent[k]].append(k)
    post = []
    for root in np.flatnonzero(parent < 0):
        stack = [(int(root), 0)]
        while stack:
            node, i = stack.pop()
            if i < len(kids[node]):
                stack.append((node, i + 1))
                stack.append((kids[node][i], 0))
            else:
                post.append(node)
    return EliminationTree(parent, depth, np.array(post, dtype=np.int64))


def elimination_tree(fill: FillPattern, part: SupernodePartition) -> EliminationTree:
    """Parent of ``K`` is the smallest block index in ``C_L(K) ∪ C_U(K)``."""
    if fill.partition.count != part.count or fill.partition.n != part.n:
        raise ValueError("fill pattern and partition disagree")
    parent = np.array([int(ids[0]) if len(ids) else -1 for ids in fill.block_ids],
                      dtype=np.int64)
    return tree_from_parents(parent)
