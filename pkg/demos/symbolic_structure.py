"""Ordering, supernodes, fill and the elimination tree of a grid operator.

``stored`` counts every position kept in dense supernode blocks, including
the explicit zeros that relaxed merging pads in.
"""

import numpy as np

from selinv.corpus import grid5
from selinv.pipeline import analyze
from selinv.symbolic import RelaxParams

a = grid5(10)
for ordering in ("natural", "mindeg"):
    an = analyze(a, ordering=ordering)
    print(f"{ordering:8s} |L+U| = {an.nnz_lu:5d}  stored = {an.nnz_lu_stored:5d}  "
          f"supernodes = {an.partition.count:3d}  etree depth = {an.etree.depth.max() + 1}")

an = analyze(a, relax=RelaxParams(max_snode_size=16, max_extra_zeros_per_col=0))
sizes, counts = np.unique(an.partition.sizes(), return_counts=True)
print("fundamental supernodes, size: count ->", dict(zip(sizes.tolist(), counts.tolist())))
top = an.etree.roots()[0]
print(f"root supernode {top}: columns {an.partition.cols(top)}")
k = int(np.argmax([len(r) for r in an.fill.rows]))
print(f"widest structure: supernode {k}, blocks {an.fill.block_ids[k].tolist()}")
