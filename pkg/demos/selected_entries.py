"""Selected entries of the inverse of a sparse nonsymmetric matrix.

Builds a convection-diffusion operator, computes the entries of inv(A) at
the transposed pattern of A, and checks them against a dense inverse.
"""

import numpy as np

from selinv import compare_selected, dense_invert, run_selinv, trace_identity_check
from selinv.corpus import grid5

a = grid5(12, convection=0.3)
res = run_selinv(a)
sel = res.selected

print(f"n = {a.n_rows}, |A| = {res.nnz_a}, |L+U| = {res.nnz_lu}")
print(f"supernodes: {res.analysis.partition.count}")
print(f"factor flops {res.factor_flops:,}, selected-inversion flops {res.selinv_flops:,} "
      f"(ratio {res.selinv_flops / res.factor_flops:.2f})")

diag = sel.diagonal()
print("first diagonal entries:", np.round([diag[i] for i in range(4)], 6))

rep = compare_selected(sel, dense_invert(a))
print(f"{rep.count} selected entries, max deviation from the dense inverse "
      f"{rep.max_dev:.2e} (relative to max|inv(A)|)")
print(f"|Tr[A inv(A)] - N| / N = {trace_identity_check(a, sel):.2e}")
