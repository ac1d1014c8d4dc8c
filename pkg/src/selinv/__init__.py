"""Selected elements of the inverse of a sparse nonsymmetric matrix.

Pipeline: order and analyze (:func:`analyze`), factor without pivoting
(:func:`factorize`), normalize the panels (:func:`normalize`), run the
selected inversion (:func:`selected_inversion`) and read back entries in the
original indexing (:func:`extract_selected`).  :func:`run_selinv` does all of
it.  The :mod:`selinv.dist` subpackage simulates the distributed algorithm.
"""

from .inverse import (EntryNotComputedError, PatternError, SelectedEntries, diag_step_crosscheck,
                      extract_selected, selected_inversion, trace_product)
from .kernels import FlopCounter, SingularBlockError, dense_gemm, dense_lu_nopivot, dense_trsm
from .numeric import (INVERTED, NORMALIZED, FACTORED, LUFactors, SingularPivotError, StateError,
                      factorize, flop_report, lu_solve, normalize)
from .pipeline import Analysis, SelInvResult, analyze, factor, read_permutation, run_selinv
from .sparse import (CscMatrix, MatrixMarketError, Permutation, identity, mm_read, mm_write,
                     permute)
from .symbolic import (EliminationTree, FillPattern, RelaxParams, SupernodePartition, SymPattern,
                       detect_supernodes, elimination_tree, fill_reducing_order, scalar_lu_nnz,
                       symbolic_factorize, symmetrize_pattern)
from .verify import (ComparisonReport, DenseInverse, SingularMatrixError, compare_selected,
                     dense_invert, trace_identity_check)

__version__ = "0.1.0"
