import copy
import logging

import numpy as np
import pytest

from conftest import dd_random
from selinv.corpus import grid5
from selinv.numeric import (FACTORED, NORMALIZED, SingularPivotError, StateError, factorize,
                            flop_report, lu_solve, normalize)
from selinv.pipeline import analyze, factor
from selinv.sparse import CscMatrix
from selinv.symbolic import RelaxParams, SupernodePartition
from selinv.verify import factor_residual, normalization_residual

A2 = CscMatrix.from_dense(np.array([[4.0, 1.0], [2.0, 3.0]]))


def one_block(a):
    return factor(a, ordering="natural", partition=SupernodePartition.from_sizes([a.n_rows]))


def test_identity_factors():
    an, fac = factor(CscMatrix.identity(7))
    lo, up = fac.dense_factors()
    np.testing.assert_array_equal(lo, np.eye(7))
    np.testing.assert_array_equal(up, np.eye(7))
    assert all(p.size == 0 for p in fac.lpanel)


def test_two_by_two_hand_elimination():
    _, fac = one_block(A2)
    lo, up = fac.dense_factors()
    np.testing.assert_allclose(lo, [[1, 0], [0.5, 1]], rtol=0, atol=1e-15)
    np.testing.assert_allclose(up, [[4, 1], [0, 2.5]], rtol=0, atol=1e-15)


def test_two_by_two_singletons_agree():
    _, fac = factor(A2, ordering="natural", partition=SupernodePartition.singletons(2))
    lo, up = fac.dense_factors()
    np.testing.assert_allclose(lo @ up, A2.to_dense(), rtol=0, atol=1e-15)


@pytest.mark.parametrize("complex_", [False, True])
def test_random_residual(complex_):
    a = dd_random(50, 0.08, seed=11, complex_=complex_)
    an, fac = factor(a)
    assert factor_residual(fac, an.a_perm) <= 1e-12


def test_grid_residual_with_relaxed_supernodes():
    an, fac = factor(grid5(12))
    assert an.partition.count < an.partition.n
    assert factor_residual(fac, an.a_perm) <= 1e-12


def test_normalize_hand_example():
    # one 2x2 supernode with a single row below it
    d = np.array([[1.0, 0, 0], [3, 1, 0], [2, 4, 1]])
    a = CscMatrix.from_dense(d @ np.triu(np.ones((3, 3))))
    _, fac = factor(a, ordering="natural", partition=SupernodePartition.from_sizes([2, 1]))
    np.testing.assert_allclose(fac.lpanel[0], [[2, 4]])
    np.testing.assert_allclose(np.tril(fac.diag[0], -1), [[0, 0], [3, 0]])
    normalize(fac)
    np.testing.assert_allclose(fac.lpanel[0], [[-10, 4]])


def test_normalize_unit_scalar_blocks_unchanged():
    _, fac = factor(dd_random(20, 0.2, seed=3), partition=SupernodePartition.singletons(20))
    before = [lp.copy() for lp in fac.lpanel]
    normalize(fac)
    for b, a in zip(before, fac.lpanel):
        np.testing.assert_array_equal(a, b)


def test_normalize_reconstruction():
    _, fac = factor(dd_random(60, 0.1, seed=8, complex_=True))
    orig = copy.deepcopy(fac)
    normalize(fac)
    assert fac.state == NORMALIZED
    assert normalization_residual(orig, fac) <= 1e-12


def test_lu_solve_examples():
    _, fac = one_block(A2)
    np.testing.assert_allclose(lu_solve(fac, [9.0, 8.0]), [1.9, 1.4], rtol=1e-15)
    _, fac = factor(CscMatrix.identity(4))
    np.testing.assert_array_equal(lu_solve(fac, np.arange(4.0)), np.arange(4.0))


def test_lu_solve_random_residual():
    a = dd_random(80, 0.05, seed=21)
    an, fac = factor(a)
    b = np.random.default_rng(0).standard_normal(80)
    x = lu_solve(fac, b)
    ad = an.a_perm.to_dense()
    assert np.linalg.norm(ad @ x - b) / np.linalg.norm(b) <= 1e-11


def test_singular_pivot_error():
    a = CscMatrix.from_dense(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SingularPivotError, match="singular pivot at index 1") as exc:
        factor(a, ordering="natural")
    assert exc.value.index == 1


def test_perturbed_pivot_is_logged(caplog):
    a = CscMatrix.from_dense(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with caplog.at_level(logging.WARNING):
        _, fac = factor(a, ordering="natural", perturb_pivots=True)
    assert len(fac.perturbations) == 1
    idx, old, new = fac.perturbations[0]
    assert idx == 1 and old == 0 and new > 0
    assert "perturbed pivot" in caplog.text


def test_state_errors():
    _, fac = factor(A2)
    with pytest.raises(StateError):
        from selinv.inverse import selected_inversion
        selected_inversion(fac)
    normalize(fac)
    with pytest.raises(StateError):
        normalize(fac)
    with pytest.raises(StateError):
        fac.dense_factors()


def test_pattern_mismatch_rejected():
    an = analyze(CscMatrix.identity(3), relax=RelaxParams(1, 0))
    with pytest.raises(ValueError, match="outside the symbolic pattern"):
        factorize(CscMatrix.from_dense(np.ones((3, 3))), an.partition, an.fill)


def test_identity_flops_linear():
    for n in (10, 100):
        _, fac = factor(CscMatrix.identity(n), relax=RelaxParams(1, 0))
        normalize(fac)
        assert fac.flops.factor_flops <= 2 * n
        assert flop_report(fac).selinv_flops <= 2 * n


def test_identity_flops_linear_with_padded_blocks():
    # merged diagonal blocks cost a constant per column set by the size cap
    per_col = []
    for n in (640, 1280):
        _, fac = factor(CscMatrix.identity(n))
        per_col.append(fac.flops.factor_flops / n)
    assert per_col[0] == per_col[1]


def test_factor_state_and_dtype():
    _, fac = factor(A2, dtype=np.complex128)
    assert fac.state == FACTORED and fac.dtype == np.complex128
