import copy

import numpy as np
import pytest

from conftest import dd_random
from selinv.corpus import triangular
from selinv.inverse import (EntryNotComputedError, PatternError, diag_step_crosscheck,
                            extract_selected, selected_inversion, trace_product)
from selinv.numeric import StateError, normalize
from selinv.pipeline import factor, run_selinv
from selinv.sparse import CscMatrix
from selinv.symbolic import RelaxParams

A2 = CscMatrix.from_dense(np.array([[4.0, 1.0], [2.0, 3.0]]))


def stored_positions(fac):
    part, f = fac.partition, fac.fill
    for k in range(part.count):
        c = np.arange(part.first(k), part.last(k) + 1)
        yield fac.diag[k], c, c
        yield fac.lpanel[k], f.rows[k], c
        yield fac.upanel[k], c, f.rows[k]


def test_scalar():
    res = run_selinv(CscMatrix.from_dense(np.array([[4.0]])))
    assert res.selected.as_dict() == {(0, 0): 0.25}


def test_two_by_two_closed_form():
    res = run_selinv(A2)
    np.testing.assert_allclose(res.selected.to_csc().to_dense(), [[0.3, -0.1], [-0.2, 0.4]],
                               rtol=1e-15)


def test_identity_entries():
    res = run_selinv(CscMatrix.identity(5))
    assert res.selected.as_dict() == {(i, i): 1.0 for i in range(5)}


@pytest.mark.parametrize("lower", [True, False])
def test_triangular_diagonal_is_reciprocal(lower):
    a = triangular(30, 0.1, seed=5, lower=lower)
    res = run_selinv(a)
    d = a.to_dense()
    for i, v in res.selected.diagonal().items():
        assert v == pytest.approx(1 / d[i, i], rel=1e-14)


def test_lower_triangular_off_diagonal_entry():
    d = np.array([[2.0, 0, 0], [0, 3, 0], [1, 0, 5]])
    res = run_selinv(CscMatrix.from_dense(d), ordering="natural")
    # pattern (2, 0) selects Ainv[0, 2], which is zero for a lower triangle
    assert res.selected.as_dict()[(0, 2)] == 0
    np.testing.assert_allclose(np.diag(res.selected.to_csc().to_dense()), [0.5, 1 / 3, 0.2])


@pytest.mark.parametrize("formula", ["row", "column"])
@pytest.mark.parametrize("complex_", [False, True])
def test_every_stored_block_matches_dense(formula, complex_):
    a = dd_random(30, 0.1, seed=17, complex_=complex_)
    an, fac = factor(a)
    normalize(fac)
    selected_inversion(fac, diag_formula=formula)
    xt = np.linalg.inv(an.a_perm.to_dense()).T
    scale = np.abs(xt).max()
    for blk, r, c in stored_positions(fac):
        if blk.size:
            assert np.abs(blk - xt[np.ix_(r, c)]).max() <= 1e-10 * scale


@pytest.mark.parametrize("a", [CscMatrix.identity(6),
                               CscMatrix.from_dense(np.diag([1.0, 2, 3, 4])),
                               dd_random(20, 0.15, seed=2)])
def test_diag_formula_crosscheck(a):
    an, fac = factor(a)
    normalize(fac)
    selected_inversion(fac, debug=True)
    scale = np.abs(np.linalg.inv(a.to_dense())).max()
    gaps = [diag_step_crosscheck(fac, k) for k in range(an.partition.count)]
    if a.nnz == a.n_rows:
        assert max(gaps) == 0
    assert max(gaps) <= 1e-11 * scale


def test_crosscheck_needs_debug():
    _, fac = factor(A2)
    normalize(fac)
    selected_inversion(fac)
    with pytest.raises(StateError):
        diag_step_crosscheck(fac, 0)


def test_bad_formula():
    _, fac = factor(A2)
    normalize(fac)
    with pytest.raises(ValueError):
        selected_inversion(fac, diag_formula="both")


def test_entry_not_computed():
    res = run_selinv(CscMatrix.identity(4), relax=RelaxParams(1, 0))
    with pytest.raises(EntryNotComputedError) as exc:
        extract_selected(res.factors, CscMatrix.from_coo(4, 4, [0, 2], [3, 1], [1.0, 1.0]))
    assert sorted(exc.value.missing) == [(1, 2), (3, 0)]


def test_trace_product_examples():
    eye = CscMatrix.identity(5)
    assert trace_product(eye, run_selinv(eye).selected) == 5
    a = dd_random(40, 0.08, seed=9)
    sel = run_selinv(a).selected
    assert abs(trace_product(a, sel) - 40) <= 1e-9 * 40
    e11 = CscMatrix.from_coo(40, 40, [0], [0], [1.0])
    assert trace_product(e11, sel) == pytest.approx(np.linalg.inv(a.to_dense())[0, 0],
                                                    rel=1e-12)


def test_trace_product_pattern_error():
    sel = run_selinv(CscMatrix.identity(3)).selected
    with pytest.raises(PatternError):
        trace_product(CscMatrix.from_dense(np.ones((3, 3))), sel)


def test_custom_pattern_and_idempotent_copy():
    a = dd_random(25, 0.1, seed=4)
    res = run_selinv(a)
    again = extract_selected(copy.deepcopy(res.factors), a)
    np.testing.assert_array_equal(res.selected.values, again.values)
