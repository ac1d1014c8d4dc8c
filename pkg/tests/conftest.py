import copy
import functools

import numpy as np
import pytest

from selinv.corpus import corpus
from selinv.inverse import selected_inversion
from selinv.numeric import normalize
from selinv.pipeline import factor
from selinv.sparse import CscMatrix


@functools.lru_cache(maxsize=None)
def _corpus():
    return tuple(corpus())


@pytest.fixture(scope="session")
def corpus_matrices():
    return _corpus()


def dd_random(n, density=0.1, seed=0, complex_=False):
    """Small diagonally dominant random matrix as a CscMatrix."""
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < density
    d = np.where(mask, rng.standard_normal((n, n)), 0.0)
    if complex_:
        d = d + 1j * np.where(mask, rng.standard_normal((n, n)), 0.0)
    np.fill_diagonal(d, 0)
    np.fill_diagonal(d, np.abs(d).sum(axis=1) + 1.0)
    return CscMatrix.from_dense(d)


@functools.lru_cache(maxsize=None)
def _prepared(name):
    cm = next(c for c in _corpus() if c.name == name)
    an, fac = factor(cm.matrix)
    normalize(fac)
    seq = copy.deepcopy(fac)
    selected_inversion(seq, diag_formula="column")
    return cm, an, fac, seq


def prepared(name):
    """(corpus entry, analysis, normalized factors, sequential inverse), cached."""
    return _prepared(name)


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
