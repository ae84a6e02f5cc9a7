"""The compiled and pure-Python kernels must agree bit for bit."""

import importlib
import random

import pytest

import _oracles as oracle
from atomkg._core import _pykernels as py
from atomkg.logic import WorldSpace, _compile

try:
    cy = importlib.import_module("atomkg._core._ckernels")
except ImportError:  # extension not built
    cy = None

needs_ext = pytest.mark.skipif(cy is None, reason="compiled extension not built")


def _program(phi, names):
    ops, args = [], []
    _compile(phi, {n: i for i, n in enumerate(names)}, ops, args)
    return ops, args


def test_selected_backend_is_reported():
    from atomkg import _core

    assert _core.BACKEND in ("cython", "python")


def test_pure_python_switch(monkeypatch):
    import atomkg._core as core

    monkeypatch.setenv("ATOMKG_PURE_PYTHON", "1")
    try:
        reloaded = importlib.reload(core)
        assert reloaded.BACKEND == "python"
    finally:
        monkeypatch.delenv("ATOMKG_PURE_PYTHON")
        importlib.reload(core)


def test_python_truth_table_matches_recursion():
    rng = random.Random(3)
    names = ("A", "B", "C", "D")
    space = WorldSpace(names)
    for _ in range(300):
        phi = oracle.random_formula(rng, 4, names)
        ops, args = _program(phi, names)
        table = py.truth_table(ops, args, len(names))
        expected = sum(1 << w for w in range(space.size) if oracle.holds(phi, space.assignment(w)))
        assert table == expected


@needs_ext
@pytest.mark.parametrize("nvars", [1, 3, 6, 7, 10, 16])
def test_truth_table_parity(nvars):
    rng = random.Random(nvars)
    names = tuple(f"x{i}" for i in range(nvars))
    for _ in range(60):
        phi = oracle.random_formula(rng, 5, names)
        ops, args = _program(phi, names)
        assert cy.truth_table(ops, args, nvars) == py.truth_table(ops, args, nvars)


@needs_ext
@pytest.mark.parametrize("nvars", [1, 2, 3, 4])
def test_find_clause_parity_exhaustive(nvars):
    for table in range(1 << (1 << nvars)):
        assert cy.find_clause(table, nvars) == py.find_clause(table, nvars)


@needs_ext
def test_find_clause_parity_wide():
    rng = random.Random(11)
    for nvars in range(5, 11):
        for _ in range(20):
            table = rng.getrandbits(1 << nvars)
            assert cy.find_clause(table, nvars) == py.find_clause(table, nvars)
        # a genuine clause must be found by both
        full = (1 << (1 << nvars)) - 1
        table = full ^ sum(1 << w for w in range(1 << nvars) if w & 0b101 == 0b001)
        assert cy.find_clause(table, nvars) == py.find_clause(table, nvars) is not None


@needs_ext
def test_closure_parity():
    rng = random.Random(5)
    for _ in range(200):
        n = rng.randint(0, 20)
        edges = [(rng.randrange(n), rng.randrange(n)) for _ in range(rng.randint(0, 3 * n))] if n else []
        assert list(cy.closure(n, edges)) == py.closure(n, edges)


@needs_ext
@pytest.mark.parametrize("seed", [0, 7, 2**40 + 3])
def test_bootstrap_parity(seed):
    rng = random.Random(seed)
    diffs = [rng.randint(-3, 3) for _ in range(rng.randint(1, 50))]
    assert cy.bootstrap_count(diffs, 5000, seed) == py.bootstrap_count(diffs, 5000, seed)


def test_bootstrap_counts_are_chunk_independent():
    diffs = [1, -1, 0, 2, -2, 1]
    whole = py.bootstrap_count(diffs, 3000, 9)
    assert 0 <= whole <= 3000
    # all-positive differences never produce a resample with sum <= 0
    assert py.bootstrap_count([1, 2, 3], 2000, 1) == 0
    assert py.bootstrap_count([0, 0], 2000, 1) == 2000


@needs_ext
def test_truth_table_parity_deep_stack():
    # right-nested chain: every atom is pushed before the first operator
    n = 600
    ops = [0] * n + [3, 2] * ((n - 1) // 2) + [3] * ((n - 1) % 2)
    args = [i % 5 for i in range(n)] + [0] * (n - 1)
    assert cy.truth_table(ops, args, 5) == py.truth_table(ops, args, 5)


@needs_ext
@pytest.mark.parametrize("ops, args", [([2], [0]), ([0, 0], [0, 1]), ([], []), ([0, 9], [0, 0]), ([0], [7])])
def test_malformed_programs_rejected_by_both(ops, args):
    for kernel in (py, cy):
        with pytest.raises(ValueError):
            kernel.truth_table(ops, args, 2)
