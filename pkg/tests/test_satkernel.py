import random

import pytest

from stepelicit import satkernel

from oracles import truth_table_sat


def random_cnf(rng, max_vars=12, max_clauses=40):
    nvars = rng.randint(1, max_vars)
    nclauses = rng.randint(1, max_clauses)
    clauses = []
    for _ in range(nclauses):
        width = rng.randint(1, 3)
        lits = []
        for _ in range(width):
            v = rng.randint(1, nvars)
            lits.append(v if rng.random() < 0.5 else -v)
        clauses.append(tuple(lits))
    return clauses, nvars


def test_empty_theory_is_sat():
    res = satkernel.solve([], 3)
    assert res.sat
    assert len(res.model) == 3


def test_direct_contradiction():
    assert not satkernel.solve([(1,), (-1,)], 1).sat


def test_model_satisfies_clauses():
    clauses = [(1, 2), (-1, 3), (-2, -3), (2, 3)]
    res = satkernel.solve(clauses, 3)
    assert res.sat
    for c in clauses:
        assert any(res.value(l) for l in c)


def test_assumptions_restrict_models():
    clauses = [(1, 2)]
    assert satkernel.solve(clauses, 2, assumptions=[-1]).value(2)
    assert not satkernel.solve(clauses, 2, assumptions=[-1, -2]).sat


def test_random_cnfs_match_truth_table():
    rng = random.Random(12345)
    for _ in range(300):
        clauses, nvars = random_cnf(rng, max_vars=8, max_clauses=24)
        assert satkernel.solve(clauses, nvars).sat == truth_table_sat(clauses, nvars)


def test_determinism():
    rng = random.Random(7)
    clauses, nvars = random_cnf(rng, max_vars=10, max_clauses=30)
    first = satkernel.solve(clauses, nvars)
    for _ in range(3):
        again = satkernel.solve(clauses, nvars)
        assert again.sat == first.sat
        assert again.model == first.model


def test_grow_fixpoint_when_already_maximal():
    item_clauses = {0: [(1,)], 1: [(-1,)]}
    grown = satkernel.grow({0}, [0, 1], item_clauses, [], 1)
    assert grown == {0}


def test_grow_maximality_per_item():
    rng = random.Random(99)
    for _ in range(50):
        nvars = rng.randint(2, 5)
        items = {}
        for j in range(rng.randint(2, 6)):
            v = rng.randint(1, nvars)
            items[j] = [(v if rng.random() < 0.5 else -v,)]
        universe = sorted(items)
        grown = satkernel.grow(set(), universe, items, [], nvars)
        active = [c for j in grown for c in items[j]]
        assert satkernel.solve(active, nvars).sat
        for j in universe:
            if j not in grown:
                assert not satkernel.solve(active + items[j], nvars).sat


def test_grow_precondition_violation():
    items = {0: [(1,)], 1: [(-1,)]}
    with pytest.raises(ValueError):
        satkernel.grow({0, 1}, [0, 1], items, [], 1)


def test_dimacs_roundtrip():
    clauses = [(1, -2), (2, 3), (-3,)]
    text = satkernel.to_dimacs(clauses, 3)
    back, nvars = satkernel.from_dimacs(text)
    assert nvars == 3
    assert back == [tuple(c) for c in clauses]
