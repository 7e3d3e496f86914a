import itertools

import pytest

from stepelicit import model, puzzles, satkernel
from stepelicit.model import PuzzleModelError, PuzzleParseError, sudoku_fact

from oracles import all_shidoku_solutions, shidoku_solutions_matching

SOLVED_4x4 = "1234341221434321"


def test_load_sudoku_counts():
    inst = puzzles.load("mini_a")
    assert inst.csp.nvars == 64
    assert len(inst.csp.groups) == 12
    assert len(inst.given) + len(inst.targets) == 16


def test_solved_grid_has_no_targets():
    inst = model.load_sudoku(SOLVED_4x4)
    assert inst.targets == frozenset()
    assert len(inst.given) == 16


def test_bad_length_is_parse_error():
    with pytest.raises(PuzzleParseError):
        model.load_sudoku("1" * 15)


def test_bad_character_is_parse_error():
    with pytest.raises(PuzzleParseError):
        model.load_sudoku("5" + "." * 15)


def test_unsat_grid_is_model_error():
    with pytest.raises(PuzzleModelError):
        model.load_sudoku("11" + "." * 14)


def test_multiple_solutions_is_model_error():
    with pytest.raises(PuzzleModelError):
        model.load_sudoku("." * 16)


def test_loaded_solution_matches_brute_force():
    for name in ("mini_a", "mini_b", "mini_c"):
        inst = puzzles.load(name)
        givens = {f.var: f.value for f in inst.given}
        matching = shidoku_solutions_matching(givens)
        assert len(matching) == 1
        expected = {
            sudoku_fact(4, r, c, v) for (r, c), v in matching[0].items()
        }
        assert inst.csp.solution == frozenset(expected)


def test_encoding_soundness_4x4():
    # an assignment satisfies all clauses iff it is a valid 4x4 Sudoku grid
    csp = model.encode_sudoku(4)
    clauses = csp.all_clauses()
    valid = all_shidoku_solutions()
    for grid in valid[:40]:
        assume = [sudoku_fact(4, r, c, v).lit for (r, c), v in grid.items()]
        assert satkernel.solve(clauses, csp.nvars, assume).sat
    # perturbing one cell of a valid grid breaks it
    for grid in valid[:10]:
        bad = dict(grid)
        bad[(1, 1)] = bad[(1, 1)] % 4 + 1
        assume = [sudoku_fact(4, r, c, v).lit for (r, c), v in bad.items()]
        assert not satkernel.solve(clauses, csp.nvars, assume).sat


def test_group_partition():
    csp = model.encode_sudoku(4)
    seen = set()
    total = 0
    for g in csp.groups:
        for c in g.clauses:
            key = (g.gid, c)
            assert key not in seen
            seen.add(key)
        total += len(g.clauses)
        assert g.decision_vars == {meta[:2] for cl in g.clauses for l in cl for meta in [csp.var_meta[abs(l)]]}
    assert total == sum(len(g.clauses) for g in csp.groups)
    flat = [c for g in csp.groups for c in g.clauses]
    assert len(flat) == len(set((i, c) for i, c in enumerate(flat)))


def test_explainable_facts_missing_one_cell():
    grids = all_shidoku_solutions()
    grid = grids[11]
    given = {sudoku_fact(4, r, c, v) for (r, c), v in grid.items() if (r, c) != (2, 3)}
    csp = model.encode_sudoku(4)
    out = model.explainable_facts(csp, given)
    assert out == {sudoku_fact(4, 2, 3, grid[(2, 3)])}


def test_explainable_facts_empty_grid():
    csp = model.encode_sudoku(4)
    assert model.explainable_facts(csp, frozenset()) == frozenset()


def test_explainable_facts_equal_solution_intersection():
    # oracle: a fact is explainable iff every brute-force solution agrees on it
    inst = puzzles.load("mini_d")
    givens = {f.var: f.value for f in inst.given}
    partial = dict(itertools.islice(givens.items(), 2))
    matching = shidoku_solutions_matching(partial)
    assert len(matching) > 1
    expected = set()
    for (r, c) in matching[0]:
        vals = {g[(r, c)] for g in matching}
        if len(vals) == 1 and (r, c) not in partial:
            expected.add(sudoku_fact(4, r, c, vals.pop()))
    given_facts = {sudoku_fact(4, r, c, v) for (r, c), v in partial.items()}
    got = model.explainable_facts(inst.csp, given_facts)
    assert got == frozenset(expected)


def test_explainable_facts_consistency_property():
    # every explainable fact holds in every brute-force solution extending the givens
    inst = puzzles.load("mini_e")
    givens = {f.var: f.value for f in inst.given}
    given_facts = {sudoku_fact(4, r, c, v) for (r, c), v in givens.items()}
    out = model.explainable_facts(inst.csp, given_facts)
    for g in shidoku_solutions_matching(givens):
        for f in out:
            assert g[f.var] == f.value


def test_load_logic_grid_bundled():
    inst = puzzles.load("ghosts")
    assert inst.csp.kind == "logicgrid"
    assert inst.csp.nvars == 27  # 3 type-pairs x 9 entity pairs
    assert inst.csp.categories == ("bijectivity", "transitivity", "clue")
    assert inst.csp.solution is not None
    assert len(inst.targets) == 27
    cats = {g.category for g in inst.csp.groups}
    assert cats == {"bijectivity", "transitivity", "clue"}


def test_logic_grid_scope_invariant():
    inst = puzzles.load("ghosts")
    for g in inst.csp.groups:
        assert g.decision_vars == {(abs(l),) for c in g.clauses for l in c}


MINIMAL_LG = """
types: a b
entities: a = x1 x2
entities: b = y1 y2
group bij bijectivity:
assoc(x1,y1) assoc(x1,y2)
-assoc(x1,y1) -assoc(x1,y2)
assoc(x2,y1) assoc(x2,y2)
-assoc(x2,y1) -assoc(x2,y2)
-assoc(x1,y1) -assoc(x2,y1)
-assoc(x1,y2) -assoc(x2,y2)
"""


def test_logic_grid_without_clues_loads():
    inst = model.load_logic_grid(MINIMAL_LG)
    assert inst.csp.nvars == 4
    # nothing is implied without clues: both bijections remain possible
    assert inst.targets == frozenset()


def test_logic_grid_unknown_category():
    bad = MINIMAL_LG.replace("group bij bijectivity:", "group bij sideways:")
    with pytest.raises(PuzzleParseError):
        model.load_logic_grid(bad)


def test_logic_grid_undeclared_variable():
    bad = MINIMAL_LG + "group c clue:\nassoc(x99,y1)\n"
    with pytest.raises(PuzzleParseError):
        model.load_logic_grid(bad)


def test_logic_grid_unsat_file():
    bad = MINIMAL_LG + "group c clue:\nassoc(x1,y1)\n\ngroup c2 clue:\n-assoc(x1,y1)\n"
    with pytest.raises(PuzzleModelError):
        model.load_logic_grid(bad)
