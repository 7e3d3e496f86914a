"""Puzzle models: clausal CSP encodings with constraint-group metadata.

Both puzzle kinds are encoded over Boolean variables.  Constraints are grouped
into named, categorised groups (Sudoku: row/col/block units; logic-grid:
bijectivity/transitivity/clue) which are the selectable building blocks of
explanations.  Base clauses (Sudoku per-cell exactly-one) are always active
and never selectable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import satkernel

SUDOKU_CATEGORIES = ("block", "row", "col")
LOGIC_GRID_CATEGORIES = ("bijectivity", "transitivity", "clue")


class PuzzleParseError(ValueError):
    """Malformed puzzle input."""


class PuzzleModelError(ValueError):
    """Well-formed input that violates a model invariant (unsat, non-unique)."""


@dataclass(frozen=True, order=True)
class Fact:
    """One variable-value assignment.

    ``var`` is the decision-variable key: a (row, col) pair for Sudoku, the
    Boolean variable id for logic-grid associations.  ``lit`` is the signed
    1-based literal asserting the fact.
    """

    var: tuple
    value: int | bool
    lit: int

    def sort_key(self):
        return (self.var, int(self.value))


@dataclass(frozen=True)
class ConstraintGroup:
    gid: int
    category: str
    clauses: tuple[tuple[int, ...], ...]
    decision_vars: frozenset

    @property
    def scope(self) -> frozenset[int]:
        return frozenset(abs(l) for c in self.clauses for l in c)


@dataclass
class ClausalCSP:
    kind: str  # "sudoku" | "logicgrid"
    nvars: int
    base_clauses: list[tuple[int, ...]]
    groups: list[ConstraintGroup]
    categories: tuple[str, ...]
    var_meta: dict[int, tuple]  # 1-based boolean var id -> puzzle coordinates
    n: int = 0  # Sudoku side length
    name: str = ""
    solution: frozenset[Fact] | None = field(default=None, repr=False)
    # given set under which the solution was proven unique at load time
    unique_given: frozenset[Fact] = frozenset()

    def all_clauses(self) -> list[tuple[int, ...]]:
        out = list(self.base_clauses)
        for g in self.groups:
            out.extend(g.clauses)
        return out


@dataclass(frozen=True)
class Instance:
    csp: ClausalCSP
    given: frozenset[Fact]
    targets: frozenset[Fact]


def _at_most_one(lits: Sequence[int]) -> list[tuple[int, ...]]:
    return [(-a, -b) for a, b in itertools.combinations(lits, 2)]


def _sudoku_var(n: int, r: int, c: int, v: int) -> int:
    # 1-based literal for "cell (r, c) holds value v", all coordinates 1..n
    return ((r - 1) * n + (c - 1)) * n + v


def sudoku_fact(n: int, r: int, c: int, v: int) -> Fact:
    return Fact(var=(r, c), value=v, lit=_sudoku_var(n, r, c, v))


def encode_sudoku(n: int) -> ClausalCSP:
    """Build the clausal Sudoku skeleton for side length ``n`` (4 or 9).

    Base clauses enforce exactly-one value per cell.  Selectable groups are
    the n row, n column and n block alldifferent units, each encoded as
    at-least-one plus at-most-one clauses per value.
    """
    if n not in (4, 9):
        raise PuzzleParseError(f"unsupported Sudoku size {n}")
    b = round(n ** 0.5)
    nvars = n * n * n
    var_meta = {}
    base: list[tuple[int, ...]] = []
    for r in range(1, n + 1):
        for c in range(1, n + 1):
            cell_lits = [_sudoku_var(n, r, c, v) for v in range(1, n + 1)]
            for v, lit in enumerate(cell_lits, start=1):
                var_meta[lit] = (r, c, v)
            base.append(tuple(cell_lits))
            base.extend(_at_most_one(cell_lits))

    def unit_group(gid: int, category: str, cells: list[tuple[int, int]]) -> ConstraintGroup:
        clauses: list[tuple[int, ...]] = []
        for v in range(1, n + 1):
            lits = [_sudoku_var(n, r, c, v) for r, c in cells]
            clauses.append(tuple(lits))
            clauses.extend(_at_most_one(lits))
        return ConstraintGroup(gid, category, tuple(clauses), frozenset(cells))

    groups = []
    for r in range(1, n + 1):
        groups.append(unit_group(len(groups), "row", [(r, c) for c in range(1, n + 1)]))
    for c in range(1, n + 1):
        groups.append(unit_group(len(groups), "col", [(r, c) for r in range(1, n + 1)]))
    for br in range(b):
        for bc in range(b):
            cells = [(br * b + i + 1, bc * b + j + 1) for i in range(b) for j in range(b)]
            groups.append(unit_group(len(groups), "block", cells))

    return ClausalCSP(
        kind="sudoku",
        nvars=nvars,
        base_clauses=base,
        groups=groups,
        categories=SUDOKU_CATEGORIES,
        var_meta=var_meta,
        n=n,
    )


def load_sudoku(text: str, name: str = "") -> Instance:
    """Parse an n^2-character grid string ('.' = blank) into a CSP instance.

    The puzzle must have exactly one solution; the targets are all remaining
    cell assignments of that solution.
    """
    grid = "".join(ch for ch in text if not ch.isspace() and ch != "|")
    if len(grid) == 16:
        n = 4
    elif len(grid) == 81:
        n = 9
    else:
        raise PuzzleParseError(f"grid must have 16 or 81 cells, got {len(grid)}")
    csp = encode_sudoku(n)
    csp.name = name
    given = set()
    for idx, ch in enumerate(grid):
        if ch == ".":
            continue
        if not ch.isdigit() or not 1 <= int(ch) <= n:
            raise PuzzleParseError(f"invalid character {ch!r} at cell {idx}")
        r, c = idx // n + 1, idx % n + 1
        given.add(sudoku_fact(n, r, c, int(ch)))

    solution = _unique_solution(csp, given)
    csp.solution = solution
    csp.unique_given = frozenset(given)
    targets = frozenset(f for f in solution if f not in given)
    return Instance(csp=csp, given=frozenset(given), targets=targets)


def _decision_facts_from_model(csp: ClausalCSP, model: satkernel.SatResult) -> frozenset[Fact]:
    facts = set()
    if csp.kind == "sudoku":
        for lit, (r, c, v) in csp.var_meta.items():
            if model.value(lit):
                facts.add(Fact(var=(r, c), value=v, lit=lit))
    else:
        for lit in csp.var_meta:
            if model.value(lit):
                facts.add(Fact(var=(lit,), value=True, lit=lit))
            else:
                facts.add(Fact(var=(lit,), value=False, lit=-lit))
    return frozenset(facts)


def _unique_solution(csp: ClausalCSP, given: Iterable[Fact]) -> frozenset[Fact]:
    clauses = csp.all_clauses()
    assumptions = [f.lit for f in given]
    res = satkernel.solve(clauses, csp.nvars, assumptions)
    if not res.sat:
        raise PuzzleModelError("puzzle is unsatisfiable")
    solution = _decision_facts_from_model(csp, res)
    blocking = tuple(-f.lit for f in solution)
    res2 = satkernel.solve(clauses + [blocking], csp.nvars, assumptions)
    if res2.sat:
        raise PuzzleModelError("puzzle has multiple solutions; targets undefined")
    return solution


def explainable_facts(csp: ClausalCSP, given: Iterable[Fact]) -> frozenset[Fact]:
    """All facts x=v not in ``given`` implied by the givens plus every group.

    A fact is implied iff given + all groups + {x != v} is unsatisfiable.
    Implied facts must hold in any single model, so candidates are read off
    one model and verified per fact.
    """
    given = frozenset(given)
    clauses = csp.all_clauses()
    assumptions = [f.lit for f in given]
    res = satkernel.solve(clauses, csp.nvars, assumptions)
    if not res.sat:
        raise PuzzleModelError("given facts are inconsistent with the constraints")
    candidates = _decision_facts_from_model(csp, res)
    if csp.solution is not None and csp.unique_given <= given <= csp.solution:
        # The solution is unique already under a subset of these givens, so
        # every remaining solution fact is implied.
        return frozenset(f for f in csp.solution if f not in given)
    out = set()
    for fact in candidates:
        if fact in given:
            continue
        refute = satkernel.solve(clauses, csp.nvars, assumptions + [-fact.lit])
        if not refute.sat:
            out.add(fact)
    return frozenset(out)


def render_grid(csp: ClausalCSP, facts: Iterable[Fact]) -> str:
    """ASCII rendering of a Sudoku partial assignment, for CLI output."""
    assert csp.kind == "sudoku"
    n = csp.n
    cells = {f.var: f.value for f in facts}
    lines = []
    for r in range(1, n + 1):
        lines.append(" ".join(str(cells.get((r, c), ".")) for c in range(1, n + 1)))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Logic-grid puzzles
#
# Line-oriented declarative format:
#
#   types: house month ghost
#   entities: house = markmanor barnhill hughenden
#   entities: month = april may june
#   entities: ghost = brunhilde victor abigail
#   given: assoc(markmanor,april)            # optional starting facts
#   group b0 bijectivity:
#   assoc(markmanor,april) assoc(markmanor,may) assoc(markmanor,june)
#   -assoc(markmanor,april) -assoc(markmanor,may)
#   group c1 clue:
#   -assoc(markmanor,april) assoc(wolfenden,brunhilde)
#
# Each clause line is a disjunction of signed association variables.  One
# Boolean variable exists per cross-type entity pair; positive facts assert an
# association holds, negative facts that it does not.
# ---------------------------------------------------------------------------


def load_logic_grid(text: str, name: str = "") -> Instance:
    types: list[str] = []
    entities: dict[str, list[str]] = {}
    entity_type: dict[str, str] = {}
    group_specs: list[tuple[str, str, list[tuple[int, ...]]]] = []
    given_tokens: list[str] = []
    var_ids: dict[tuple[str, str], int] = {}
    var_meta: dict[int, tuple] = {}
    current_clauses: list[tuple[int, ...]] | None = None

    def declare_vars():
        for t1, t2 in itertools.combinations(types, 2):
            for e1 in entities[t1]:
                for e2 in entities[t2]:
                    vid = len(var_ids) + 1
                    var_ids[(e1, e2)] = vid
                    var_meta[vid] = (e1, e2)

    def parse_lit(token: str) -> int:
        neg = token.startswith("-")
        body = token[1:] if neg else token
        if not (body.startswith("assoc(") and body.endswith(")")):
            raise PuzzleParseError(f"bad literal {token!r}")
        a, _, b = body[6:-1].partition(",")
        a, b = a.strip(), b.strip()
        for e in (a, b):
            if e not in entity_type:
                raise PuzzleParseError(f"undeclared entity {e!r} in {token!r}")
        if entity_type[a] == entity_type[b]:
            raise PuzzleParseError(f"association within one type: {token!r}")
        if types.index(entity_type[a]) > types.index(entity_type[b]):
            a, b = b, a
        vid = var_ids[(a, b)]
        return -vid if neg else vid

    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("types:"):
            types = line.split(":", 1)[1].split()
            continue
        if line.startswith("entities:"):
            body = line.split(":", 1)[1]
            tname, _, names = body.partition("=")
            tname = tname.strip()
            if tname not in types:
                raise PuzzleParseError(f"entities for undeclared type {tname!r}")
            entities[tname] = names.split()
            for e in entities[tname]:
                entity_type[e] = tname
            if len(entities) == len(types) and not var_ids:
                declare_vars()
            continue
        if line.startswith("given:"):
            given_tokens.extend(line.split(":", 1)[1].split())
            continue
        if line.startswith("group "):
            head = line[len("group "):].rstrip(":").split()
            if len(head) != 2:
                raise PuzzleParseError(f"bad group header: {line!r}")
            gname, category = head
            if category not in LOGIC_GRID_CATEGORIES:
                raise PuzzleParseError(f"unknown group category {category!r}")
            current_clauses = []
            group_specs.append((gname, category, current_clauses))
            continue
        if current_clauses is None:
            raise PuzzleParseError(f"clause outside any group: {line!r}")
        current_clauses.append(tuple(parse_lit(tok) for tok in line.split()))

    if not types or len(entities) != len(types):
        raise PuzzleParseError("file must declare types and entities for each type")

    groups = []
    for gid, (gname, category, clauses) in enumerate(group_specs):
        scope = frozenset((abs(l),) for c in clauses for l in c)
        groups.append(ConstraintGroup(gid, category, tuple(clauses), scope))

    csp = ClausalCSP(
        kind="logicgrid",
        nvars=len(var_ids),
        base_clauses=[],
        groups=groups,
        categories=LOGIC_GRID_CATEGORIES,
        var_meta=var_meta,
        name=name,
    )
    res = satkernel.solve(csp.all_clauses(), csp.nvars)
    if not res.sat:
        raise PuzzleModelError("logic-grid file is globally unsatisfiable")

    given = set()
    for tok in given_tokens:
        lit = parse_lit(tok)
        given.add(Fact(var=(abs(lit),), value=lit > 0, lit=lit))

    blocking = tuple(-l if res.value(l) else l for l in range(1, csp.nvars + 1))
    if not satkernel.solve(csp.all_clauses() + [blocking], csp.nvars).sat:
        csp.solution = _decision_facts_from_model(csp, res)

    targets = explainable_facts(csp, given)
    return Instance(csp=csp, given=frozenset(given), targets=targets)
