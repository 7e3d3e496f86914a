"""Small DPLL satisfiability kernel.

Clauses are tuples of non-zero DIMACS-style literals: literal ``v`` asserts
Boolean variable ``v`` (1-based) is true, ``-v`` that it is false.  The solver
uses two-watched-literal unit propagation with chronological backtracking and
a fixed branching order (lowest unassigned variable first, true phase first),
so results are deterministic for a fixed input.

Instances here are tiny by SAT standards (a 9x9 Sudoku encoding is ~800
variables), so no conflict learning is needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

Clause = Sequence[int]


@dataclass(frozen=True)
class SatResult:
    sat: bool
    model: tuple[bool, ...] | None = None  # model[v-1] is the value of var v

    def value(self, lit: int) -> bool:
        assert self.model is not None
        val = self.model[abs(lit) - 1]
        return val if lit > 0 else not val


def solve(clauses: Iterable[Clause], nvars: int, assumptions: Sequence[int] = ()) -> SatResult:
    """Decide satisfiability of ``clauses`` conjoined with unit ``assumptions``.

    Complete: returns SAT iff a satisfying assignment exists; when SAT the
    returned model is total over variables ``1..nvars``.
    """
    assign = [0] * (nvars + 1)  # 0 unassigned, 1 true, -1 false
    trail: list[int] = []

    def lit_value(lit: int) -> int:
        v = assign[abs(lit)]
        return v if lit > 0 else -v

    def enqueue(lit: int) -> bool:
        v = lit_value(lit)
        if v == 1:
            return True
        if v == -1:
            return False
        assign[abs(lit)] = 1 if lit > 0 else -1
        trail.append(lit)
        return True

    watched: list[list[int]] = [[] for _ in range(2 * nvars + 1)]

    def widx(lit: int) -> int:
        return lit if lit > 0 else nvars - lit

    clause_db: list[list[int]] = []
    initial_units: list[int] = []
    for c in clauses:
        lits = list(c)
        if not lits:
            return SatResult(False)
        if len(lits) == 1:
            initial_units.append(lits[0])
            continue
        ci = len(clause_db)
        clause_db.append(lits)
        watched[widx(lits[0])].append(ci)
        watched[widx(lits[1])].append(ci)

    qhead = 0

    def propagate() -> bool:
        nonlocal qhead
        while qhead < len(trail):
            false_lit = -trail[qhead]
            qhead += 1
            wlist = watched[widx(false_lit)]
            i = 0
            while i < len(wlist):
                ci = wlist[i]
                lits = clause_db[ci]
                if lits[0] == false_lit:
                    lits[0], lits[1] = lits[1], lits[0]
                if lit_value(lits[0]) == 1:
                    i += 1
                    continue
                moved = False
                for k in range(2, len(lits)):
                    if lit_value(lits[k]) != -1:
                        lits[1], lits[k] = lits[k], lits[1]
                        watched[widx(lits[1])].append(ci)
                        wlist[i] = wlist[-1]
                        wlist.pop()
                        moved = True
                        break
                if moved:
                    continue
                if not enqueue(lits[0]):
                    return False
                i += 1
        return True

    for lit in initial_units:
        if not enqueue(lit):
            return SatResult(False)
    if not propagate():
        return SatResult(False)
    for lit in assumptions:
        if not enqueue(lit) or not propagate():
            return SatResult(False)

    # Decision stack entries: (var, trail length before decision, tried both phases).
    decisions: list[list[int]] = []

    def backtrack_to(mark: int) -> None:
        nonlocal qhead
        while len(trail) > mark:
            assign[abs(trail.pop())] = 0
        qhead = mark

    var = 1
    while True:
        while var <= nvars and assign[var] != 0:
            var += 1
        if var > nvars:
            return SatResult(True, tuple(assign[v] == 1 for v in range(1, nvars + 1)))
        decisions.append([var, len(trail), 0])
        enqueue(var)
        while not propagate():
            while decisions and decisions[-1][2]:
                backtrack_to(decisions[-1][1])
                decisions.pop()
            if not decisions:
                return SatResult(False)
            dvar, mark, _ = decisions[-1]
            backtrack_to(mark)
            decisions[-1][2] = 1
            enqueue(-dvar)
            var = 1


def grow(
    selected: Iterable[int],
    universe: Sequence[int],
    item_clauses: Mapping[int, Sequence[Clause]],
    base_clauses: Sequence[Clause],
    nvars: int,
) -> set[int]:
    """Greedily extend ``selected`` to a maximal satisfiable subset of ``universe``.

    Items are tried in ascending id order and kept whenever the accumulated
    clause set stays satisfiable.  Precondition: ``selected`` plus the base
    clauses is satisfiable.
    """
    current = set(selected)
    active: list[Clause] = list(base_clauses)
    for item in current:
        active.extend(item_clauses[item])
    res = solve(active, nvars)
    if not res.sat:
        raise ValueError("grow precondition violated: selected items unsatisfiable")
    model = res
    for item in sorted(universe):
        if item in current:
            continue
        extra = item_clauses[item]
        # The current model often already satisfies the candidate's clauses,
        # which decides inclusion without a solver call.
        if all(any(model.value(lit) for lit in cl) for cl in extra):
            current.add(item)
            active.extend(extra)
            continue
        res = solve(active + list(extra), nvars)
        if res.sat:
            current.add(item)
            active.extend(extra)
            model = res
    return current


def to_dimacs(clauses: Iterable[Clause], nvars: int) -> str:
    body = [" ".join(str(l) for l in c) + " 0" for c in clauses]
    return "\n".join([f"p cnf {nvars} {len(body)}"] + body) + "\n"


def from_dimacs(text: str) -> tuple[list[tuple[int, ...]], int]:
    nvars = 0
    clauses: list[tuple[int, ...]] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith(("c", "%")):
            continue
        if line.startswith("p"):
            parts = line.split()
            nvars = int(parts[2])
            continue
        lits = [int(tok) for tok in line.split()]
        if lits and lits[-1] == 0:
            lits = lits[:-1]
        if lits:
            clauses.append(tuple(lits))
    return clauses, nvars
