"""Explanation steps: feature vectors, cost-optimal constrained steps, sequences.

An explanation step derives one fact from a subset of the current given facts
plus a subset of the constraint groups; it is verified by unsatisfiability of
the used items together with the negated derived fact, and minimized so that
dropping any single used item restores satisfiability.

Cost-optimal steps are found with an implicit-hitting-set loop: an exact
hitting-set optimizer proposes candidate selections, satisfiable candidates
are grown to maximal satisfiable subsets whose complements become new cover
sets, and the first unsatisfiable candidate is shrunk to a set-minimal core.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from . import optkernel, satkernel
from .model import ClausalCSP, Fact, Instance
from .optkernel import Deviation, HitProblem, SideConstraints

P = 12  # number of sub-objective features, both puzzle kinds


class UnexplainableTargetError(ValueError):
    """The target fact is not implied by the givens plus all groups."""


class SideInfeasibleError(Exception):
    """No explanation satisfies the requested side constraints."""


@dataclass(frozen=True)
class ExplanationStep:
    target: Fact
    facts: frozenset[Fact]
    groups: frozenset[int]
    features: tuple[int, ...]

    def to_json(self, csp: ClausalCSP) -> dict:
        cats = {g.gid: g.category for g in csp.groups}
        return {
            "target": _fact_json(self.target),
            "facts": sorted((_fact_json(f) for f in self.facts), key=str),
            "groups": sorted(
                ({"id": gid, "category": cats[gid]} for gid in self.groups),
                key=lambda d: d["id"],
            ),
            "features": list(self.features),
        }


def _fact_json(f: Fact) -> dict:
    return {"var": list(f.var), "val": f.value if not isinstance(f.value, bool) else bool(f.value)}


class ExplContext:
    """Per-target context: sorted given facts, adjacency, item/feature maps.

    Universe item ids: 0..F-1 are the given facts in sort order, F..F+G-1 the
    constraint groups in gid order, and F+G the forced negated-target literal.
    """

    def __init__(self, csp: ClausalCSP, given: Iterable[Fact], target: Fact):
        self.csp = csp
        self.target = target
        self.given = sorted(given, key=Fact.sort_key)
        self.cat_index = {c: i for i, c in enumerate(csp.categories)}

        self.adjacent_groups = frozenset(
            g.gid for g in csp.groups if target.var in g.decision_vars
        )
        # categories of distance-1 constraints each fact shares with the target
        self.shared_cats: dict[tuple, frozenset[str]] = {}
        for f in self.given:
            cats = frozenset(
                g.category
                for g in csp.groups
                if g.gid in self.adjacent_groups and f.var in g.decision_vars
            )
            self.shared_cats[f.var] = cats

        self.n_facts = len(self.given)
        self.n_groups = len(csp.groups)
        self.forced_item = self.n_facts + self.n_groups
        self.universe = list(range(self.forced_item + 1))
        self.feature_map = {
            j: frozenset(self.item_features(j)) for j in self.universe
        }
        # cost-independent state shared by repeated ocus calls on this context
        self.covers: list[frozenset[int]] = []
        self._sat_memo: dict[frozenset[int], bool] = {}

    def is_sat(self, items: Iterable[int]) -> bool:
        key = frozenset(items)
        hit = self._sat_memo.get(key)
        if hit is None:
            hit = satkernel.solve(self.selection_clauses(key), self.csp.nvars).sat
            self._sat_memo[key] = hit
        return hit

    def item_fact(self, item: int) -> Fact:
        return self.given[item]

    def item_group_gid(self, item: int) -> int:
        return self.csp.groups[item - self.n_facts].gid

    def fact_features(self, f: Fact) -> set[int]:
        cats = self.shared_cats.get(f.var)
        if cats is None:
            cats = frozenset(
                g.category
                for g in self.csp.groups
                if g.gid in self.adjacent_groups and f.var in g.decision_vars
            )
        adjacent = bool(cats)
        out = set()
        if self.csp.kind == "sudoku":
            if adjacent:
                # a fact sharing a unit with the target can never carry the
                # target's value in a consistent state
                assert f.value != self.target.value, (
                    f"adjacent fact {f} shares the explained value"
                )
                out.add(0)
            elif f.value == self.target.value:
                out.add(1)
            else:
                out.add(2)
        else:
            negative = f.value is False or f.value == 0
            if adjacent and negative:
                out.add(0)
            elif not adjacent:
                out.add(1 if not negative else 2)
        for c in cats:
            out.add(9 + self.cat_index[c])
        return out

    def group_features(self, gid: int) -> set[int]:
        cat = self.cat_index[next(g.category for g in self.csp.groups if g.gid == gid)]
        return {3 + cat if gid in self.adjacent_groups else 6 + cat}

    def item_features(self, item: int) -> set[int]:
        if item < self.n_facts:
            return self.fact_features(self.given[item])
        if item < self.forced_item:
            return self.group_features(self.item_group_gid(item))
        return set()

    def item_clauses(self, item: int) -> list[tuple[int, ...]]:
        if item < self.n_facts:
            return [(self.given[item].lit,)]
        if item < self.forced_item:
            return list(self.csp.groups[item - self.n_facts].clauses)
        return [(-self.target.lit,)]

    def selection_clauses(self, items: Iterable[int]) -> list[tuple[int, ...]]:
        out = list(self.csp.base_clauses)
        for j in items:
            out.extend(self.item_clauses(j))
        return out

    def selection_features(self, items: Iterable[int]) -> tuple[int, ...]:
        counts = [0] * P
        for j in items:
            for i in self.feature_map[j]:
                counts[i] += 1
        return tuple(counts)

    def step_from_selection(self, items: Iterable[int]) -> ExplanationStep:
        facts = frozenset(self.given[j] for j in items if j < self.n_facts)
        groups = frozenset(
            self.item_group_gid(j) for j in items if self.n_facts <= j < self.forced_item
        )
        return ExplanationStep(
            target=self.target,
            facts=facts,
            groups=groups,
            features=self.selection_features(items),
        )


class ContextCache:
    """Reuses ExplContext objects (and the covers they accumulate) across
    repeated optimal-step queries on identical puzzle states."""

    def __init__(self):
        self._store: dict[tuple, ExplContext] = {}

    def get(self, csp: ClausalCSP, given: Iterable[Fact], target: Fact) -> ExplContext:
        key = (id(csp), frozenset(given), target)
        ctx = self._store.get(key)
        if ctx is None:
            ctx = ExplContext(csp, key[1], target)
            self._store[key] = ctx
        return ctx


def features(step: ExplanationStep, ctx: ExplContext) -> tuple[int, ...]:
    """Recompute the 12 sub-objective counts of a step from (E, S)."""
    counts = [0] * P
    for f in step.facts:
        for i in ctx.fact_features(f):
            counts[i] += 1
    for gid in step.groups:
        for i in ctx.group_features(gid):
            counts[i] += 1
    return tuple(counts)


@dataclass(frozen=True)
class ExplResult:
    step: ExplanationStep
    objective: float
    tiers: tuple[float, float]
    selection: frozenset[int]


def weighted_item_costs(
    ctx: ExplContext, w: Sequence[float], ub: Sequence[float] | None = None, scale: float = 1.0
) -> dict[int, float]:
    """Per-item costs so that the selection cost equals f_w over scaled features."""
    if ub is None:
        ub = [1.0] * P
    per_feature = [scale * w[i] / ub[i] for i in range(P)]
    return {
        j: sum(per_feature[i] for i in ctx.feature_map[j]) for j in ctx.universe
    }


def unit_item_costs(ctx: ExplContext) -> dict[int, float]:
    return {j: (0.0 if j == ctx.forced_item else 1.0) for j in ctx.universe}


def ocus(
    ctx: ExplContext,
    item_costs: Mapping[int, float],
    side: SideConstraints | None = None,
    feature_costs: Sequence[float] | None = None,
) -> ExplResult:
    """Cost-minimal explanation step satisfying the side constraints.

    Implicit-hitting-set loop; the returned step is a set-minimal core
    (deletion-shrunk, re-checking side constraints after each deletion).
    """
    nvars = ctx.csp.nvars
    if ctx.is_sat(ctx.universe):
        raise UnexplainableTargetError(f"target {ctx.target} is not implied")

    item_clause_map = {j: ctx.item_clauses(j) for j in ctx.universe}
    covers = ctx.covers
    forced = frozenset({ctx.forced_item})
    problem = HitProblem(
        universe=ctx.universe,
        costs=item_costs,
        cover_sets=covers,
        forced=forced,
        feature_map=ctx.feature_map,
        p=P,
        side=side,
        feature_costs=feature_costs,
    )
    while True:
        try:
            hs = optkernel.solve_min(problem)
        except optkernel.Infeasible as exc:
            raise SideInfeasibleError(str(exc)) from exc
        if ctx.is_sat(hs.items):
            grown = satkernel.grow(
                hs.items, ctx.universe, item_clause_map, ctx.csp.base_clauses, nvars
            )
            _add_cover(covers, frozenset(ctx.universe) - frozenset(grown))
        else:
            core = _shrink(ctx, set(hs.items), side)
            step = ctx.step_from_selection(core)
            tiers = optkernel.evaluate(problem, core)
            return ExplResult(
                step=step, objective=tiers[1], tiers=tiers, selection=frozenset(core)
            )


def _add_cover(covers: list[frozenset[int]], new: frozenset[int]) -> None:
    """Keep only inclusion-minimal cover sets; hitting a subset implies
    hitting every superset."""
    if any(c <= new for c in covers):
        return
    covers[:] = [c for c in covers if not (new <= c)]
    covers.append(new)


def _side_ok(counts: Sequence[int], side: SideConstraints | None) -> bool:
    if side is None:
        return True
    if side.nondomination is not None and not any(
        counts[i] < side.nondomination[i] for i in range(P)
    ):
        return False
    if side.inequality is not None and tuple(counts) == tuple(side.inequality):
        return False
    return True


def _shrink(ctx: ExplContext, core: set[int], side: SideConstraints | None) -> set[int]:
    for item in sorted(core):
        if item == ctx.forced_item:
            continue
        trial = core - {item}
        if not _side_ok(ctx.selection_features(trial), side):
            continue
        if not ctx.is_sat(trial):
            core = trial
    return core


def ses(ctx: ExplContext) -> ExplResult:
    """Smallest explanation step: cardinality-minimal over facts and groups."""
    return ocus(ctx, unit_item_costs(ctx))


def _better(a: tuple, b: tuple) -> bool:
    # lexicographic tier comparison with tolerance, then smallest target key
    (t1a, t2a, ka), (t1b, t2b, kb) = a, b
    if t1a < t1b - optkernel.EPS:
        return True
    if t1a > t1b + optkernel.EPS:
        return False
    if t2a < t2b - optkernel.EPS:
        return True
    if t2a > t2b + optkernel.EPS:
        return False
    return ka < kb


def best_step(
    instance: Instance,
    w: Sequence[float],
    ub: Sequence[float] | None = None,
    side_for: "callable | None" = None,
    scale: float = 1.0,
    cache: ContextCache | None = None,
) -> ExplResult:
    """Minimum-objective explanation across every unexplained target fact.

    ``side_for(ctx)`` may supply per-target side constraints.  Ties across
    targets break toward the smallest target variable id.  Targets for which
    the side constraints are infeasible are skipped; if no target admits a
    feasible step, SideInfeasibleError is raised.
    """
    if not instance.targets:
        raise ValueError("instance has no targets to explain")
    best: tuple | None = None
    best_result: ExplResult | None = None
    infeasible = 0
    for target in sorted(instance.targets, key=Fact.sort_key):
        if cache is not None:
            ctx = cache.get(instance.csp, instance.given, target)
        else:
            ctx = ExplContext(instance.csp, instance.given, target)
        costs = weighted_item_costs(ctx, w, ub, scale)
        fc = tuple(scale * w[i] / (ub[i] if ub is not None else 1.0) for i in range(P))
        side = side_for(ctx) if side_for is not None else None
        try:
            result = ocus(ctx, costs, side, feature_costs=fc)
        except SideInfeasibleError:
            infeasible += 1
            continue
        key = (result.tiers[0], result.tiers[1], target.sort_key())
        if best is None or _better(key, best):
            best = key
            best_result = result
    if best_result is None:
        raise SideInfeasibleError(
            f"side constraints infeasible for all {infeasible} targets"
        )
    return best_result


def optimal_step(
    instance: Instance,
    w: Sequence[float],
    bounds: Sequence[float] | None = None,
    cache: ContextCache | None = None,
) -> ExplResult:
    """Optimal explanation step across targets under f_w with normalized costs."""
    if any(x <= 0 for x in w):
        raise ValueError("weights must be strictly positive")
    return best_step(instance, w, bounds, cache=cache)


def sequence(
    csp: ClausalCSP,
    given: Iterable[Fact],
    targets: Iterable[Fact],
    w: Sequence[float],
    bounds: Sequence[float] | None = None,
    cache: ContextCache | None = None,
) -> list[ExplanationStep]:
    """Greedy optimal explanation sequence: derived facts partition the targets."""
    given = set(given)
    remaining = set(targets)
    steps: list[ExplanationStep] = []
    while remaining:
        inst = Instance(csp=csp, given=frozenset(given), targets=frozenset(remaining))
        result = optimal_step(inst, w, bounds, cache=cache)
        step = result.step
        steps.append(step)
        given.add(step.target)
        remaining.discard(step.target)
    return steps


def f_w(w: Sequence[float], phi: Sequence[float]) -> float:
    """Linear scalarization of a feature vector."""
    return sum(wi * pi for wi, pi in zip(w, phi))
