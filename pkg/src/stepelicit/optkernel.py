"""Exact 0-1 optimizer for weighted hitting sets with side constraints.

Minimizes a linear item-cost objective over subsets of a small universe,
subject to: forced items, "hit every cover set" constraints, an optional
non-domination disjunction (some feature count must drop strictly below a
reference), an optional feature-vector inequality, and an optional weighted
L1-deviation reward that is subtracted from the objective.

Feature counts are integers determined by which selected items increment
which feature, so a depth-first branch and bound over item-inclusion binaries
with interval bounds per feature is exact.  Deviation weights may be
infinite; those features form a first objective tier (maximize their
deviation) ahead of the finite-weight objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

EPS = 1e-9


class Infeasible(Exception):
    """No selection satisfies the covers and side constraints."""


@dataclass(frozen=True)
class Deviation:
    reference: tuple[int, ...]  # feature vector c to deviate from
    weights: tuple[float, ...]  # per-feature u >= 0, math.inf allowed
    tradeoff: float  # gamma in [0, 1]


@dataclass(frozen=True)
class SideConstraints:
    nondomination: tuple[int, ...] | None = None  # require some phi_i < ref_i
    inequality: tuple[int, ...] | None = None  # require phi != ref
    deviation: Deviation | None = None


@dataclass
class HitProblem:
    universe: Sequence[int]
    costs: Mapping[int, float]
    cover_sets: Sequence[frozenset[int]]
    forced: frozenset[int] = frozenset()
    feature_map: Mapping[int, frozenset[int]] = field(default_factory=dict)
    p: int = 0
    side: SideConstraints | None = None
    # when every item's cost is the sum of these per-feature costs over its
    # features, the solver can bound cost and deviation jointly per feature
    feature_costs: Sequence[float] | None = None


@dataclass(frozen=True)
class HitSolution:
    items: frozenset[int]
    objective: float  # finite objective tier
    tiers: tuple[float, float]


def _feature_counts(items, feature_map, p) -> list[int]:
    counts = [0] * p
    for item in items:
        for i in feature_map.get(item, ()):
            counts[i] += 1
    return counts


def evaluate(problem: HitProblem, items) -> tuple[float, float]:
    """Objective tiers of a selection: (infinite-weight tier, finite tier)."""
    cost = sum(problem.costs.get(j, 0.0) for j in items)
    side = problem.side
    tier1 = 0.0
    dev_term = 0.0
    if side is not None and side.deviation is not None:
        dev = side.deviation
        counts = _feature_counts(items, problem.feature_map, problem.p)
        for i in range(problem.p):
            d = abs(counts[i] - dev.reference[i])
            if math.isinf(dev.weights[i]):
                tier1 -= d
            else:
                dev_term += dev.weights[i] * d
        dev_term *= dev.tradeoff
    return (tier1, cost - dev_term)


def solve_min(problem: HitProblem) -> HitSolution:
    """Provably optimal selection; ties broken by smallest sorted item ids."""
    side = problem.side or SideConstraints()
    dev = side.deviation
    p = problem.p
    forced = frozenset(problem.forced)
    assert forced <= set(problem.universe), "forced items must be in the universe"

    free = sorted(j for j in problem.universe if j not in forced)
    n = len(free)
    pos = {j: k for k, j in enumerate(free)}
    costs = [float(problem.costs.get(j, 0.0)) for j in free]
    feats = [tuple(problem.feature_map.get(j, ())) for j in free]

    base_cost = sum(problem.costs.get(j, 0.0) for j in forced)
    base_counts = _feature_counts(forced, problem.feature_map, p)

    # suffix[k][i] = how many undecided items at positions >= k increment feature i
    suffix = [[0] * p for _ in range(n + 1)]
    for k in range(n - 1, -1, -1):
        row = suffix[k + 1][:]
        for i in feats[k]:
            row[i] += 1
        suffix[k] = row

    inf_feats = []
    fin_u = [0.0] * p
    gamma = 0.0
    ref = None
    if dev is not None:
        gamma = dev.tradeoff
        ref = dev.reference
        for i in range(p):
            if math.isinf(dev.weights[i]):
                inf_feats.append(i)
            else:
                fin_u[i] = dev.weights[i]

    covers = []
    for cs in problem.cover_sets:
        assert cs, "cover sets must be non-empty"
        if cs & forced:
            continue
        members = sorted(pos[j] for j in cs if j in pos)
        if not members:
            raise Infeasible("cover set has no selectable members")
        covers.append(members)
    cov_of_item: list[list[int]] = [[] for _ in range(n)]
    for ci, members in enumerate(covers):
        for k in members:
            cov_of_item[k].append(ci)
    cov_sat = [False] * len(covers)

    best: dict = {"tiers": None, "ids": None}
    excluded_mark = [0] * n
    # worst-case net objective change from taking an item: its cost minus the
    # most the deviation term could pay back for its feature increments
    net_cost = [
        costs[k] - gamma * sum(fin_u[i] for i in feats[k]) for k in range(n)
    ]
    has_inf = [any(i in inf_feats for i in feats[k]) for k in range(n)]
    ineq = side.inequality
    fc = problem.feature_costs

    def better_than_best(t1: float, t2: float, ids: tuple[int, ...]) -> bool:
        bt = best["tiers"]
        if bt is None:
            return True
        if t1 < bt[0] - EPS:
            return True
        if t1 > bt[0] + EPS:
            return False
        if t2 < bt[1] - EPS:
            return True
        if t2 > bt[1] + EPS:
            return False
        return ids < best["ids"]

    counts = base_counts[:]
    selected: list[int] = []
    forced_sorted = sorted(forced)
    nd = side.nondomination
    # number of features still strictly below the nondomination reference
    nd_slack = [sum(1 for i in range(p) if counts[i] < nd[i]) if nd else 0]

    def tie_prune(k: int) -> bool:
        """True when every completion of the current prefix is
        lexicographically worse than the incumbent's id sequence.

        Items below free[k] are fully decided, so the committed part of the
        sorted id tuple is known; undecided ids are all >= free[k].
        """
        thresh = free[k] if k < n else math.inf
        bids = best["ids"]
        ci = fi = bi = 0
        while True:
            c = free[selected[ci]] if ci < len(selected) else None
            f = None
            if fi < len(forced_sorted) and forced_sorted[fi] < thresh:
                f = forced_sorted[fi]
            if c is not None and (f is None or c < f):
                nxt = c
                ci += 1
            elif f is not None:
                nxt = f
                fi += 1
            else:
                nxt = None
            b = bids[bi] if bi < len(bids) and bids[bi] < thresh else None
            if nxt is None:
                # committed part exhausted: stopping right here would give a
                # proper prefix of (or equal to) the incumbent, which wins or
                # ties, so the subtree cannot be ruled out
                return False
            if b is None:
                # the incumbent ran out first: it is a proper prefix of every
                # completion, hence strictly smaller
                return bi >= len(bids)
            if nxt != b:
                return nxt > b
            bi += 1

    # once no undecided item can change any feature, the counts are final
    all_features_fixed = [not any(suffix[k][i] for i in range(p)) for k in range(n + 1)]

    def bound_and_prune(k: int, cost: float) -> bool:
        """True if the subtree rooted at position k can be pruned."""
        if side.nondomination is not None:
            # counts only grow with further inclusions
            if nd_slack[0] == 0:
                return True
        if side.inequality is not None:
            if all_features_fixed[k] and list(side.inequality) == counts:
                return True
        lb = cost
        if covers:
            seen_items: set[int] = set()
            for ci in range(len(covers)):
                if cov_sat[ci]:
                    continue
                members = [m for m in covers[ci] if m >= k and excluded_mark[m] == 0]
                if not members:
                    return True  # cover can no longer be hit
                if not any(m in seen_items for m in members):
                    lb += min(costs[m] for m in members)
                    seen_items.update(members)
        if best["tiers"] is None:
            return False
        # tier-1 lower bound: the most deviation infinite-weight features can reach
        t1_lb = 0.0
        for i in inf_feats:
            lo = counts[i]
            hi = counts[i] + suffix[k][i]
            t1_lb -= max(abs(lo - ref[i]), abs(hi - ref[i]))
        if t1_lb > best["tiers"][0] + EPS:
            return True
        # tier-2 lower bound: selected cost, plus disjoint-cover cost, minus the
        # largest finite-weight deviation still reachable
        if dev is not None and gamma > 0:
            dev_max = 0.0
            for i in range(p):
                if fin_u[i] == 0.0:
                    continue
                lo = counts[i]
                hi = counts[i] + suffix[k][i]
                dev_max += fin_u[i] * max(abs(lo - ref[i]), abs(hi - ref[i]))
            lb -= gamma * dev_max
            if fc is not None:
                # per-feature joint bound: minimize w_i*c - gamma*u_i*|c-ref_i|
                # over the reachable count interval (endpoints or the kink)
                lb2 = 0.0
                for i in range(p):
                    lo = counts[i]
                    hi = lo + suffix[k][i]
                    u = gamma * fin_u[i]
                    m = fc[i] * lo - u * abs(lo - ref[i])
                    v = fc[i] * hi - u * abs(hi - ref[i])
                    if v < m:
                        m = v
                    if lo < ref[i] < hi:
                        v = fc[i] * ref[i]
                        if v < m:
                            m = v
                    lb2 += m
                if lb2 > lb:
                    lb = lb2
        if t1_lb < best["tiers"][0] - EPS:
            return False
        if lb > best["tiers"][1] + EPS:
            return True
        return lb >= best["tiers"][1] - EPS and tie_prune(k)

    def at_leaf(cost: float) -> None:
        if not all(cov_sat):
            return
        if side.nondomination is not None:
            if not any(counts[i] < side.nondomination[i] for i in range(p)):
                return
        if side.inequality is not None and list(side.inequality) == counts:
            return
        t1 = 0.0
        dev_term = 0.0
        if dev is not None:
            for i in inf_feats:
                t1 -= abs(counts[i] - ref[i])
            for i in range(p):
                if fin_u[i]:
                    dev_term += fin_u[i] * abs(counts[i] - ref[i])
        t2 = cost - gamma * dev_term
        ids = tuple(sorted([free[m] for m in selected] + list(forced)))
        if better_than_best(t1, t2, ids):
            best["tiers"] = (t1, t2)
            best["ids"] = ids

    def include_first(k: int) -> bool:
        # free or paying items go in first; on exact ties taking first also
        # matches the lexicographic id order used to break equal objectives
        return has_inf[k] or net_cost[k] <= EPS

    def dfs(k: int, cost: float) -> None:
        if bound_and_prune(k, cost):
            return
        if k == n:
            at_leaf(cost)
            return

        def take() -> None:
            selected.append(k)
            for i in feats[k]:
                counts[i] += 1
                if nd and counts[i] == nd[i]:
                    nd_slack[0] -= 1
            for ci in cov_of_item[k]:
                if not cov_sat[ci]:
                    cov_sat[ci] = True
                    undone.append(ci)
            dfs(k + 1, cost + costs[k])
            for ci in undone:
                cov_sat[ci] = False
            undone.clear()
            for i in feats[k]:
                if nd and counts[i] == nd[i]:
                    nd_slack[0] += 1
                counts[i] -= 1
            selected.pop()

        def skip() -> None:
            excluded_mark[k] = 1
            dfs(k + 1, cost)
            excluded_mark[k] = 0

        undone: list[int] = []
        # taking an item that hits no unsatisfied cover strictly raises the
        # objective once the deviation payback is accounted for; that branch
        # can never win, unless the item is still needed to steer the feature
        # vector away from an unsettled inequality reference
        if (
            net_cost[k] > EPS
            and not has_inf[k]
            and all(cov_sat[ci] for ci in cov_of_item[k])
            and (ineq is None or any(counts[i] > ineq[i] for i in range(p)))
        ):
            skip()
            return
        if include_first(k):
            take()
            skip()
        else:
            skip()
            take()

    dfs(0, base_cost)
    if best["tiers"] is None:
        raise Infeasible("no feasible selection")
    items = frozenset(best["ids"]) | forced
    return HitSolution(items=items, objective=best["tiers"][1], tiers=best["tiers"])
