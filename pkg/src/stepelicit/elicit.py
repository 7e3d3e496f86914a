"""Interactive preference elicitation over explanation steps.

The loop shows a user two alternative explanation steps per iteration.  The
first is optimal under the current weight estimate; the second trades quality
for diversification, optionally restricted to non-dominated alternatives and
steered by per-feature exploration weights.  Preferences feed a perceptron
update on the weights; indifference advances the loop without an update.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

from .explain import (
    ContextCache,
    ExplResult,
    P,
    SideInfeasibleError,
    best_step,
    f_w,
    optimal_step,
    ses,
)
from .model import ClausalCSP, Fact, Instance
from .optkernel import Deviation, SideConstraints

log = logging.getLogger(__name__)

SCHEMES = ("none", "learned", "ucb")
NORMALIZATIONS = ("none", "default", "cumulative", "local")
SELECTIONS = ("online", "offline_random", "offline_ses")
LABELS = ("first", "second", "indifferent")

WEIGHT_FLOOR = 1e-6


@dataclass(frozen=True)
class ElicitConfig:
    nondomination: bool = False
    scheme: str = "none"
    normalization: str = "local"
    eta: float = 0.5
    T: int = 100
    selection: str = "offline_ses"
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.selection not in SELECTIONS:
            raise ValueError(f"unknown selection mode {self.selection!r}")
        if self.T < 0:
            raise ValueError("T must be non-negative")

    @classmethod
    def choice_perceptron(cls, **kw) -> "ElicitConfig":
        return cls(nondomination=False, scheme="none", **kw)

    @classmethod
    def machop(cls, **kw) -> "ElicitConfig":
        return cls(nondomination=True, scheme="ucb", **kw)


class NormState:
    """Per-feature normalization bounds for the learner's view of features."""

    def __init__(self, mode: str):
        if mode not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {mode!r}")
        self.mode = mode
        self.ub = [1.0] * P
        self._warned: set[int] = set()

    def set_default_bounds(self, ub: Sequence[float]) -> None:
        assert self.mode == "default"
        out = []
        for i, b in enumerate(ub):
            if b <= 0:
                if i not in self._warned:
                    log.warning(
                        "feature %d has zero upper bound; left at raw scale", i
                    )
                    self._warned.add(i)
                b = 1.0
            out.append(float(b))
        self.ub = out

    def update(self, phi1: Sequence[int], phi2: Sequence[int]) -> None:
        """Fold a freshly generated pair into the bounds."""
        if self.mode == "cumulative":
            self.ub = [
                max(float(a), float(b), u)
                for a, b, u in zip(phi1, phi2, self.ub)
            ]
        elif self.mode == "local":
            self.ub = [
                float(m) if (m := max(a, b)) > 0 else 1.0
                for a, b in zip(phi1, phi2)
            ]

    def normalize(self, phi: Sequence[int]) -> tuple[float, ...]:
        if self.mode == "none":
            return tuple(float(x) for x in phi)
        return tuple(x / u for x, u in zip(phi, self.ub))


def ucb_weights(
    q_num: Sequence[int], n_seen: Sequence[int], n_queries: int
) -> list[float]:
    """Empirical improvement rate plus an exploration bonus, per feature.

    A feature never observed to differ between the two steps of a labeled
    pair gets infinite weight, forcing the next query to explore it.
    """
    out = []
    for q, n in zip(q_num, n_seen):
        if n == 0:
            out.append(math.inf)
        else:
            out.append(q / n + 2.0 * math.sqrt(math.log(n_queries) / n))
    return out


def update_weights(
    w: Sequence[float],
    phi_plus: Sequence[float],
    phi_minus: Sequence[float],
    eta: float,
) -> list[float]:
    """Perceptron step toward the preferred (lower-cost) feature vector."""
    return [
        max(WEIGHT_FLOOR, wi + eta * (m - p))
        for wi, p, m in zip(w, phi_plus, phi_minus)
    ]


def default_upper_bounds(instance: Instance, cache: ContextCache | None) -> list[float]:
    """Nadir over-approximation: feature counts of the full candidate set,
    maximized over the leave-one-target-out refutation contexts."""
    ub = [0] * P
    for target in sorted(instance.targets, key=Fact.sort_key):
        if cache is not None:
            ctx = cache.get(instance.csp, instance.given, target)
        else:
            from .explain import ExplContext

            ctx = ExplContext(instance.csp, instance.given, target)
        counts = ctx.selection_features(ctx.universe)
        ub = [max(u, c) for u, c in zip(ub, counts)]
    return [float(u) for u in ub]


def ses_order(
    csp: ClausalCSP,
    given: Iterable[Fact],
    targets: Iterable[Fact],
    cache: dict | None = None,
    ctx_cache: ContextCache | None = None,
) -> list[Fact]:
    """Order the targets so each position carries the smallest explanation
    step given everything ordered before it; ties go to the smallest variable.
    """
    key = (id(csp), frozenset(given), frozenset(targets))
    if cache is not None and key in cache:
        return list(cache[key])
    state = set(given)
    remaining = set(targets)
    ctx_cache = ctx_cache or ContextCache()
    order: list[Fact] = []
    while remaining:
        best = None
        for fact in sorted(remaining, key=Fact.sort_key):
            ctx = ctx_cache.get(csp, state, fact)
            size = ses(ctx).objective
            if best is None or size < best[0] - 1e-9:
                best = (size, fact)
        order.append(best[1])
        state.add(best[1])
        remaining.discard(best[1])
    if cache is not None:
        cache[key] = list(order)
    return order


@dataclass
class Query:
    t: int
    puzzle: int  # index into the engine's pool
    instance: Instance
    y1: ExplResult
    y2: ExplResult
    gamma: float
    u: tuple[float, ...]


class _PuzzleProgress:
    def __init__(self, instance: Instance):
        self.initial = instance
        self.reset()

    def reset(self) -> None:
        self.given: set[Fact] = set(self.initial.given)
        self.remaining: set[Fact] = set(self.initial.targets)
        self.order: list[Fact] | None = None
        self.pos = 0

    @property
    def exhausted(self) -> bool:
        return not self.remaining

    def consume(self, fact: Fact) -> None:
        self.given.add(fact)
        self.remaining.discard(fact)
        if self.order is not None:
            self.pos += 1


class ElicitationEngine:
    """Stateful query/label cycle.  next_query() is idempotent until the
    pending query is labeled via submit_label()."""

    def __init__(
        self,
        pool: Sequence[Instance],
        config: ElicitConfig,
        ctx_cache: ContextCache | None = None,
        ses_cache: dict | None = None,
    ):
        if not pool:
            raise ValueError("empty puzzle pool")
        self.pool = list(pool)
        self.cfg = config
        self.rng = random.Random(config.seed)
        self.w = [1.0] * P
        self.t = 1
        self.history: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
        self.q_num = [0] * P
        self.n_seen = [0] * P
        self.norm = NormState(config.normalization)
        self.progress = [_PuzzleProgress(inst) for inst in self.pool]
        self.active: int | None = None
        self.pending: Query | None = None
        self.log: list[dict] = []
        self.ctx_cache = ctx_cache if ctx_cache is not None else ContextCache()
        self.ses_cache = ses_cache if ses_cache is not None else {}

    # ------------------------------------------------------------ selection

    def _activate(self) -> int:
        candidates = [i for i, pr in enumerate(self.progress) if not pr.exhausted]
        if not candidates:
            # every puzzle fully explained: start over so long sessions can
            # keep asking questions
            for pr in self.progress:
                pr.reset()
            candidates = list(range(len(self.progress)))
        idx = candidates[self.rng.randrange(len(candidates))]
        pr = self.progress[idx]
        if self.cfg.selection == "offline_random" and pr.order is None:
            order = sorted(pr.remaining, key=Fact.sort_key)
            self.rng.shuffle(order)
            pr.order = order
            pr.pos = 0
        elif self.cfg.selection == "offline_ses" and pr.order is None:
            pr.order = ses_order(
                pr.initial.csp,
                pr.given,
                pr.remaining,
                cache=self.ses_cache,
                ctx_cache=self.ctx_cache,
            )
            pr.pos = 0
        return idx

    def _current_instance(self) -> tuple[int, Instance]:
        if self.active is None or self.progress[self.active].exhausted:
            self.active = self._activate()
        pr = self.progress[self.active]
        csp = pr.initial.csp
        if self.cfg.selection == "online":
            targets = frozenset(pr.remaining)
        else:
            targets = frozenset({pr.order[pr.pos]})
        return self.active, Instance(
            csp=csp, given=frozenset(pr.given), targets=targets
        )

    # ---------------------------------------------------------------- query

    def _scheme_weights(self) -> tuple[float, ...]:
        if self.cfg.scheme == "learned":
            return tuple(self.w)
        if self.cfg.scheme == "ucb":
            return tuple(ucb_weights(self.q_num, self.n_seen, len(self.history)))
        return (1.0,) * P

    def _generate(self, puzzle: int, instance: Instance) -> Query:
        cfg = self.cfg
        ub = self._cost_bounds(instance)
        y1 = optimal_step(instance, self.w, bounds=ub, cache=self.ctx_cache)
        gamma = 1.0 / self.t
        u = self._scheme_weights()
        ref = y1.step.features
        # deviation is computed on raw integer counts, so the normalization
        # denominator folds into the per-feature deviation weights
        dev_u = tuple(ui / bi for ui, bi in zip(u, ub))
        side = SideConstraints(
            nondomination=ref if cfg.nondomination else None,
            inequality=ref,
            deviation=Deviation(reference=ref, weights=dev_u, tradeoff=gamma),
        )
        try:
            y2 = best_step(
                instance,
                self.w,
                ub,
                side_for=lambda ctx: side,
                scale=1.0 - gamma,
                cache=self.ctx_cache,
            )
        except SideInfeasibleError:
            if not cfg.nondomination:
                raise
            relaxed = replace(side, nondomination=None)
            y2 = best_step(
                instance,
                self.w,
                ub,
                side_for=lambda ctx: relaxed,
                scale=1.0 - gamma,
                cache=self.ctx_cache,
            )
        return Query(
            t=self.t,
            puzzle=puzzle,
            instance=instance,
            y1=y1,
            y2=y2,
            gamma=gamma,
            u=u,
        )

    def _cost_bounds(self, instance: Instance) -> list[float]:
        if self.cfg.normalization == "default":
            self.norm.set_default_bounds(
                default_upper_bounds(instance, self.ctx_cache)
            )
        return list(self.norm.ub)

    def next_query(self) -> Query | None:
        if self.pending is not None:
            return self.pending
        if self.t > self.cfg.T:
            return None
        while True:
            puzzle, instance = self._current_instance()
            try:
                query = self._generate(puzzle, instance)
            except SideInfeasibleError:
                # single-explanation state: nothing to compare, move past it
                pr = self.progress[puzzle]
                skipped = min(instance.targets, key=Fact.sort_key)
                pr.consume(skipped)
                continue
            self.pending = query
            return query

    # ---------------------------------------------------------------- label

    def submit_label(self, label: str) -> dict:
        if self.pending is None:
            raise RuntimeError("no pending query to label")
        if label not in LABELS:
            raise ValueError(f"unknown label {label!r}")
        query = self.pending
        phi1 = query.y1.step.features
        phi2 = query.y2.step.features

        # bounds absorb the fresh pair first; the update then runs on the
        # newly normalized features and the next query uses the same bounds
        self.norm.update(phi1, phi2)
        if label != "indifferent":
            plus, minus = (phi1, phi2) if label == "first" else (phi2, phi1)
            self.history.append((plus, minus))
            for i in range(P):
                if plus[i] != minus[i]:
                    self.n_seen[i] += 1
                    if plus[i] < minus[i]:
                        self.q_num[i] += 1
            self.w = update_weights(
                self.w, self.norm.normalize(plus), self.norm.normalize(minus), self.cfg.eta
            )

        self._advance(query)
        entry = {
            "t": query.t,
            "puzzle": query.puzzle,
            "target1": list(query.y1.step.target.var),
            "target2": list(query.y2.step.target.var),
            "phi1": list(phi1),
            "phi2": list(phi2),
            "label": label,
            "gamma": query.gamma,
            "ub": list(self.norm.ub),
            "w": list(self.w),
        }
        self.log.append(entry)
        self.pending = None
        self.t += 1
        return entry

    def _advance(self, query: Query) -> None:
        pr = self.progress[query.puzzle]
        if self.cfg.selection == "online":
            # keep the step whose derived fact looks best under the new
            # weights; exact ties keep the first step
            n1 = self.norm.normalize(query.y1.step.features)
            n2 = self.norm.normalize(query.y2.step.features)
            chosen = (
                query.y2.step.target
                if f_w(self.w, n2) < f_w(self.w, n1)
                else query.y1.step.target
            )
            pr.consume(chosen)
        else:
            pr.consume(next(iter(query.instance.targets)))


def run_elicitation(
    pool: Sequence[Instance],
    config: ElicitConfig,
    responder: Callable[[Query], str],
    ctx_cache: ContextCache | None = None,
    ses_cache: dict | None = None,
) -> tuple[list[float], list[dict]]:
    """Drive a full session with a programmatic responder; returns the final
    weights and the iteration log."""
    engine = ElicitationEngine(pool, config, ctx_cache=ctx_cache, ses_cache=ses_cache)
    while True:
        query = engine.next_query()
        if query is None:
            break
        engine.submit_label(responder(query))
    return list(engine.w), engine.log


def replay(config: ElicitConfig, entries: Iterable[dict]) -> list[float]:
    """Recompute the weight trajectory from a session log.

    Bounds for the cumulative/local/none modes are rebuilt from the logged
    pairs; the default mode takes its instance-derived bounds from the log.
    """
    norm = NormState(config.normalization)
    w = [1.0] * P
    for entry in entries:
        phi1 = tuple(entry["phi1"])
        phi2 = tuple(entry["phi2"])
        if config.normalization == "default":
            norm.ub = [float(b) for b in entry["ub"]]
        norm.update(phi1, phi2)
        if entry["label"] != "indifferent":
            plus, minus = (phi1, phi2) if entry["label"] == "first" else (phi2, phi1)
            w = update_weights(
                w, norm.normalize(plus), norm.normalize(minus), config.eta
            )
    return w
