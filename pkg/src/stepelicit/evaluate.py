"""Regret metrics and experiment orchestration.

Regret compares the explanation chosen under learned weights against the one
chosen under the simulated user's hidden weights, both scored by the hidden
weights on raw feature counts.  Experiments sweep strategy cells over oracles
and runs, then emit a CSV of rows, a JSON summary, and a pair of figures.
"""

from __future__ import annotations

import csv
import json
import statistics
import time
import zlib
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

from . import puzzles
from .elicit import ElicitConfig, ElicitationEngine
from .explain import ContextCache, f_w, optimal_step, sequence
from .model import Instance
from .oracle import OracleUser, respond, sample_oracle

REGRET_TOL = 1e-9


def relative_regret(
    instance: Instance,
    w_star: Sequence[float],
    w: Sequence[float],
    cache: ContextCache | None = None,
) -> float:
    """Utility gap of the learned choice relative to the true optimum.

    Both argmins run on raw (unnormalized) feature counts, so the result is
    invariant to any positive rescaling of either weight vector.
    """
    y = optimal_step(instance, list(w), cache=cache)
    y_star = optimal_step(instance, list(w_star), cache=cache)
    f_learned = f_w(w_star, y.step.features)
    f_best = f_w(w_star, y_star.step.features)
    if f_best <= 0:
        raise ValueError("true optimum has non-positive utility")
    regret = (f_learned - f_best) / f_best
    assert regret >= -REGRET_TOL, "learned choice beat the true optimum"
    return max(0.0, regret)


def optimal_sequence(instance: Instance, w_star: Sequence[float], cache=None):
    """The explanation sequence a user with hidden weights would build."""
    return sequence(
        instance.csp, instance.given, instance.targets, list(w_star), cache=cache
    )


def sequential_regret(
    instance: Instance,
    e_star,
    w_star: Sequence[float],
    w: Sequence[float],
    cache: ContextCache | None = None,
) -> float:
    """Mean relative regret over the states visited by the true-weights
    sequence: before each step, everything that sequence already explained
    counts as given."""
    given = set(instance.given)
    remaining = set(instance.targets)
    total = 0.0
    for step in e_star:
        state = Instance(
            csp=instance.csp, given=frozenset(given), targets=frozenset(remaining)
        )
        total += relative_regret(state, w_star, w, cache=cache)
        given.add(step.target)
        remaining.discard(step.target)
    return total / len(e_star)


@dataclass(frozen=True)
class Cell:
    """One strategy configuration in the experiment grid."""

    name: str
    nondomination: bool
    scheme: str
    normalization: str
    eta: float
    selection: str = "offline_ses"


@dataclass(frozen=True)
class ExperimentConfig:
    train_puzzles: tuple[str, ...]
    eval_puzzles: tuple[str, ...]
    cells: tuple[Cell, ...]
    oracle_seeds: tuple[int, ...]
    runs: int = 1
    T: int = 30
    seed: int = 0

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ExperimentConfig":
        cells = tuple(Cell(**c) for c in doc["cells"])
        return cls(
            train_puzzles=tuple(doc["train_puzzles"]),
            eval_puzzles=tuple(doc["eval_puzzles"]),
            cells=cells,
            oracle_seeds=tuple(doc["oracle_seeds"]),
            runs=int(doc.get("runs", 1)),
            T=int(doc.get("T", 30)),
            seed=int(doc.get("seed", 0)),
        )


CSV_COLUMNS = (
    "strategy",
    "normalization",
    "scheme",
    "eta",
    "oracle_seed",
    "run_seed",
    "puzzle",
    "seq_regret",
    "mean_query_time_s",
)


def _run_cell_once(
    cell: Cell,
    pool: Sequence[Instance],
    eval_pool: Mapping[str, Instance],
    user: OracleUser,
    run_seed: int,
    T: int,
    caches: dict,
    e_star_cache: dict,
    oracle_seed: int,
) -> list[dict]:
    cfg = ElicitConfig(
        nondomination=cell.nondomination,
        scheme=cell.scheme,
        normalization=cell.normalization,
        eta=cell.eta,
        T=T,
        selection=cell.selection,
        seed=run_seed,
    )
    engine = ElicitationEngine(
        pool, cfg, ctx_cache=caches["ctx"], ses_cache=caches["ses"]
    )
    timings: list[float] = []
    while True:
        t0 = time.perf_counter()
        query = engine.next_query()
        timings.append(time.perf_counter() - t0)
        if query is None:
            timings.pop()
            break
        engine.submit_label(
            respond(user, query.y1.step.features, query.y2.step.features)
        )
    mean_time = statistics.fmean(timings) if timings else 0.0

    rows = []
    for name, inst in eval_pool.items():
        key = (oracle_seed, name)
        if key not in e_star_cache:
            e_star_cache[key] = optimal_sequence(
                inst, user.w_star, cache=caches["ctx"]
            )
        regret = sequential_regret(
            inst, e_star_cache[key], user.w_star, engine.w, cache=caches["ctx"]
        )
        rows.append(
            {
                "strategy": cell.name,
                "normalization": cell.normalization,
                "scheme": cell.scheme,
                "eta": cell.eta,
                "oracle_seed": oracle_seed,
                "run_seed": run_seed,
                "puzzle": name,
                "seq_regret": regret,
                "mean_query_time_s": mean_time,
            }
        )
    return rows


def _aggregate(rows: Sequence[Mapping]) -> dict:
    by_cell: dict[str, list[float]] = {}
    times: dict[str, list[float]] = {}
    for row in rows:
        by_cell.setdefault(row["strategy"], []).append(row["seq_regret"])
        times.setdefault(row["strategy"], []).append(row["mean_query_time_s"])
    out = {}
    for name, values in by_cell.items():
        values = sorted(values)
        n = len(values)
        out[name] = {
            "n": n,
            "mean": statistics.fmean(values),
            "std": statistics.pstdev(values) if n > 1 else 0.0,
            "median": statistics.median(values),
            "q25": values[max(0, (n - 1) // 4)],
            "q75": values[min(n - 1, (3 * (n - 1)) // 4)],
            "min": values[0],
            "max": values[-1],
            "mean_query_time_s": statistics.fmean(times[name]),
        }
    return out


def run_experiment(
    config: ExperimentConfig,
    out_dir: str | Path | None = None,
    progress: Callable[[str], None] | None = None,
) -> dict:
    """Sweep the grid; returns the report and, when out_dir is given, writes
    results.csv, report.json and summary figures there."""
    pool = [puzzles.load(name) for name in config.train_puzzles]
    eval_pool = {name: puzzles.load(name) for name in config.eval_puzzles}
    caches = {"ctx": ContextCache(), "ses": {}}
    e_star_cache: dict = {}
    rows: list[dict] = []
    failures: list[dict] = []
    for cell in config.cells:
        for oracle_seed in config.oracle_seeds:
            for run in range(config.runs):
                tag = f"{config.seed}:{cell.name}:{oracle_seed}:{run}"
                run_seed = zlib.crc32(tag.encode())
                user = sample_oracle(oracle_seed)
                if progress is not None:
                    progress(f"{cell.name} oracle={oracle_seed} run={run}")
                try:
                    rows.extend(
                        _run_cell_once(
                            cell,
                            pool,
                            eval_pool,
                            user,
                            run_seed,
                            config.T,
                            caches,
                            e_star_cache,
                            oracle_seed,
                        )
                    )
                except Exception as exc:  # record and keep sweeping
                    failures.append(
                        {
                            "strategy": cell.name,
                            "oracle_seed": oracle_seed,
                            "run": run,
                            "error": repr(exc),
                        }
                    )
    report = {
        "config": {
            **asdict(config),
            "cells": [asdict(c) for c in config.cells],
        },
        "aggregates": _aggregate(rows),
        "failures": failures,
        "rows": len(rows),
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "results.csv", rows)
        (out / "report.json").write_text(json.dumps(report, indent=2))
        _write_figures(out, report["aggregates"])
    return report


def _write_csv(path: Path, rows: Sequence[Mapping]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def _write_figures(out: Path, aggregates: Mapping[str, Mapping]) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = list(aggregates)
    if not names:
        return
    means = [aggregates[n]["mean"] for n in names]
    stds = [aggregates[n]["std"] for n in names]
    fig, ax = plt.subplots(figsize=(max(6, len(names) * 1.2), 4))
    ax.bar(names, means, yerr=stds, capsize=4, color="#4878d0")
    ax.set_ylabel("mean sequential regret")
    ax.set_title("Regret by strategy")
    ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    fig.savefig(out / "regret_by_strategy.png", dpi=120)
    plt.close(fig)

    qtimes = [aggregates[n]["mean_query_time_s"] for n in names]
    fig, ax = plt.subplots(figsize=(max(6, len(names) * 1.2), 4))
    ax.bar(names, qtimes, color="#d65f5f")
    ax.set_ylabel("mean query time (s)")
    ax.set_title("Query generation time by strategy")
    ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    fig.savefig(out / "query_time_by_strategy.png", dpi=120)
    plt.close(fig)
