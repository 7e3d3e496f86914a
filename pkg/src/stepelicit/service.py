"""HTTP session service for human labeling, plus session persistence.

Each session wraps one elicitation engine.  The query endpoint is idempotent
until its label arrives; every interaction is appended to a JSON-lines file
so a session can be replayed bit-for-bit afterwards.
"""

from __future__ import annotations

import json
import random
import time
import uuid
from pathlib import Path
from typing import Iterable

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import puzzles
from .elicit import ElicitConfig, ElicitationEngine, Query, replay as replay_updates, ses_order
from .explain import ContextCache, ExplanationStep, optimal_step, ses
from .model import ClausalCSP, Fact, Instance

STRATEGIES = ("choice_perceptron", "machop")
EVAL_CHECKPOINTS = (10, 30, 50)


class SessionConfig(BaseModel):
    strategy: str
    normalization: str = "local"
    eta: float = 0.5
    T: int = 50
    selection: str = "offline_ses"
    seed: int = 0
    puzzles: list[str] = Field(default_factory=lambda: ["mini_a", "mini_b", "mini_c"])
    eval_puzzle: str = "mini_d"


class LabelBody(BaseModel):
    choice: str  # left | right | indifferent


class EvalLabelsBody(BaseModel):
    checkpoint: int
    labels: list[str]


def render_step(csp: ClausalCSP, given: Iterable[Fact], step: ExplanationStep) -> dict:
    """Server-side render payload: grid snapshot plus highlight sets."""
    doc = step.to_json(csp)
    if csp.kind == "sudoku":
        n = csp.n
        grid = [[0] * n for _ in range(n)]
        for f in given:
            r, c = f.var
            grid[r - 1][c - 1] = f.value
        gid_cells = {
            g.gid: sorted((r, c) for r, c in g.decision_vars) for g in csp.groups
        }
        doc["grid"] = grid
        doc["size"] = n
        for g in doc["groups"]:
            g["cells"] = [list(rc) for rc in gid_cells[g["id"]]]
    doc["kind"] = csp.kind
    return doc


class Session:
    def __init__(self, sid: str, config: SessionConfig, path: Path):
        self.sid = sid
        self.config = config
        self.path = path
        if config.strategy == "machop":
            base = ElicitConfig.machop
        else:
            base = ElicitConfig.choice_perceptron
        self.elicit_config = base(
            normalization=config.normalization,
            eta=config.eta,
            T=config.T,
            selection=config.selection,
            seed=config.seed,
        )
        pool = [puzzles.load(name) for name in config.puzzles]
        self.ctx_cache = ContextCache()
        self.engine = ElicitationEngine(pool, self.elicit_config, ctx_cache=self.ctx_cache)
        self.eval_instance = puzzles.load(config.eval_puzzle)
        self.snapshots: dict[int, tuple[list[float], list[float]]] = {}
        self.labels_seen = 0
        self.eval_pairs: dict[int, list[dict]] = {}
        self.eval_rng = random.Random(config.seed ^ 0x5E5510)
        self._append({"type": "create", "config": config.model_dump()})

    def _append(self, doc: dict) -> None:
        doc = dict(doc)
        doc["ts"] = time.time()
        with self.path.open("a") as fh:
            fh.write(json.dumps(doc) + "\n")

    # -------------------------------------------------------------- queries

    def current_query(self) -> Query:
        query = self.engine.next_query()
        if query is None:
            raise HTTPException(status_code=410, detail="training complete")
        return query

    def query_payload(self) -> dict:
        query = self.current_query()
        inst = query.instance
        return {
            "t": query.t,
            "T": self.config.T,
            "left": render_step(inst.csp, inst.given, query.y1.step),
            "right": render_step(inst.csp, inst.given, query.y2.step),
        }

    def apply_label(self, choice: str) -> dict:
        if self.engine.pending is None:
            raise HTTPException(status_code=409, detail="no pending query")
        mapping = {"left": "first", "right": "second", "indifferent": "indifferent"}
        if choice not in mapping:
            raise HTTPException(status_code=400, detail=f"unknown choice {choice!r}")
        entry = self.engine.submit_label(mapping[choice])
        self.labels_seen += 1
        if self.labels_seen in EVAL_CHECKPOINTS:
            self.snapshots[self.labels_seen] = (
                list(self.engine.w),
                list(self.engine.norm.ub),
            )
            self._append(
                {
                    "type": "snapshot",
                    "checkpoint": self.labels_seen,
                    "w": list(self.engine.w),
                    "ub": list(self.engine.norm.ub),
                }
            )
        self._append({"type": "label", "choice": choice, **entry})
        return {"t": entry["t"], "weights": entry["w"]}

    # ----------------------------------------------------------- evaluation

    def evaluation_pairs(self, checkpoint: int) -> list[dict]:
        if checkpoint not in EVAL_CHECKPOINTS or checkpoint not in self.snapshots:
            raise HTTPException(status_code=404, detail="checkpoint not available")
        if checkpoint in self.eval_pairs:
            return self.eval_pairs[checkpoint]
        w, ub = self.snapshots[checkpoint]
        inst = self.eval_instance
        order = ses_order(
            inst.csp, inst.given, inst.targets, ctx_cache=self.ctx_cache
        )
        pairs = []
        given = set(inst.given)
        for idx, target in enumerate(order):
            state = Instance(inst.csp, frozenset(given), frozenset({target}))
            learned = optimal_step(state, w, bounds=ub, cache=self.ctx_cache)
            ses_result = ses(self.ctx_cache.get(inst.csp, given, target))
            learned_side = self.eval_rng.choice(("left", "right"))
            left, right = (
                (learned.step, ses_result.step)
                if learned_side == "left"
                else (ses_result.step, learned.step)
            )
            pairs.append(
                {
                    "index": idx,
                    "left": render_step(inst.csp, given, left),
                    "right": render_step(inst.csp, given, right),
                    "learned_side": learned_side,
                }
            )
            given.add(target)
        self.eval_pairs[checkpoint] = pairs
        self._append(
            {
                "type": "eval_pairs",
                "checkpoint": checkpoint,
                "sides": [p["learned_side"] for p in pairs],
            }
        )
        return pairs

    def evaluation_payload(self, checkpoint: int) -> dict:
        pairs = self.evaluation_pairs(checkpoint)
        # the learned/ses assignment stays server-side
        visible = [
            {k: p[k] for k in ("index", "left", "right")} for p in pairs
        ]
        return {"checkpoint": checkpoint, "pairs": visible}

    def evaluation_labels(self, checkpoint: int, labels: list[str]) -> dict:
        pairs = self.eval_pairs.get(checkpoint)
        if pairs is None:
            raise HTTPException(status_code=404, detail="checkpoint not available")
        if len(labels) != len(pairs):
            raise HTTPException(
                status_code=400,
                detail=f"expected {len(pairs)} labels, got {len(labels)}",
            )
        counts = {"learned": 0, "ses": 0, "indifferent": 0}
        for label, pair in zip(labels, pairs):
            if label == "indifferent":
                counts["indifferent"] += 1
            elif label in ("left", "right"):
                counts["learned" if label == pair["learned_side"] else "ses"] += 1
            else:
                raise HTTPException(status_code=400, detail=f"unknown label {label!r}")
        total = len(labels)
        pct = {k: 100.0 * v / total for k, v in counts.items()}
        self._append(
            {"type": "eval_labels", "checkpoint": checkpoint, "labels": labels, "result": pct}
        )
        return pct


def create_app(sessions_dir: str | Path = "sessions") -> FastAPI:
    app = FastAPI(title="stepelicit")
    sessions: dict[str, Session] = {}
    root = Path(sessions_dir)
    root.mkdir(parents=True, exist_ok=True)

    def get_session(sid: str) -> Session:
        session = sessions.get(sid)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.post("/sessions", status_code=201)
    def create_session(config: SessionConfig):
        if config.strategy not in STRATEGIES:
            raise HTTPException(
                status_code=400, detail=f"unknown strategy {config.strategy!r}"
            )
        known = set(puzzles.bundled_names())
        for name in [*config.puzzles, config.eval_puzzle]:
            if name not in known and not Path(name).exists():
                raise HTTPException(status_code=400, detail=f"unknown puzzle {name!r}")
        sid = uuid.uuid4().hex
        sessions[sid] = Session(sid, config, root / f"{sid}.jsonl")
        return {"session_id": sid}

    @app.get("/sessions/{sid}/query")
    def get_query(sid: str):
        return get_session(sid).query_payload()

    @app.post("/sessions/{sid}/label")
    def post_label(sid: str, body: LabelBody):
        return get_session(sid).apply_label(body.choice)

    @app.get("/sessions/{sid}/evaluation")
    def get_evaluation(sid: str, checkpoint: int):
        return get_session(sid).evaluation_payload(checkpoint)

    @app.post("/sessions/{sid}/evaluation")
    def post_evaluation(sid: str, body: EvalLabelsBody):
        return get_session(sid).evaluation_labels(body.checkpoint, body.labels)

    return app


def replay_session_file(path: str | Path) -> dict:
    """Rebuild the weight trajectory of a persisted session from its log."""
    entries = []
    config_doc = None
    with Path(path).open() as fh:
        for line in fh:
            doc = json.loads(line)
            if doc["type"] == "create":
                config_doc = doc["config"]
            elif doc["type"] == "label":
                entries.append(doc)
    if config_doc is None:
        raise ValueError("session file has no create record")
    strategy = config_doc["strategy"]
    base = ElicitConfig.machop if strategy == "machop" else ElicitConfig.choice_perceptron
    cfg = base(
        normalization=config_doc["normalization"],
        eta=config_doc["eta"],
        T=config_doc["T"],
        selection=config_doc["selection"],
        seed=config_doc["seed"],
    )
    w = replay_updates(cfg, entries)
    logged = entries[-1]["w"] if entries else [1.0] * 12
    return {
        "final_weights": w,
        "logged_weights": logged,
        "match": w == logged,
        "labels": len(entries),
    }
