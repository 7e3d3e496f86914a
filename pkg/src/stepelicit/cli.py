"""Command-line entry points: experiments, explanations, service, replay."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import puzzles
from .evaluate import ExperimentConfig, run_experiment
from .explain import P, sequence
from .service import create_app, replay_session_file


def _cmd_experiment(args: argparse.Namespace) -> int:
    with open(args.config) as fh:
        config = ExperimentConfig.from_dict(json.load(fh))
    out_dir = Path(args.out)

    def progress(msg: str) -> None:
        print(msg, file=sys.stderr)

    report = run_experiment(config, out_dir=out_dir, progress=progress)
    print(f"wrote {out_dir / 'results.csv'}")
    print(f"wrote {out_dir / 'report.json'}")
    for name, stats in sorted(report["aggregates"].items()):
        print(f"{name}: mean regret {stats['mean']:.4f} over {stats['n']} runs")
    return 0


def _cmd_explain(args: argparse.Namespace) -> int:
    instance = puzzles.load(args.puzzle)
    if args.weights:
        with open(args.weights) as fh:
            w = json.load(fh)
        if not (isinstance(w, list) and len(w) == P):
            print(f"error: weights file must hold a list of {P} numbers", file=sys.stderr)
            return 2
    else:
        w = [1.0] * P
    steps = sequence(instance.csp, instance.given, instance.targets, w)
    for step in steps:
        print(json.dumps(step.to_json(instance.csp)))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    app = create_app(sessions_dir=args.sessions_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    result = replay_session_file(args.session_file)
    print(json.dumps(result, indent=2))
    return 0 if result["match"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stepelicit")
    sub = parser.add_subparsers(dest="command", required=True)

    exp = sub.add_parser("experiment", help="run preference-learning experiments")
    exp_sub = exp.add_subparsers(dest="experiment_command", required=True)
    run = exp_sub.add_parser("run", help="run an experiment sweep from a JSON config")
    run.add_argument("config", help="path to a JSON experiment config")
    run.add_argument("--out", default="results", help="output directory")
    run.set_defaults(func=_cmd_experiment)

    explain = sub.add_parser("explain", help="print a step-wise explanation sequence")
    explain.add_argument("puzzle", help="bundled puzzle name or path to a puzzle file")
    explain.add_argument("--weights", help="JSON file with 12 feature weights")
    explain.set_defaults(func=_cmd_explain)

    serve = sub.add_parser("serve", help="start the labeling session service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--sessions-dir", default="sessions")
    serve.set_defaults(func=_cmd_serve)

    replay = sub.add_parser("replay", help="re-derive final weights from a session log")
    replay.add_argument("session_file", help="path to a session .jsonl file")
    replay.set_defaults(func=_cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
