"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 backend failure, 3 data error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from . import analysis
from .agents.backends import BackendFailure
from .episode_log import EpisodeLog, MalformedLog
from .measures import MEASURE_IDS, MeasureVector
from .qd.search import (
    EvaluationFailed,
    QDConfig,
    episode_seeds,
    evaluate,
    load_config,
    make_backends,
    run_planqd,
    run_random_mutation,
)
from .sim.layout import LayoutError, load_layout

EXIT_OK, EXIT_USAGE, EXIT_BACKEND, EXIT_DATA = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = {"default": argparse.SUPPRESS} if suppress else {}
    p.add_argument("--config", help="YAML/JSON run configuration", **d)
    p.add_argument("--seed", type=int, help="master seed", **d)
    p.add_argument("--layout", help="shipped layout name or .layout path", **d)
    p.add_argument("--comm", action=argparse.BooleanOptionalAction, help="agents exchange messages", **d)
    p.add_argument("--backend-url", help="OpenAI-compatible API root (or KITCHENQD_BACKEND_URL)", **d)
    p.add_argument("--out-dir", help="where outputs go", **d)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kitchenqd", description=__doc__)
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, help_ in (("run-planqd", "directed prompt search"), ("run-random", "random-personality baseline")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--n-iter", type=int)
        p.add_argument("--batch-size", type=int)
        p.add_argument("--n-repeat", type=int)
        p.add_argument("--horizon", type=int)
        p.add_argument("--model", help="model name for the HTTP backend")
        p.add_argument("--no-logs", action="store_true", help="do not keep episode logs")
        p.add_argument("--stop-after", type=int, help="stop (resumably) after this many iterations")

    p = sub.add_parser("evaluate", parents=[common], help="evaluate one prompt list")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--prompts", nargs=2, metavar=("AGENT1", "AGENT2"))
    g.add_argument("--prompts-file", help="JSON list of two personality strings")
    p.add_argument("--n-repeat", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--model")

    p = sub.add_parser("analyze", help="coverage, QD score, trends, proportion tests")
    asub = p.add_subparsers(dest="analysis", required=True, parser_class=_Parser)
    for name in ("coverage", "qdscore"):
        a = asub.add_parser(name, parents=[common])
        a.add_argument("runs", nargs="+", help="run directories or point CSV files")
        a.add_argument("--names", nargs="+", help="labels for the runs")
        a.add_argument("--pair", nargs=2, metavar=("A", "B"), help="one measure pair instead of all")
    a = asub.add_parser("trends", parents=[common])
    a.add_argument("run_a", help="with-communication run: directory of episode logs or point CSV")
    a.add_argument("run_b", help="without-communication run")
    a = asub.add_parser("proptest", parents=[common])
    a.add_argument("successes", type=int)
    a.add_argument("n", type=int)
    a.add_argument("--p0", type=float, default=0.5)
    a.add_argument("--exact", action="store_true", help="exact binomial instead of z-test")

    p = sub.add_parser("heatmap", parents=[common], help="export a 2D heatmap")
    p.add_argument("points", help="run directory or point CSV")
    p.add_argument("--x", required=True, help="row measure")
    p.add_argument("--y", required=True, help="column measure")
    p.add_argument("--png", action="store_true")
    p.add_argument("--name", default="heatmap")

    p = sub.add_parser("replay", parents=[common], help="ASCII replay of an episode log")
    p.add_argument("log")

    p = sub.add_parser("validate-layout", parents=[common], help="check layout files")
    p.add_argument("layouts", nargs="+")
    return parser


def _config(args: argparse.Namespace) -> QDConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else QDConfig()
    url = getattr(args, "backend_url", None)
    over: dict[str, Any] = {
        "seed": getattr(args, "seed", None),
        "layout": getattr(args, "layout", None),
        "comm": getattr(args, "comm", None),
        "n_iter": getattr(args, "n_iter", None),
        "batch_size": getattr(args, "batch_size", None),
        "n_repeat": getattr(args, "n_repeat", None),
        "horizon": getattr(args, "horizon", None),
        "model": getattr(args, "model", None),
    }
    if url:
        over.update(backend="http", backend_url=url)
    if getattr(args, "no_logs", False):
        over["save_logs"] = False
    return cfg.with_overrides(**over)


def _out_dir(args: argparse.Namespace, default: str) -> Path:
    return Path(getattr(args, "out_dir", None) or default)


def _print(obj: Any) -> None:
    print(json.dumps(obj, indent=1, sort_keys=True))


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _config(args)
    out = _out_dir(args, f"runs/{args.command[4:]}-{cfg.layout}-s{cfg.seed}")
    fn = run_planqd if args.command == "run-planqd" else run_random_mutation
    archive = fn(cfg, out_dir=out, stop_after=args.stop_after)
    _print({"out_dir": str(out), "elites": len(archive), "coverage": archive.coverage, "qd_score": archive.qd_score})
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _config(args)
    if args.prompts_file:
        prompts = json.loads(Path(args.prompts_file).read_text())
        if not (isinstance(prompts, list) and len(prompts) == 2 and all(isinstance(p, str) for p in prompts)):
            raise MalformedLog("prompts file must hold a JSON list of two strings")
    else:
        prompts = list(args.prompts)
    agents, _ = make_backends(cfg)
    ev = evaluate(prompts, cfg, agents, episode_seeds(cfg.seed, 0, cfg.n_repeat))
    out = _out_dir(args, "runs/evaluate")
    (out / "logs").mkdir(parents=True, exist_ok=True)
    for r, log in enumerate(ev.logs):
        log.save(out / "logs" / f"r{r}.jsonl")
    result = {
        "prompts": prompts, "seeds": ev.seeds, "objective": ev.objective,
        "measures": ev.measures, "repeats": [v.as_dict() for v in ev.repeats],
    }
    (out / "evaluation.json").write_text(json.dumps(result, indent=1, sort_keys=True) + "\n")
    _print(result)
    return EXIT_OK


def _load_trend_run(path: str) -> list:
    p = Path(path)
    if p.is_dir():
        files = sorted(p.rglob("*.jsonl"))
        logs = [EpisodeLog.load(f) for f in files if f.name != "evaluations.jsonl"]
        if logs:
            return logs
        return [MeasureVector.from_dict(m) for m in analysis.load_points(p).measures]
    return [MeasureVector.from_dict(m) for m in analysis.load_points(p).measures]


def cmd_analyze(args: argparse.Namespace) -> int:
    if args.analysis == "proptest":
        p = analysis.proportion_test(args.successes, args.n, args.p0, "exact" if args.exact else "z")
        _print({"successes": args.successes, "n": args.n, "p0": args.p0,
                "method": "exact" if args.exact else "z", "p_value": p})
        return EXIT_OK
    if args.analysis == "trends":
        table = analysis.trend_table(_load_trend_run(args.run_a), _load_trend_run(args.run_b))
        _print({m: analysis.format_percent(v) for m, v in table.items()})
        return EXIT_OK

    names = args.names or [Path(r).name or r for r in args.runs]
    if len(names) != len(args.runs) or len(set(names)) != len(names):
        raise UsageError("--names must give one distinct label per run")
    runs = {n: analysis.load_points(r) for n, r in zip(names, args.runs)}
    key = "coverage" if args.analysis == "coverage" else "qd_score"
    fn = analysis.coverage if key == "coverage" else analysis.qd_score
    if args.pair:
        proj = analysis.Projection.of(*args.pair)
        _print({n: fn(ps, proj) for n, ps in runs.items()})
        return EXIT_OK
    report = analysis.pairwise_coverage_report(runs)
    text = report.to_csv()
    if getattr(args, "out_dir", None):
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "pairwise.csv").write_text(text)
    means = report.group_means()
    _print({g: {k: v for k, v in d.items() if k.startswith(key) or k == "pairs"} for g, d in means.items()})
    return EXIT_OK


def cmd_heatmap(args: argparse.Namespace) -> int:
    for m in (args.x, args.y):
        if m not in MEASURE_IDS:
            raise UsageError(f"unknown measure {m!r}; choose from {', '.join(MEASURE_IDS)}")
    if args.x == args.y:
        raise UsageError("--x and --y must differ")
    points = analysis.load_points(args.points)
    proj = analysis.Projection.of(args.x, args.y)
    out = _out_dir(args, ".") / f"{args.name}.csv"
    analysis.export_heatmap(points, proj, out, png=args.png)
    _print({"csv": str(out), "meta": str(out.with_suffix(".json")), "coverage": analysis.coverage(points, proj)})
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    sys.stdout.write(analysis.replay(args.log))
    return EXIT_OK


def cmd_validate_layout(args: argparse.Namespace) -> int:
    bad = 0
    for path in args.layouts:
        try:
            layout = load_layout(path)
            print(f"{path}: ok ({layout.height}x{layout.width})")
        except (LayoutError, OSError) as exc:
            bad += 1
            print(f"{path}: {type(exc).__name__}: {exc}")
    return EXIT_DATA if bad else EXIT_OK


COMMANDS = {
    "run-planqd": cmd_run,
    "run-random": cmd_run,
    "evaluate": cmd_evaluate,
    "analyze": cmd_analyze,
    "heatmap": cmd_heatmap,
    "replay": cmd_replay,
    "validate-layout": cmd_validate_layout,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"kitchenqd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BackendFailure, EvaluationFailed) as exc:
        print(f"kitchenqd: backend failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (OSError, KeyError, ValueError) as exc:
        print(f"kitchenqd: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
