"""Command-line front end: solve one instance, tune a scale, run a suite, convert maps.

Exit codes: 0 on success, 1 when the solver or tuner comes back empty-handed
(timeout, exhausted tree, or no successful tuning evaluation), 2 on usage or
file-format errors.  A config file of key=value lines can preload any flag of
the chosen subcommand; explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .bench import aggregate, desk_suite, plot_data, rows_to_csv, run_suite, summary_to_csv
from .cbs import Failure, Solution, SolveConfig, serialize_solution, solve
from .graph import build_grid_graph, discretize
from .mapio import ParseError, make_instance, parse_map, parse_roadmap, parse_scen, serialize_roadmap
from .tuning import TuneConfig, format_tune_report, tune_graph

__all__ = ["main"]


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}") from None


def _load_instance(args):
    """Parse map/scen flags into an instance on the real-weighted graph."""
    entries = parse_scen(_read(args.scen))
    if args.roadmap is not None:
        source = parse_roadmap(_read(args.roadmap))
    else:
        source = parse_map(_read(args.map))
    return make_instance(source, entries, args.agents, k=args.k)


def _solve_config(args) -> SolveConfig:
    return SolveConfig(
        disjoint=args.disjoint,
        prioritize=not args.no_pc,
        lazy_pc=args.lazy_pc,
        timeout=args.timeout,
        horizon=args.horizon,
    )


def _cmd_solve(args) -> int:
    inst = _load_instance(args)
    s = args.s
    if args.baseline:
        s = 1.0
    if args.tune:
        cfg = TuneConfig(
            s_min=args.s_min, s_max=args.s_max, budget=args.budget,
            population=args.population, generations=args.generations,
            delta=args.delta, eval_timeout=args.eval_timeout,
        )
        tuned = tune_graph(inst, cfg, solve_config=_solve_config(args), seed=args.seed)
        if tuned.best_s is None:
            print("tuning found no successful evaluation", file=sys.stderr)
            return 1
        s = tuned.best_s
        print(f"s_tuned={s!r}")
    if s is None:
        s = 1.0
    int_inst = replace(inst, graph=discretize(inst.graph, s))
    result = solve(int_inst, _solve_config(args))
    if isinstance(result, Solution):
        text = serialize_solution(result)
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        print(f"makespan={result.makespan}")
        _print_stats(result.stats, s)
        return 0
    assert isinstance(result, Failure)
    print(f"failure: {result.reason}", file=sys.stderr)
    _print_stats(result.stats, s)
    return 1


def _print_stats(stats, s: float) -> None:
    print(f"s_used={s!r}")
    print(f"nodes_generated={stats.nodes_generated}")
    print(f"nodes_expanded={stats.nodes_expanded}")
    print(f"low_level_calls={stats.low_level_calls}")
    print(f"wall_time={stats.wall_time!r}")


def _cmd_tune(args) -> int:
    inst = _load_instance(args)
    cfg = TuneConfig(
        s_min=args.s_min, s_max=args.s_max, budget=args.budget,
        population=args.population, generations=args.generations,
        delta=args.delta, eval_timeout=args.eval_timeout,
    )
    result = tune_graph(inst, cfg, solve_config=_solve_config(args), seed=args.seed)
    report = format_tune_report(result)
    if args.out:
        Path(args.out).write_text(report)
    else:
        sys.stdout.write(report)
    if result.best_s is None:
        print("tuning found no successful evaluation", file=sys.stderr)
        return 1
    print(f"best_s={result.best_s!r}")
    return 0


def _cmd_bench(args) -> int:
    spec = desk_suite(
        seed=args.seed,
        timeout=args.timeout,
        modes=tuple(args.modes),
        agent_counts=tuple(args.agents),
        ks=tuple(args.ks),
        scenarios_per_case=args.scenarios,
        workers=args.workers,
    )
    if args.fixed_s is not None:
        spec = replace(spec, fixed_s=args.fixed_s)
    result = run_suite(spec)
    summaries = aggregate(result.rows)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "results.csv").write_text(rows_to_csv(result.rows))
    (out_dir / "summary.csv").write_text(summary_to_csv(summaries))
    (out_dir / "success_rate.dat").write_text(plot_data(summaries, "success_rate"))
    (out_dir / "runtime.dat").write_text(plot_data(summaries, "mean_runtime_s"))
    for rec in result.tuning:
        print(
            f"tuned map={rec.map} k={rec.k} s={rec.s!r} wall_time={rec.wall_time!r} "
            f"evaluations={rec.evaluations} fallback={'true' if rec.fallback else 'false'}"
        )
    sys.stdout.write(summary_to_csv(summaries))
    print(f"wrote {out_dir / 'results.csv'}")
    return 0


def _cmd_convert(args) -> int:
    grid = parse_map(_read(args.map))
    text = serialize_roadmap(build_grid_graph(grid, args.k))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _add_map_flags(p: argparse.ArgumentParser, need_agents: bool = True) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--map", help="grid map file (Moving AI layout)")
    src.add_argument("--roadmap", help="roadmap graph file")
    p.add_argument("--scen", required=True, help="scenario file")
    p.add_argument("--k", type=int, default=3, choices=(3, 4, 5), help="grid neighborhood exponent")
    if need_agents:
        p.add_argument("--agents", type=int, required=True, help="number of agents (scenario prefix)")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--disjoint", action="store_true", help="split vertex conflicts disjointly")
    p.add_argument("--no-pc", action="store_true", help="disable conflict prioritization")
    p.add_argument("--lazy-pc", type=int, default=8, help="conflicts classified per node")
    p.add_argument("--timeout", type=float, default=None, help="solver budget in seconds")
    p.add_argument("--horizon", type=int, default=None, help="latest allowed arrival time")


def _add_tune_flags(p: argparse.ArgumentParser, require_range: bool) -> None:
    p.add_argument("--s-min", type=float, required=require_range, default=None if require_range else 0.5)
    p.add_argument("--s-max", type=float, required=require_range, default=None if require_range else 2.5)
    p.add_argument("--budget", type=int, default=25, help="true evaluations")
    p.add_argument("--population", type=int, default=20)
    p.add_argument("--generations", type=int, default=30)
    p.add_argument("--delta", type=float, default=0.1, help="confidence parameter")
    p.add_argument("--eval-timeout", type=float, default=None, help="per-evaluation solver budget")


def _build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="intmapf", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)
    by_name: dict[str, argparse.ArgumentParser] = {}

    p = subs.add_parser("solve", help="solve one instance")
    _add_map_flags(p)
    _add_solver_flags(p)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--s", type=float, default=None, help="discretization scale")
    mode.add_argument("--baseline", action="store_true", help="use s = 1")
    mode.add_argument("--tune", action="store_true", help="tune s before solving")
    _add_tune_flags(p, require_range=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write the solution here instead of stdout")
    p.add_argument("--config", default=None, help="key=value defaults file")
    p.set_defaults(func=_cmd_solve)
    by_name["solve"] = p

    p = subs.add_parser("tune", help="tune the discretization scale")
    _add_map_flags(p)
    _add_solver_flags(p)
    _add_tune_flags(p, require_range=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write the report CSV here")
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_tune)
    by_name["tune"] = p

    p = subs.add_parser("bench", help="run the bundled desk-scale suite")
    p.add_argument("--out-dir", default="bench-out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timeout", type=float, default=10.0)
    p.add_argument("--modes", nargs="+", default=["baseline", "tuned"], choices=("fixed", "baseline", "tuned"))
    p.add_argument("--fixed-s", type=float, default=None)
    p.add_argument("--agents", type=int, nargs="+", default=[2, 4, 8, 12, 16])
    p.add_argument("--ks", type=int, nargs="+", default=[3, 4], choices=(3, 4, 5))
    p.add_argument("--scenarios", type=int, default=4, help="scenario files per map case")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_bench)
    by_name["bench"] = p

    p = subs.add_parser("convert", help="convert a grid map to roadmap text")
    p.add_argument("--map", required=True)
    p.add_argument("--k", type=int, default=3, choices=(3, 4, 5))
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_convert)
    by_name["convert"] = p
    return parser, by_name


def _apply_config(parser: argparse.ArgumentParser, sub: argparse.ArgumentParser, path: str) -> None:
    """Turn key=value lines into subcommand defaults; flags still override."""
    text = _read(path)
    by_dest = {a.dest: a for a in sub._actions}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            parser.error(f"config {path} line {lineno}: expected key=value, got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        dest = key.replace("-", "_")
        action = by_dest.get(dest)
        if action is None or dest in ("help", "config", "func", "command"):
            parser.error(f"config {path} line {lineno}: unknown key {key!r}")
        sub.set_defaults(**{dest: _coerce(parser, action, key, val, path, lineno)})
        action.required = False  # a config-provided value satisfies a required flag


def _coerce(parser, action, key, val, path, lineno):
    try:
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            low = val.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(f"not a boolean: {val!r}")
            return low in ("true", "1", "yes")
        conv = action.type if action.type is not None else str
        if action.nargs in ("+", "*"):
            items = [conv(v) for v in val.replace(",", " ").split()]
            if action.choices is not None:
                for item in items:
                    if item not in action.choices:
                        raise ValueError(f"invalid choice {item!r}")
            return items
        out = conv(val)
        if action.choices is not None and out not in action.choices:
            raise ValueError(f"invalid choice {out!r}")
        return out
    except ValueError as exc:
        parser.error(f"config {path} line {lineno}: bad value for {key!r}: {exc}")


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, by_name = _build_parser()
    if argv and argv[0] in by_name and "--config" in argv:
        try:
            cfg_path = argv[argv.index("--config") + 1]
        except IndexError:
            parser.error("--config needs a file path")
        try:
            _apply_config(parser, by_name[argv[0]], cfg_path)
        except ParseError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
