"""Batch experiment harness: run the solver across maps, agent counts, and modes.

A suite is the Cartesian product of map cases, agent counts, scenario files,
and solve modes.  Modes fix how the discretization scale is chosen: 'fixed'
uses the configured scale, 'baseline' uses s = 1, 'tuned' runs the tuner once
per map case (on its first scenario at the largest agent count) and reuses the
winner.  Each row times exactly one solve call; failures become rows with
success=false rather than aborting the suite.  Aggregation reports success
rate, mean runtime over successes, and makespan quartiles per configuration.
"""

from __future__ import annotations

import math
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .cbs import Failure, Solution, SolveConfig, solve, validate_solution
from .graph import (
    GridSpec,
    RealGraph,
    build_grid_graph,
    cell_vertex_ids,
    discretization_error,
    discretize,
)
from .mapio import Instance, ScenarioEntry
from .tuning import TuneConfig, tune_graph

__all__ = [
    "MapCase",
    "ExperimentSpec",
    "ResultRow",
    "TuningRecord",
    "SuiteResult",
    "SummaryRow",
    "run_suite",
    "aggregate",
    "rows_to_csv",
    "summary_to_csv",
    "plot_data",
    "desk_suite",
]

ROW_HEADER = "map,k,n_agents,scenario,mode,success,makespan,runtime_s,ct_nodes,ll_calls,s_used,error"
SUMMARY_HEADER = "map,k,mode,n_agents,success_rate,mean_runtime_s,makespan_q1,makespan_median,makespan_q3"
MODES = ("fixed", "baseline", "tuned")


@dataclass(frozen=True)
class MapCase:
    """One map under one neighborhood: its graph plus scenario entry lists."""

    name: str
    graph: RealGraph
    scenarios: tuple[tuple[ScenarioEntry, ...], ...]
    grid: GridSpec | None = None  # set for grid maps, None for roadmaps
    k: int | None = None


@dataclass(frozen=True)
class ExperimentSpec:
    cases: tuple[MapCase, ...]
    agent_counts: tuple[int, ...]
    modes: tuple[str, ...]
    fixed_s: float = 1.0
    timeout: float = 10.0
    solver: SolveConfig = field(default_factory=SolveConfig)
    tune: TuneConfig | None = None
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        for m in self.modes:
            if m not in MODES:
                raise ValueError(f"unknown mode {m!r}; choose from {MODES}")
        if not self.cases or not self.agent_counts or not self.modes:
            raise ValueError("suite needs at least one case, agent count, and mode")


@dataclass(frozen=True)
class ResultRow:
    map: str
    k: int | None
    n_agents: int
    scenario: int
    mode: str
    success: bool
    makespan: int | None
    runtime_s: float
    ct_nodes: int
    ll_calls: int
    s_used: float
    error: float | None


@dataclass(frozen=True)
class TuningRecord:
    """Cost and outcome of the per-case tuning run, reported apart from the rows."""

    map: str
    k: int | None
    s: float
    wall_time: float
    evaluations: int
    fallback: bool  # True when tuning never succeeded and s fell back to 1


@dataclass(frozen=True)
class SuiteResult:
    rows: tuple[ResultRow, ...]
    tuning: tuple[TuningRecord, ...]


@dataclass(frozen=True)
class SummaryRow:
    map: str
    k: int | None
    mode: str
    n_agents: int
    success_rate: float  # percent
    mean_runtime_s: float | None
    makespan_q1: float | None
    makespan_median: float | None
    makespan_q3: float | None


def _case_instance(case: MapCase, scenario: int, n_agents: int) -> Instance:
    entries = case.scenarios[scenario][:n_agents]
    if len(entries) < n_agents:
        raise ValueError(
            f"{case.name} scenario {scenario} has {len(entries)} entries, needs {n_agents}"
        )
    if case.grid is not None:
        ids = cell_vertex_ids(case.grid)
        starts = tuple(ids[e.start] for e in entries)
        goals = tuple(ids[e.goal] for e in entries)
    else:
        starts = tuple(e.start[0] for e in entries)
        goals = tuple(e.goal[0] for e in entries)
    return Instance(case.graph, starts, goals)


def _run_row(case: MapCase, scenario: int, n_agents: int, mode: str, s_used: float, solver: SolveConfig) -> ResultRow:
    real_inst = _case_instance(case, scenario, n_agents)
    inst = replace(real_inst, graph=discretize(case.graph, s_used))
    t0 = _time.perf_counter()
    result = solve(inst, solver)
    rt = _time.perf_counter() - t0
    if isinstance(result, Solution):
        bad = validate_solution(inst, result.plans)
        if bad:
            raise RuntimeError(
                f"solver returned an invalid solution on {case.name} scenario {scenario}: {bad[0].detail}"
            )
        err = _path_error(case.graph, s_used, result.plans)
        return ResultRow(
            case.name, case.k, n_agents, scenario, mode, True, result.makespan, rt,
            result.stats.nodes_expanded, result.stats.low_level_calls, s_used, err,
        )
    assert isinstance(result, Failure)
    return ResultRow(
        case.name, case.k, n_agents, scenario, mode, False, None, rt,
        result.stats.nodes_expanded, result.stats.low_level_calls, s_used, None,
    )


def _path_error(g: RealGraph, s: float, plans) -> float:
    return discretization_error(g, s, [p.vertices() for p in plans])


def _worker(payload):
    idx, case, scenario, n_agents, mode, s_used, solver = payload
    return idx, _run_row(case, scenario, n_agents, mode, s_used, solver)


def _tuned_scale(case: MapCase, spec: ExperimentSpec) -> TuningRecord:
    cfg = spec.tune
    if cfg is None:
        max_w = max(w for _, _, w in case.graph.edges)
        cfg = TuneConfig(
            s_min=0.5,
            s_max=max(2.5, max_w),
            budget=6,
            population=12,
            generations=10,
            eval_timeout=min(3.0, spec.timeout),
            restarts=4,
        )
    elif cfg.eval_timeout is None:
        cfg = replace(cfg, eval_timeout=min(3.0, spec.timeout))
    n = min(max(spec.agent_counts), len(case.scenarios[0]))
    inst = _case_instance(case, 0, n)
    t0 = _time.perf_counter()
    result = tune_graph(inst, cfg, solve_config=spec.solver, seed=spec.seed)
    wall = _time.perf_counter() - t0
    fallback = result.best_s is None
    s = 1.0 if fallback else result.best_s
    return TuningRecord(case.name, case.k, s, wall, len(result.observations), fallback)


def run_suite(spec: ExperimentSpec) -> SuiteResult:
    """Run every (case, agent count, scenario, mode) cell and collect rows in order."""
    tuning: list[TuningRecord] = []
    tuned_s: dict[tuple[str, int | None], float] = {}
    if "tuned" in spec.modes:
        for case in spec.cases:
            rec = _tuned_scale(case, spec)
            tuning.append(rec)
            tuned_s[(case.name, case.k)] = rec.s
    solver = replace(spec.solver, timeout=spec.timeout)
    tasks = []
    for case in spec.cases:
        for n_agents in spec.agent_counts:
            for scenario in range(len(case.scenarios)):
                for mode in spec.modes:
                    if mode == "fixed":
                        s_used = spec.fixed_s
                    elif mode == "baseline":
                        s_used = 1.0
                    else:
                        s_used = tuned_s[(case.name, case.k)]
                    tasks.append((len(tasks), case, scenario, n_agents, mode, s_used, solver))
    rows: list[ResultRow | None] = [None] * len(tasks)
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            for idx, row in pool.map(_worker, tasks):
                rows[idx] = row
    else:
        for payload in tasks:
            idx, row = _worker(payload)
            rows[idx] = row
    assert all(r is not None for r in rows)
    return SuiteResult(tuple(rows), tuple(tuning))


def aggregate(rows: Sequence[ResultRow]) -> list[SummaryRow]:
    """Success rate, mean runtime over successes, makespan quartiles per config."""
    groups: dict[tuple, list[ResultRow]] = {}
    for r in rows:
        groups.setdefault((r.map, r.k, r.mode, r.n_agents), []).append(r)
    out = []
    for (name, k, mode, n_agents), members in groups.items():
        wins = [r for r in members if r.success]
        rate = 100.0 * len(wins) / len(members)
        if wins:
            mean_rt = float(np.mean([r.runtime_s for r in wins]))
            q1, q2, q3 = (
                float(q) for q in np.percentile([r.makespan for r in wins], [25, 50, 75])
            )
        else:
            mean_rt = q1 = q2 = q3 = None
        out.append(SummaryRow(name, k, mode, n_agents, rate, mean_rt, q1, q2, q3))
    return out


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    lines = [ROW_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                _cell(v)
                for v in (
                    r.map, r.k, r.n_agents, r.scenario, r.mode, r.success,
                    r.makespan, r.runtime_s, r.ct_nodes, r.ll_calls, r.s_used, r.error,
                )
            )
        )
    return "\n".join(lines) + "\n"


def summary_to_csv(summaries: Sequence[SummaryRow]) -> str:
    lines = [SUMMARY_HEADER]
    for s in summaries:
        cells = [
            _cell(s.map), _cell(s.k), _cell(s.mode), _cell(s.n_agents), _cell(s.success_rate),
        ]
        for v in (s.mean_runtime_s, s.makespan_q1, s.makespan_median, s.makespan_q3):
            cells.append("--" if v is None else _cell(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def plot_data(summaries: Sequence[SummaryRow], metric: str = "success_rate") -> str:
    """Plot-tool-agnostic 'x y series' lines: x = agent count, y = the metric."""
    if metric not in ("success_rate", "mean_runtime_s"):
        raise ValueError(f"unknown metric {metric!r}")
    lines = []
    for s in summaries:
        y = getattr(s, metric)
        if y is None:
            continue
        tag = s.map if s.k is None else f"{s.map}-k{s.k}"
        lines.append(f"{s.n_agents} {y} {tag}-{s.mode}")
    return "\n".join(lines) + ("\n" if lines else "")


def _octile(a: tuple[int, int], b: tuple[int, int]) -> float:
    dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
    return max(dx, dy) + (math.sqrt(2.0) - 1.0) * min(dx, dy)


def _largest_component(grid: GridSpec) -> list[tuple[int, int]]:
    # 4-connected flood fill is enough to find one well-connected region
    seen: set[tuple[int, int]] = set()
    best: list[tuple[int, int]] = []
    for y in range(grid.height):
        for x in range(grid.width):
            if not grid.is_passable(x, y) or (x, y) in seen:
                continue
            comp = [(x, y)]
            seen.add((x, y))
            queue = [(x, y)]
            while queue:
                cx, cy = queue.pop()
                for nx, ny in ((cx + 1, cy), (cx - 1, cy), (cx, cy + 1), (cx, cy - 1)):
                    if grid.is_passable(nx, ny) and (nx, ny) not in seen:
                        seen.add((nx, ny))
                        comp.append((nx, ny))
                        queue.append((nx, ny))
            if len(comp) > len(best):
                best = comp
    return best


def _grid_scenarios(
    grid: GridSpec,
    name: str,
    rng: np.random.Generator,
    count: int,
    entries_each: int,
) -> tuple[tuple[ScenarioEntry, ...], ...]:
    cells = sorted(_largest_component(grid))
    if len(cells) < 2 * entries_each:
        raise ValueError(f"{name}: component of {len(cells)} cells cannot seat {entries_each} agents")
    scenarios = []
    for _ in range(count):
        perm = rng.permutation(len(cells))
        starts = [cells[i] for i in perm[:entries_each]]
        goals = [cells[i] for i in perm[entries_each : 2 * entries_each]]
        entries = tuple(
            ScenarioEntry(0, name, grid.width, grid.height, s, g, _octile(s, g))
            for s, g in zip(starts, goals)
        )
        scenarios.append(entries)
    return tuple(scenarios)


def desk_suite(
    *,
    seed: int = 0,
    timeout: float = 10.0,
    modes: tuple[str, ...] = ("baseline", "tuned"),
    agent_counts: tuple[int, ...] = (2, 4, 8, 12, 16),
    ks: tuple[int, ...] = (3, 4),
    scenarios_per_case: int = 4,
    workers: int = 1,
) -> ExperimentSpec:
    """Small deterministic suite: an empty 16x16 map and a ~10% random 32x32 map.

    Scenario starts and goals are drawn from the largest connected region with
    disjoint start and goal cell sets, so every single-agent subproblem is
    solvable.  Entry counts match the largest agent count requested.
    """
    rng = np.random.default_rng(seed)
    empty = GridSpec(16, 16, tuple([True] * 256))
    blocked = rng.random(32 * 32) < 0.10
    random32 = GridSpec(32, 32, tuple(bool(not b) for b in blocked))
    entries_each = max(agent_counts)
    cases = []
    for grid, name in ((empty, "empty-16-16"), (random32, "random-32-32")):
        for k in ks:
            case_rng = np.random.default_rng(seed * 7919 + k * 101 + grid.width)
            cases.append(
                MapCase(
                    name=name,
                    graph=build_grid_graph(grid, k),
                    scenarios=_grid_scenarios(grid, name, case_rng, scenarios_per_case, entries_each),
                    grid=grid,
                    k=k,
                )
            )
    return ExperimentSpec(
        cases=tuple(cases),
        agent_counts=agent_counts,
        modes=modes,
        timeout=timeout,
        seed=seed,
        workers=workers,
    )
