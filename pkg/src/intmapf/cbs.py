"""Conflict-based search over integer-weighted graphs with timed traversals.

The high level runs best-first search on a binary constraint tree.  Each node
holds a constraint set plus one optimal plan per agent under it; expanding a
node picks one conflict between two plans and splits on it.  A vertex conflict
splits into two negative vertex constraints, or, with disjoint splitting
enabled, into a positive constraint for one agent (every other agent then
inherits it as a negative) and the matching negative.  An edge conflict always
splits into two negative edge-interval constraints, each handing one agent the
other's traversal window.

Conflicts found at node creation are classified by how the two candidate
children's costs move: both strictly above the node's cost is cardinal, one is
semi-cardinal, none is non-cardinal.  Expansion prefers cardinal conflicts, so
the classification work (replanning both branches up front, per-conflict)
doubles as child construction.

Occupancy follows the plan steps: a step pair (u, t_a) -> (v, t_b) occupies u
at t_a, the edge during the open span (t_a, t_b), and v at t_b; after its last
step an agent sits on its goal forever.  Two opposite traversals of one edge
conflict exactly when their spans share an integer time point.
"""

from __future__ import annotations

import heapq
import math
import time as _time
from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

from .graph import IntGraph, dijkstra
from .mapio import Instance
from .sipp import EMPTY_CONSTRAINTS, ConstraintSet, TimedPlan, sipp_plan

__all__ = [
    "Conflict",
    "Branch",
    "ConflictNode",
    "CTNode",
    "SearchStats",
    "Solution",
    "Failure",
    "SolveConfig",
    "Violation",
    "detect_conflicts",
    "make_branch_constraints",
    "classify_conflict",
    "solve",
    "validate_solution",
    "serialize_solution",
]

Traversal = tuple[int, int, int, int]  # (from, to, depart, arrive)


@dataclass(frozen=True)
class Conflict:
    """First collision between two agents: at a vertex, or on one edge head-on."""

    kind: str  # 'vertex' | 'edge'
    agents: tuple[int, int]
    time: int  # earliest step at which the collision is visible
    vertex: int | None = None
    trav_i: Traversal | None = None
    trav_j: Traversal | None = None


@dataclass(frozen=True)
class Branch:
    """One child candidate: added constraints, replanned plans, resulting cost."""

    delta: ConstraintSet
    plans: dict[int, TimedPlan]
    cost: float  # math.inf when some constrained agent has no plan


@dataclass(frozen=True)
class ConflictNode:
    """A conflict with both branch candidates built and its priority class."""

    conflict: Conflict
    branches: tuple[Branch, ...]
    pc_class: str  # 'cardinal' | 'semi' | 'non'


@dataclass(frozen=True)
class CTNode:
    constraints: ConstraintSet
    plans: tuple[TimedPlan, ...]
    cost: int
    soc: int
    conflicts: tuple[Conflict, ...]
    options: tuple[ConflictNode, ...]  # classified prefix of conflicts


@dataclass
class SearchStats:
    nodes_generated: int = 0
    nodes_expanded: int = 0
    low_level_calls: int = 0
    wall_time: float = 0.0


@dataclass(frozen=True)
class Solution:
    plans: tuple[TimedPlan, ...]
    makespan: int
    stats: SearchStats


@dataclass(frozen=True)
class Failure:
    reason: str  # 'timeout' | 'exhausted'
    stats: SearchStats


@dataclass(frozen=True)
class SolveConfig:
    disjoint: bool = False
    prioritize: bool = True
    lazy_pc: int | None = 8  # classify at most this many conflicts per node
    timeout: float | None = None  # seconds
    horizon: int | None = None


@dataclass(frozen=True)
class Violation:
    kind: str  # 'start' | 'goal' | 'edge' | 'timing' | 'vertex-conflict' | 'edge-conflict'
    agents: tuple[int, ...]
    time: int | None
    detail: str


def _timeline(plan: TimedPlan, t_max: int) -> tuple[list[int | None], list[Traversal | None]]:
    """Per-step occupancy: vertex occupied at t, and traversal active at t, if any."""
    vloc: list[int | None] = [None] * (t_max + 1)
    act: list[Traversal | None] = [None] * (t_max + 1)
    steps = plan.steps
    for (u, ta), (v, tb) in zip(steps, steps[1:]):
        if u == v:
            for t in range(ta, tb + 1):
                vloc[t] = u
        else:
            vloc[ta] = u
            vloc[tb] = v
            trav = (u, v, ta, tb)
            for t in range(ta, tb):
                act[t] = trav
    last_v, last_t = steps[-1]
    for t in range(last_t, t_max + 1):
        vloc[t] = last_v
    return vloc, act


def detect_conflicts(plans: Sequence[TimedPlan], t_max: int | None = None) -> list[Conflict]:
    """Earliest conflict for every agent pair, sorted by (time, agents).

    Vertex conflicts take precedence over edge conflicts at the same step.
    Agents sit on their goals after finishing, so late arrivals collide with
    parked agents.
    """
    if not plans:
        raise ValueError("detect_conflicts needs at least one plan")
    horizon = max(p.cost for p in plans)
    if t_max is None:
        t_max = horizon
    if t_max < horizon:
        raise ValueError(f"t_max {t_max} is below the longest plan cost {horizon}")
    lines = [_timeline(p, t_max) for p in plans]
    found: list[Conflict] = []
    n = len(plans)
    for i in range(n):
        vloc_i, act_i = lines[i]
        for j in range(i + 1, n):
            vloc_j, act_j = lines[j]
            for t in range(t_max + 1):
                vi, vj = vloc_i[t], vloc_j[t]
                if vi is not None and vi == vj:
                    found.append(Conflict("vertex", (i, j), t, vertex=vi))
                    break
                ai, aj = act_i[t], act_j[t]
                if ai is not None and aj is not None and ai[0] == aj[1] and ai[1] == aj[0]:
                    # opposite directions active at one step always overlap
                    found.append(Conflict("edge", (i, j), t, trav_i=ai, trav_j=aj))
                    break
    found.sort(key=lambda c: (c.time, c.agents))
    return found


def make_branch_constraints(conflict: Conflict, disjoint: bool) -> tuple[ConstraintSet, ConstraintSet]:
    """The two constraint bundles a conflict splits into.

    Vertex conflicts: disjoint yields (positive for agent i, negative for i);
    otherwise one negative per agent.  Edge conflicts always yield two
    negative interval constraints, each blocking one agent's directed edge
    for the other agent's traversal window.
    """
    i, j = conflict.agents
    if conflict.kind == "vertex":
        assert conflict.vertex is not None
        v, t = conflict.vertex, conflict.time
        if disjoint:
            return (
                ConstraintSet(pos_vertex=frozenset({(i, v, t)})),
                ConstraintSet(neg_vertex=frozenset({(i, v, t)})),
            )
        return (
            ConstraintSet(neg_vertex=frozenset({(i, v, t)})),
            ConstraintSet(neg_vertex=frozenset({(j, v, t)})),
        )
    assert conflict.trav_i is not None and conflict.trav_j is not None
    ui, vi, di, ai = conflict.trav_i
    uj, vj, dj, aj = conflict.trav_j
    return (
        ConstraintSet(neg_edge=frozenset({(i, (ui, vi), (dj, aj))})),
        ConstraintSet(neg_edge=frozenset({(j, (uj, vj), (di, ai))})),
    )


def classify_conflict(parent_cost: float, branch_costs: Sequence[float]) -> str:
    """'cardinal' if every branch raises the cost, 'semi' if exactly one does, else 'non'."""
    raised = sum(1 for c in branch_costs if c > parent_cost)
    if raised >= len(branch_costs):
        return "cardinal"
    return "semi" if raised > 0 else "non"


def _vertex_at(plan: TimedPlan, t: int) -> int | None:
    """Vertex the plan occupies at time t, or None while mid-traversal."""
    steps = plan.steps
    if t >= steps[-1][1]:
        return steps[-1][0]
    times = [st for _, st in steps]
    idx = bisect_right(times, t) - 1
    if idx < 0:
        return None
    v0, t0 = steps[idx]
    if t == t0:
        return v0
    v1 = steps[idx + 1][0]
    return v0 if v0 == v1 else None


class _Timeout(Exception):
    pass


class _Ctx:
    def __init__(self, graph: IntGraph, starts, goals, config: SolveConfig, deadline: float | None):
        self.graph = graph
        self.starts = starts
        self.goals = goals
        self.config = config
        self.deadline = deadline
        self.stats = SearchStats()
        self.dist = [dijkstra(graph, g) for g in goals]
        if config.horizon is not None:
            self.horizon = config.horizon
        else:
            lb = max(self.dist[a][starts[a]] for a in range(len(starts)))
            if math.isinf(lb):
                lb = 0  # some agent is cut off; the root plan fails anyway
            max_w = max((w for _, _, w in graph.edges), default=1)
            max_deg = max((len(nbrs) for nbrs in graph.adjacency), default=1)
            kexp = max(2, math.ceil(math.log2(max_deg)) if max_deg > 1 else 2)
            self.horizon = int(2 * lb + kexp * max_w)

    def check_deadline(self) -> None:
        if self.deadline is not None and _time.perf_counter() > self.deadline:
            raise _Timeout

    def plan(self, agent: int, constraints: ConstraintSet) -> TimedPlan | None:
        self.stats.low_level_calls += 1
        return sipp_plan(
            self.graph,
            self.starts[agent],
            self.goals[agent],
            constraints,
            agent,
            horizon=self.horizon,
            dist_to_goal=self.dist[agent],
        )


def _replan_agents(conflict_bundle: ConstraintSet, plans: Sequence[TimedPlan]) -> list[int]:
    """Agents whose current plan may violate the freshly added constraints."""
    agents: set[int] = set()
    for a, _, _ in conflict_bundle.neg_vertex:
        agents.add(a)
    for a, _, _ in conflict_bundle.neg_edge:
        agents.add(a)
    for i, v, t in conflict_bundle.pos_vertex:
        agents.add(i)
        for j, plan in enumerate(plans):
            if j != i and _vertex_at(plan, t) == v:
                agents.add(j)
    return sorted(agents)


def _classify(ctx: _Ctx, constraints: ConstraintSet, plans: Sequence[TimedPlan], parent_cost: int, conflict: Conflict) -> ConflictNode:
    branches = []
    for delta in make_branch_constraints(conflict, ctx.config.disjoint):
        ctx.check_deadline()
        child_constraints = constraints.union(delta)
        new_plans: dict[int, TimedPlan] = {}
        feasible = True
        for a in _replan_agents(delta, plans):
            p = ctx.plan(a, child_constraints)
            if p is None:
                feasible = False
                break
            new_plans[a] = p
        if feasible:
            cost: float = max(new_plans.get(a, plans[a]).cost for a in range(len(plans)))
        else:
            new_plans = {}
            cost = math.inf
        branches.append(Branch(delta, new_plans, cost))
    return ConflictNode(conflict, tuple(branches), classify_conflict(parent_cost, [b.cost for b in branches]))


def _make_node(ctx: _Ctx, constraints: ConstraintSet, plans: tuple[TimedPlan, ...]) -> CTNode:
    cost = max(p.cost for p in plans)
    soc = sum(p.cost for p in plans)
    conflicts = tuple(detect_conflicts(plans, cost))
    if ctx.config.prioritize:
        limit = len(conflicts) if ctx.config.lazy_pc is None else ctx.config.lazy_pc
    else:
        limit = 1  # branch plans are still built for the conflict that will be expanded
    options = tuple(_classify(ctx, constraints, plans, cost, c) for c in conflicts[:limit])
    return CTNode(constraints, plans, cost, soc, conflicts, options)


_PC_RANK = {"cardinal": 2, "semi": 1, "non": 0}


def _pick_option(node: CTNode, prioritize: bool) -> ConflictNode:
    if not prioritize:
        return node.options[0]
    best = node.options[0]
    for opt in node.options[1:]:
        if _PC_RANK[opt.pc_class] > _PC_RANK[best.pc_class]:
            best = opt
    return best  # ties keep the earliest conflict


def solve(instance: Instance, config: SolveConfig | None = None):
    """Find a minimum-makespan conflict-free solution, or report failure.

    Returns a Solution on success, else Failure('timeout') when the budget
    runs out or Failure('exhausted') when the tree (bounded by the horizon)
    holds no solution.  Best-first order: makespan, then sum of costs, then
    insertion order.
    """
    if config is None:
        config = SolveConfig()
    if not isinstance(instance.graph, IntGraph):
        raise TypeError("solve needs an IntGraph instance; discretize the graph first")
    if config.lazy_pc is not None and config.lazy_pc < 1:
        raise ValueError(f"lazy_pc must be None or >= 1, got {config.lazy_pc}")
    t0 = _time.perf_counter()
    deadline = t0 + config.timeout if config.timeout is not None else None
    ctx = _Ctx(instance.graph, instance.starts, instance.goals, config, deadline)

    def finish(result):
        ctx.stats.wall_time = _time.perf_counter() - t0
        return result

    try:
        root_plans = []
        for a in range(instance.n_agents):
            ctx.check_deadline()
            p = ctx.plan(a, EMPTY_CONSTRAINTS)
            if p is None:
                return finish(Failure("exhausted", ctx.stats))
            root_plans.append(p)
        root = _make_node(ctx, EMPTY_CONSTRAINTS, tuple(root_plans))
        ctx.stats.nodes_generated += 1
        open_heap: list[tuple[int, int, int]] = []
        nodes: dict[int, CTNode] = {}
        tick = 0
        heapq.heappush(open_heap, (root.cost, root.soc, tick))
        nodes[tick] = root
        while open_heap:
            ctx.check_deadline()
            cost, soc, idx = heapq.heappop(open_heap)
            node = nodes.pop(idx)
            ctx.stats.nodes_expanded += 1
            if not node.conflicts:
                return finish(Solution(node.plans, node.cost, ctx.stats))
            option = _pick_option(node, config.prioritize)
            for branch in option.branches:
                if math.isinf(branch.cost):
                    continue
                child_constraints = node.constraints.union(branch.delta)
                child_plans = tuple(
                    branch.plans.get(a, node.plans[a]) for a in range(len(node.plans))
                )
                child = _make_node(ctx, child_constraints, child_plans)
                assert child.cost >= node.cost, "constraint tree cost must not decrease"
                ctx.stats.nodes_generated += 1
                tick += 1
                nodes[tick] = child
                heapq.heappush(open_heap, (child.cost, child.soc, tick))
        return finish(Failure("exhausted", ctx.stats))
    except _Timeout:
        return finish(Failure("timeout", ctx.stats))


def validate_solution(instance: Instance, plans: Sequence[TimedPlan]) -> list[Violation]:
    """Check plans against the instance: endpoints, edge timing, and conflicts.

    Returns every violation found (empty list means valid).  Traversals slower
    than the edge weight are legal; arriving early is not.  Agents whose own
    plan is malformed are left out of the pairwise replay, since their
    occupancy is not well defined.
    """
    out: list[Violation] = []
    if len(plans) != instance.n_agents:
        raise ValueError(f"{len(plans)} plans for {instance.n_agents} agents")
    clean: list[int] = []
    for a, plan in enumerate(plans):
        ok = True
        if plan.steps[0] != (instance.starts[a], 0):
            out.append(Violation("start", (a,), 0, f"agent {a} must start at vertex {instance.starts[a]} at time 0"))
            ok = False
        if plan.steps[-1][0] != instance.goals[a]:
            out.append(Violation("goal", (a,), plan.cost, f"agent {a} must end at vertex {instance.goals[a]}"))
            ok = False
        for (u, ta), (v, tb) in zip(plan.steps, plan.steps[1:]):
            if u == v:
                continue
            if not instance.graph.has_edge(u, v):
                out.append(Violation("edge", (a,), ta, f"agent {a} uses missing edge ({u},{v})"))
                ok = False
                continue
            w = instance.graph.weight(u, v)
            if tb - ta < w:
                out.append(
                    Violation("timing", (a,), ta, f"agent {a} crosses ({u},{v}) in {tb - ta} < weight {w}")
                )
                ok = False
        if ok:
            clean.append(a)
    if len(clean) >= 2:
        subset = [plans[a] for a in clean]
        for c in detect_conflicts(subset):
            i, j = (clean[c.agents[0]], clean[c.agents[1]])
            if c.kind == "vertex":
                out.append(
                    Violation("vertex-conflict", (i, j), c.time, f"agents {i} and {j} share vertex {c.vertex} at {c.time}")
                )
            else:
                assert c.trav_i is not None
                u, v = c.trav_i[0], c.trav_i[1]
                out.append(
                    Violation("edge-conflict", (i, j), c.time, f"agents {i} and {j} cross edge ({u},{v}) head-on near {c.time}")
                )
    return out


def serialize_solution(solution: Solution) -> str:
    """One line per agent: 'agent <id>: (v0,t0) (v1,t1) ...'."""
    lines = []
    for a, plan in enumerate(solution.plans):
        body = " ".join(f"({v},{t})" for v, t in plan.steps)
        lines.append(f"agent {a}: {body}")
    return "\n".join(lines) + "\n"
