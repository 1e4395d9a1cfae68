"""Safe-interval path planning over integer time with three constraint kinds.

The planner finds an earliest-arrival timed path for one agent on an
integer-weighted graph.  Time is discrete; a move across an edge of weight w
departs at integer d, occupies the edge for the open interval (d, d+w), and
arrives at d+w; waiting costs one step at a time and occupies the vertex.

Constraints restrict a single agent:
  - negative vertex (agent, v, t): the agent may not occupy v at time t;
  - negative edge (agent, (u, v), (t1, t2)): a traversal of the directed edge
    u -> v departing at d is forbidden whenever (d, d+w) intersects the open
    interval (t1, t2);
  - positive vertex (agent, v, t): the agent must occupy v at time t.  For
    every other agent this acts as a negative vertex constraint, which is how
    disjoint splitting shares one constraint between both branch children.

Search states are (vertex, safe-interval index, waypoints consumed); within
one safe interval an earlier arrival dominates, which keeps the state space
finite even with no horizon.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

from .graph import IntGraph, dijkstra

__all__ = [
    "SafeInterval",
    "ConstraintSet",
    "TimedPlan",
    "SafeTable",
    "build_safe_intervals",
    "sipp_plan",
]


class SafeInterval(NamedTuple):
    """Half-open span [lo, hi) of times a vertex is free; hi may be math.inf."""

    lo: int
    hi: float


VertexConstraint = tuple[int, int, int]  # (agent, vertex, t)
EdgeConstraint = tuple[int, tuple[int, int], tuple[int, int]]  # (agent, (u, v), (t1, t2))


@dataclass(frozen=True)
class ConstraintSet:
    """Immutable bundle of negative vertex, negative edge, and positive vertex constraints."""

    neg_vertex: frozenset[VertexConstraint] = frozenset()
    neg_edge: frozenset[EdgeConstraint] = frozenset()
    pos_vertex: frozenset[VertexConstraint] = frozenset()

    def __post_init__(self) -> None:
        clash = self.pos_vertex & self.neg_vertex
        if clash:
            raise ValueError(f"positive constraint contradicts a negative one: {sorted(clash)[0]}")
        for a, v, t in self.neg_vertex | self.pos_vertex:
            if t < 0:
                raise ValueError(f"vertex constraint ({a},{v},{t}) has a negative time")
        for a, e, (t1, t2) in self.neg_edge:
            if not (0 <= t1 < t2):
                raise ValueError(f"edge constraint ({a},{e},({t1},{t2})) needs 0 <= t1 < t2")

    def union(self, other: "ConstraintSet") -> "ConstraintSet":
        return ConstraintSet(
            self.neg_vertex | other.neg_vertex,
            self.neg_edge | other.neg_edge,
            self.pos_vertex | other.pos_vertex,
        )

    def is_empty(self) -> bool:
        return not (self.neg_vertex or self.neg_edge or self.pos_vertex)


EMPTY_CONSTRAINTS = ConstraintSet()


@dataclass(frozen=True)
class TimedPlan:
    """Timed path as (vertex, arrival time) steps, strictly increasing in time.

    Canonical plans start at time 0, spell out each wait step explicitly
    (+1 per step) and cross an edge in exactly its weight.
    """

    steps: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if not self.steps:
            raise ValueError("a plan needs at least one step")
        times = [t for _, t in self.steps]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("plan times must be strictly increasing")

    @property
    def cost(self) -> int:
        return self.steps[-1][1]

    def vertices(self) -> list[int]:
        return [v for v, _ in self.steps]

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.steps)

    def __len__(self) -> int:
        return len(self.steps)


class SafeTable:
    """Per-agent view of a constraint set, ready for interval queries."""

    def __init__(
        self,
        vertex_intervals: dict[int, tuple[SafeInterval, ...]],
        edge_forbidden: dict[tuple[int, int], tuple[tuple[int, int], ...]],
        waypoints: tuple[tuple[int, int], ...],
    ):
        self._vertex = vertex_intervals
        self._edge = edge_forbidden
        self.waypoints = waypoints  # (t, v), sorted by t

    _FREE = (SafeInterval(0, math.inf),)

    def vertex_intervals(self, v: int) -> tuple[SafeInterval, ...]:
        return self._vertex.get(v, self._FREE)

    def interval_index(self, v: int, t: int) -> int | None:
        """Index of the safe interval of v containing time t, or None."""
        for i, (lo, hi) in enumerate(self.vertex_intervals(v)):
            if lo <= t < hi:
                return i
            if lo > t:
                break
        return None

    def edge_block_end(self, u: int, v: int, w: int, d: int) -> int | None:
        """None if departing u -> v at d is allowed, else the earliest retry time.

        A forbidden interval (t1, t2) blocks d when (d, d+w) and (t1, t2)
        intersect; the retry time is the largest t2 over the violated
        intervals, the first candidate that clears all of them.
        """
        worst = None
        for t1, t2 in self._edge.get((u, v), ()):
            if d < t2 and t1 < d + w:
                worst = t2 if worst is None else max(worst, t2)
        return worst


def build_safe_intervals(constraints: ConstraintSet, agent: int) -> SafeTable:
    """Compile the constraints that bind one agent into a SafeTable.

    Banned (v, t) pairs are the agent's negative vertex constraints plus every
    other agent's positive ones.  Bans split a vertex's timeline into maximal
    safe intervals sorted by start; the final interval is always unbounded.
    """
    banned: dict[int, set[int]] = {}
    for a, v, t in constraints.neg_vertex:
        if a == agent:
            banned.setdefault(v, set()).add(t)
    waypoints: list[tuple[int, int]] = []
    for a, v, t in constraints.pos_vertex:
        if a == agent:
            waypoints.append((t, v))
        else:
            banned.setdefault(v, set()).add(t)
    vertex_intervals: dict[int, tuple[SafeInterval, ...]] = {}
    for v, times in banned.items():
        spans: list[SafeInterval] = []
        cur = 0
        for t in sorted(times):
            if t < 0:
                continue
            if t > cur:
                spans.append(SafeInterval(cur, t))
            cur = max(cur, t + 1)
        spans.append(SafeInterval(cur, math.inf))
        vertex_intervals[v] = tuple(spans)
    edge_forbidden: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for a, (u, v), (t1, t2) in constraints.neg_edge:
        if a == agent and t1 < t2:
            edge_forbidden.setdefault((u, v), []).append((t1, t2))
    return SafeTable(
        vertex_intervals,
        {e: tuple(sorted(spans)) for e, spans in edge_forbidden.items()},
        tuple(sorted(waypoints)),
    )


def sipp_plan(
    graph: IntGraph,
    start: int,
    goal: int,
    constraints: ConstraintSet,
    agent: int,
    *,
    horizon: int | None = None,
    dist_to_goal: Sequence[float] | None = None,
) -> TimedPlan | None:
    """Earliest-arrival plan from start to goal under the agent's constraints.

    A* over (vertex, safe-interval, waypoints-consumed) states with an exact
    unconstrained distance-to-goal heuristic.  Ties pop by smaller f, then
    larger g, then smaller vertex id, then insertion order.  The plan may end
    only in an unbounded safe interval of the goal with every unconsumed
    waypoint sitting at the goal, because the agent stays there forever.
    Returns None when no plan exists (within the horizon, if one is given).
    """
    table = build_safe_intervals(constraints, agent)
    wps = table.waypoints
    dist = dist_to_goal if dist_to_goal is not None else dijkstra(graph, goal)
    if dist[start] == math.inf:
        return None

    def consume(wp: int, t: int, at_vertex: int) -> int | None:
        # advance past waypoints due by time t; each must sit where the agent is
        while wp < len(wps) and wps[wp][0] <= t:
            if wps[wp][1] != at_vertex:
                return None
            wp += 1
        return wp

    ivl0 = table.interval_index(start, 0)
    if ivl0 is None:
        return None
    wp0 = consume(0, 0, start)
    if wp0 is None:
        return None

    State = tuple[int, int, int]  # (vertex, interval index, waypoints consumed)
    start_key: State = (start, ivl0, wp0)
    best: dict[State, int] = {start_key: 0}
    parent: dict[State, tuple[State, int, int]] = {}  # child -> (parent, depart, arrive)
    counter = 0
    h0 = dist[start]
    heap: list[tuple[float, int, int, int]] = [(h0, 0, 0, counter)]
    keys: dict[int, State] = {counter: start_key}

    def goal_ready(v: int, hi: float, wp: int) -> bool:
        return v == goal and hi == math.inf and all(wv == goal for _, wv in wps[wp:])

    while heap:
        f, neg_g, _, cnt = heapq.heappop(heap)
        key = keys.pop(cnt, None)
        if key is None:
            continue
        v, ivl, wp = key
        a = -neg_g
        if a > best.get(key, math.inf):
            continue
        lo, hi = table.vertex_intervals(v)[ivl]
        if goal_ready(v, hi, wp):
            return _reconstruct(parent, key, start_key)
        # latest time the agent may still sit at v: the first unconsumed
        # waypoint elsewhere caps every departure
        cap = math.inf
        for wt, wv in wps[wp:]:
            if wv != v:
                cap = wt
                break
        # waiting in place to meet the next waypoint is its own transition;
        # the departure scan below only ever takes the earliest departure
        if wp < len(wps):
            wt, wv = wps[wp]
            if wv == v and a < wt < hi and (horizon is None or wt + dist[v] <= horizon):
                cwp = consume(wp, wt, v)
                if cwp is not None:
                    ckey: State = (v, ivl, cwp)
                    if wt < best.get(ckey, math.inf):
                        best[ckey] = wt
                        parent[ckey] = (key, wt, wt)
                        counter += 1
                        keys[counter] = ckey
                        heapq.heappush(heap, (wt + dist[v], -wt, v, counter))
        for u, w in graph.adjacency[v]:
            if dist[u] == math.inf:
                continue
            for jdx, (jlo, jhi) in enumerate(table.vertex_intervals(u)):
                d = max(a, jlo - w)
                while True:
                    if d >= hi or d >= cap:
                        break
                    t = d + w
                    if t >= jhi:
                        break
                    if horizon is not None and t + dist[u] > horizon:
                        break
                    retry = table.edge_block_end(v, u, w, d)
                    if retry is not None:
                        d = max(retry, d + 1)
                        continue
                    viol = None
                    for wt, wv in wps[wp:]:
                        if wt > t:
                            break
                        if d < wt < t or (wt == t and wv != u):
                            viol = wt
                            break
                    if viol is not None:
                        d = viol if d < viol < t else d + 1
                        continue
                    # waypoints due while waiting are met at v, one at t is met at u
                    mid = consume(wp, d, v)
                    nwp = consume(mid, t, u) if mid is not None else None
                    if nwp is not None:
                        nkey: State = (u, jdx, nwp)
                        if t < best.get(nkey, math.inf):
                            best[nkey] = t
                            parent[nkey] = (key, d, t)
                            counter += 1
                            keys[counter] = nkey
                            heapq.heappush(heap, (t + dist[u], -t, u, counter))
                    break  # earliest departure into this interval found
    return None


def _reconstruct(
    parent: dict[tuple[int, int, int], tuple[tuple[int, int, int], int, int]],
    key: tuple[int, int, int],
    start_key: tuple[int, int, int],
) -> TimedPlan:
    hops: list[tuple[int, int, int]] = []  # (vertex arrived at, depart_prev, arrive)
    while key != start_key:
        prev, d, t = parent[key]
        hops.append((key[0], d, t))
        key = prev
    hops.reverse()
    steps: list[tuple[int, int]] = [(start_key[0], 0)]
    for v, d, t in hops:
        at, arrived = steps[-1]
        for wait_t in range(arrived + 1, d + 1):
            steps.append((at, wait_t))
        if steps[-1] != (v, t):  # wait-to-waypoint hops end on the wait itself
            steps.append((v, t))
    return TimedPlan(tuple(steps))
