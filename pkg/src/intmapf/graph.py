"""Weighted graphs for multi-agent pathfinding on grids and roadmaps.

A grid map becomes an undirected graph whose vertices are the passable cells
and whose edges come from a 2^k neighborhood (8, 16, or 32 moves for k in
{3, 4, 5}).  A move is admissible when every cell overlapped by the straight
segment between the two cell centers is passable; its weight is the Euclidean
length of the offset.  Real-weighted graphs are discretized to integer weights
by a scale factor s, and the rounding error accumulated along a set of paths
measures how much a discretization distorts those paths.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

__all__ = [
    "Vertex",
    "RealGraph",
    "IntGraph",
    "GridSpec",
    "neighborhood_moves",
    "segment_cells",
    "cell_vertex_ids",
    "build_grid_graph",
    "discretize",
    "discretization_error",
    "round_half_away",
    "dijkstra",
    "shortest_path",
]


@dataclass(frozen=True)
class Vertex:
    """Graph vertex with an integer id and a 2-D position."""

    id: int
    pos: tuple[float, float]


class _BaseGraph:
    """Shared storage and validation for real- and integer-weighted graphs.

    Vertices must have ids 0..n-1 in order.  Edges are undirected, stored once
    with u < v, and exposed through a per-vertex adjacency list sorted by
    neighbor id.  Instances are treated as immutable after construction.
    """

    def __init__(self, vertices: Sequence[Vertex], edges: Iterable[tuple[int, int, float]]):
        self.vertices: tuple[Vertex, ...] = tuple(vertices)
        for idx, v in enumerate(self.vertices):
            if v.id != idx:
                raise ValueError(f"vertex ids must be 0..n-1 in order, found id {v.id} at index {idx}")
        n = len(self.vertices)
        canon: dict[tuple[int, int], float] = {}
        for u, v, w in edges:
            if u == v:
                raise ValueError(f"self loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) references unknown vertex")
            self._check_weight(u, v, w)
            key = (u, v) if u < v else (v, u)
            if key in canon and canon[key] != w:
                raise ValueError(f"edge {key} listed twice with different weights")
            canon[key] = w
        self.edges: tuple[tuple[int, int, float], ...] = tuple(
            (u, v, canon[(u, v)]) for u, v in sorted(canon)
        )
        adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for u, v, w in self.edges:
            adj[u].append((v, w))
            adj[v].append((u, w))
        self.adjacency: tuple[tuple[tuple[int, float], ...], ...] = tuple(
            tuple(sorted(nbrs)) for nbrs in adj
        )
        self._weight = {(u, v): w for u, v, w in self.edges}

    def _check_weight(self, u: int, v: int, w: float) -> None:
        raise NotImplementedError

    @property
    def n(self) -> int:
        return len(self.vertices)

    def has_edge(self, u: int, v: int) -> bool:
        key = (u, v) if u < v else (v, u)
        return key in self._weight

    def weight(self, u: int, v: int) -> float:
        key = (u, v) if u < v else (v, u)
        try:
            return self._weight[key]
        except KeyError:
            raise ValueError(f"no edge between {u} and {v}") from None

    def __repr__(self) -> str:  # pragma: no cover
        return f"{type(self).__name__}(n={self.n}, m={len(self.edges)})"


class RealGraph(_BaseGraph):
    """Undirected graph with strictly positive, finite real edge weights."""

    def _check_weight(self, u: int, v: int, w: float) -> None:
        if not (w > 0 and math.isfinite(w)):
            raise ValueError(f"edge ({u},{v}) weight {w!r} is not a positive finite real")


class IntGraph(_BaseGraph):
    """Undirected graph whose edge weights are integers >= 1."""

    def _check_weight(self, u: int, v: int, w: float) -> None:
        if not (isinstance(w, int) and w >= 1):
            raise ValueError(f"edge ({u},{v}) weight {w!r} is not an integer >= 1")


@dataclass(frozen=True)
class GridSpec:
    """Rectangular grid map: passability per cell, row-major (y * width + x)."""

    width: int
    height: int
    passable: tuple[bool, ...]

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"grid dimensions {self.width}x{self.height} must be positive")
        if len(self.passable) != self.width * self.height:
            raise ValueError(
                f"passable has {len(self.passable)} entries, expected {self.width * self.height}"
            )

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def is_passable(self, x: int, y: int) -> bool:
        return self.in_bounds(x, y) and self.passable[y * self.width + x]


def neighborhood_moves(k: int) -> list[tuple[int, int]]:
    """Return the 2^k move offsets for k in {3, 4, 5}, in circular order.

    The 2^(k+1) set is built from the 2^k set by inserting the vector sum of
    every pair of circularly adjacent moves, starting from the four cardinal
    moves.  All offsets are primitive (coprime components), so each move
    crosses a fresh set of cells.
    """
    if k not in (3, 4, 5):
        raise ValueError(f"neighborhood exponent k must be 3, 4, or 5, got {k}")
    moves = [(1, 0), (0, 1), (-1, 0), (0, -1)]
    for _ in range(k - 2):
        grown: list[tuple[int, int]] = []
        for a, b in zip(moves, moves[1:] + moves[:1]):
            grown.append(a)
            grown.append((a[0] + b[0], a[1] + b[1]))
        moves = grown
    return moves


def segment_cells(a: tuple[int, int], b: tuple[int, int]) -> list[tuple[int, int]]:
    """All cells overlapped by the closed segment between the centers of a and b.

    Cells are closed unit squares, so a segment through a cell corner counts
    all four incident cells.  Integer midpoint arithmetic only; endpoints are
    included.
    """
    x, y = a
    x2, y2 = b
    cells = [(x, y)]
    dx = x2 - x
    dy = y2 - y
    xstep = 1 if dx >= 0 else -1
    ystep = 1 if dy >= 0 else -1
    dx = abs(dx)
    dy = abs(dy)
    ddx = 2 * dx
    ddy = 2 * dy
    if ddx >= ddy:
        errorprev = error = dx
        for _ in range(dx):
            x += xstep
            error += ddy
            if error > ddx:
                y += ystep
                error -= ddx
                if error + errorprev < ddx:
                    cells.append((x, y - ystep))
                elif error + errorprev > ddx:
                    cells.append((x - xstep, y))
                else:
                    # exact corner crossing: both side cells touch the segment
                    cells.append((x, y - ystep))
                    cells.append((x - xstep, y))
            cells.append((x, y))
            errorprev = error
    else:
        errorprev = error = dy
        for _ in range(dy):
            y += ystep
            error += ddx
            if error > ddy:
                x += xstep
                error -= ddy
                if error + errorprev < ddy:
                    cells.append((x - xstep, y))
                elif error + errorprev > ddy:
                    cells.append((x, y - ystep))
                else:
                    cells.append((x - xstep, y))
                    cells.append((x, y - ystep))
            cells.append((x, y))
            errorprev = error
    return cells


def cell_vertex_ids(grid: GridSpec) -> dict[tuple[int, int], int]:
    """Map each passable (x, y) cell to its vertex id (row-major rank)."""
    ids: dict[tuple[int, int], int] = {}
    for y in range(grid.height):
        for x in range(grid.width):
            if grid.passable[y * grid.width + x]:
                ids[(x, y)] = len(ids)
    return ids


def build_grid_graph(grid: GridSpec, k: int) -> RealGraph:
    """Build the 2^k-neighborhood graph over the passable cells of a grid.

    Vertex ids follow row-major order of the passable cells, and each vertex
    position is its (x, y) cell coordinate.  An edge exists when the target
    cell is passable and every cell crossed by the move segment is passable;
    the weight is the Euclidean offset length.  The move set is closed under
    negation, so the result is symmetric without further checks.
    """
    moves = neighborhood_moves(k)
    crossed = {m: tuple(segment_cells((0, 0), m)) for m in moves}
    cell_id = cell_vertex_ids(grid)
    vertices = [Vertex(i, (float(x), float(y))) for (x, y), i in cell_id.items()]
    edges: list[tuple[int, int, float]] = []
    for (x, y), u in cell_id.items():
        for mx, my in moves:
            tx, ty = x + mx, y + my
            v = cell_id.get((tx, ty))
            if v is None or v <= u:
                continue
            if all(grid.is_passable(x + cx, y + cy) for cx, cy in crossed[(mx, my)]):
                edges.append((u, v, math.hypot(mx, my)))
    return RealGraph(vertices, edges)


def round_half_away(x: float) -> int:
    """Round a non-negative value to the nearest integer, halves away from zero."""
    if x < 0:
        raise ValueError(f"expected a non-negative value, got {x}")
    return int(math.floor(x + 0.5))


def discretize(g: RealGraph, s: float) -> IntGraph:
    """Map real weights to integers: w -> max(1, round(w / s)), halves away from zero.

    Vertices, positions, and the edge set are preserved, so connectivity never
    changes; only weights do.  s must be positive.
    """
    if not (s > 0 and math.isfinite(s)):
        raise ValueError(f"scale s must be a positive finite real, got {s!r}")
    edges = [(u, v, max(1, round_half_away(w / s))) for u, v, w in g.edges]
    return IntGraph(g.vertices, edges)


def discretization_error(g: RealGraph, s: float, paths: Iterable[Sequence[int]]) -> float:
    """Total rounding distortion of a discretization over a set of paths.

    For every consecutive traversal (u, v) in every path, accumulates
    |w - round(w / s) * s| with the unclamped round, where w is the real
    weight.  Repeated traversals of an edge count once per traversal.  Raises
    if a path uses a pair with no edge.
    """
    if not (s > 0 and math.isfinite(s)):
        raise ValueError(f"scale s must be a positive finite real, got {s!r}")
    total = 0.0
    for path in paths:
        for u, v in zip(path, path[1:]):
            if u == v:
                continue
            w = g.weight(u, v)
            total += abs(w - round_half_away(w / s) * s)
    return total


def dijkstra(graph: _BaseGraph, source: int) -> list[float]:
    """Shortest-path distances from source to every vertex (math.inf if unreachable)."""
    if not (0 <= source < graph.n):
        raise ValueError(f"source {source} out of range for {graph.n} vertices")
    dist = [math.inf] * graph.n
    dist[source] = 0
    heap: list[tuple[float, int]] = [(0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in graph.adjacency[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def shortest_path(graph: _BaseGraph, source: int, target: int) -> list[int] | None:
    """One shortest path as a vertex sequence, or None if target is unreachable.

    Ties break toward smaller predecessor ids, so the result is deterministic.
    """
    if not (0 <= target < graph.n):
        raise ValueError(f"target {target} out of range for {graph.n} vertices")
    dist = [math.inf] * graph.n
    parent: list[int | None] = [None] * graph.n
    dist[source] = 0
    heap: list[tuple[float, int]] = [(0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        if u == target:
            break
        for v, w in graph.adjacency[u]:
            nd = d + w
            if nd < dist[v] or (nd == dist[v] and parent[v] is not None and u < parent[v]):
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
    if dist[target] == math.inf:
        return None
    path = [target]
    while path[-1] != source:
        prev = parent[path[-1]]
        assert prev is not None
        path.append(prev)
    path.reverse()
    return path
