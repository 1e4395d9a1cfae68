"""Grid geometry, discretization, and shortest-path tests."""

import math

import numpy as np
import pytest

from intmapf import (
    GridSpec,
    IntGraph,
    RealGraph,
    Vertex,
    build_grid_graph,
    cell_vertex_ids,
    dijkstra,
    discretization_error,
    discretize,
    neighborhood_moves,
    round_half_away,
    segment_cells,
    shortest_path,
)

import oracles


# ---------------------------------------------------------------------------
# neighborhoods

def test_move_sets_match_hand_listed_offsets():
    assert set(neighborhood_moves(3)) == oracles.OFFSETS_8
    assert set(neighborhood_moves(4)) == oracles.OFFSETS_16
    assert set(neighborhood_moves(5)) == oracles.OFFSETS_32


def test_move_sets_sizes_and_primitivity():
    for k in (3, 4, 5):
        moves = neighborhood_moves(k)
        assert len(moves) == 2**k
        assert len(set(moves)) == 2**k
        for mx, my in moves:
            assert math.gcd(abs(mx), abs(my)) == 1
        # closed under negation, so grid graphs come out symmetric for free
        assert {(-mx, -my) for mx, my in moves} == set(moves)


def test_move_set_is_circularly_ordered():
    for k in (3, 4, 5):
        moves = neighborhood_moves(k)
        angles = [math.atan2(my, mx) % (2 * math.pi) for mx, my in moves]
        start = angles.index(min(angles))
        rotated = angles[start:] + angles[:start]
        assert rotated == sorted(rotated)


def test_neighborhood_moves_rejects_bad_exponent():
    for k in (2, 6, 0):
        with pytest.raises(ValueError):
            neighborhood_moves(k)


# ---------------------------------------------------------------------------
# supercover geometry

def test_segment_cells_axis_and_diagonal():
    assert segment_cells((0, 0), (3, 0)) == [(0, 0), (1, 0), (2, 0), (3, 0)]
    # exact corner crossing picks up both side cells
    assert set(segment_cells((0, 0), (1, 1))) == {(0, 0), (1, 0), (0, 1), (1, 1)}


def test_segment_cells_matches_exact_geometry_small_offsets():
    for dx in range(-3, 4):
        for dy in range(-3, 4):
            a, b = (5, 5), (5 + dx, 5 + dy)
            assert set(segment_cells(a, b)) == oracles.segment_cells_exact(a, b), (dx, dy)


def test_segment_cells_matches_exact_geometry_random_segments():
    rng = np.random.default_rng(20)
    for _ in range(80):
        a = (int(rng.integers(-4, 5)), int(rng.integers(-4, 5)))
        b = (a[0] + int(rng.integers(-8, 9)), a[1] + int(rng.integers(-8, 9)))
        assert set(segment_cells(a, b)) == oracles.segment_cells_exact(a, b), (a, b)


def test_segment_cells_symmetric_in_endpoints():
    rng = np.random.default_rng(21)
    for _ in range(40):
        a = (int(rng.integers(0, 6)), int(rng.integers(0, 6)))
        b = (int(rng.integers(0, 6)), int(rng.integers(0, 6)))
        assert set(segment_cells(a, b)) == set(segment_cells(b, a))


# ---------------------------------------------------------------------------
# grid graphs

def _full_grid(w, h):
    return GridSpec(w, h, tuple([True] * (w * h)))


def test_two_cell_grid():
    g = build_grid_graph(_full_grid(2, 1), 3)
    assert g.n == 2
    assert g.edges == ((0, 1, 1.0),)


def test_square_grid_edge_weights():
    g = build_grid_graph(_full_grid(2, 2), 3)
    assert g.n == 4
    weights = sorted(w for _, _, w in g.edges)
    assert weights[:4] == [1.0, 1.0, 1.0, 1.0]
    assert weights[4] == weights[5] == pytest.approx(math.sqrt(2.0))


def test_center_blocked_grid_matches_enumeration_oracle():
    passable = {(x, y): (x, y) != (1, 1) for x in range(3) for y in range(3)}
    grid = GridSpec(3, 3, tuple(passable[(x, y)] for y in range(3) for x in range(3)))
    g = build_grid_graph(grid, 4)
    ids = cell_vertex_ids(grid)
    by_cell = {(min(a, b), max(a, b)) for a, b in (
        ((ids[u_cell]), (ids[v_cell]))
        for u_cell, v_cell in oracles.admissible_grid_edges(passable, oracles.OFFSETS_16)
    )}
    assert {(u, v) for u, v, _ in g.edges} == by_cell


def test_long_knight_move_blocked_by_either_crossed_cell():
    # the (2,1) move from (0,0) crosses (1,0) and (1,1)
    for blocked in ((1, 0), (1, 1)):
        passable = [(x, y) != blocked for y in range(2) for x in range(3)]
        grid = GridSpec(3, 2, tuple(passable))
        g = build_grid_graph(grid, 4)
        ids = cell_vertex_ids(grid)
        assert not g.has_edge(ids[(0, 0)], ids[(2, 1)])
    grid = GridSpec(3, 2, tuple([True] * 6))
    g = build_grid_graph(grid, 4)
    ids = cell_vertex_ids(grid)
    assert g.weight(ids[(0, 0)], ids[(2, 1)]) == pytest.approx(math.sqrt(5.0))


def test_random_grids_match_enumeration_oracle():
    rng = np.random.default_rng(22)
    for trial in range(12):
        k = int(rng.choice([3, 4, 5]))
        w, h = 6, 6
        open_cells = rng.random(w * h) > 0.25
        grid = GridSpec(w, h, tuple(bool(c) for c in open_cells))
        g = build_grid_graph(grid, k)
        passable = {(x, y): grid.is_passable(x, y) for x in range(w) for y in range(h)}
        ids = cell_vertex_ids(grid)
        offsets = {3: oracles.OFFSETS_8, 4: oracles.OFFSETS_16, 5: oracles.OFFSETS_32}[k]
        want = set()
        for a, b in oracles.admissible_grid_edges(passable, offsets):
            u, v = ids[a], ids[b]
            want.add((min(u, v), max(u, v)))
        assert {(u, v) for u, v, _ in g.edges} == want, (trial, k)
        for u, v, wgt in g.edges:
            (ux, uy), (vx, vy) = g.vertices[u].pos, g.vertices[v].pos
            assert wgt == pytest.approx(math.hypot(ux - vx, uy - vy))


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        GridSpec(0, 3, ())
    with pytest.raises(ValueError):
        GridSpec(2, 2, (True, True, True))


# ---------------------------------------------------------------------------
# graph containers

def _line_vertices(n):
    return [Vertex(i, (float(i), 0.0)) for i in range(n)]


def test_graph_rejects_bad_structure():
    with pytest.raises(ValueError):
        RealGraph([Vertex(1, (0.0, 0.0))], [])
    with pytest.raises(ValueError):
        RealGraph(_line_vertices(2), [(0, 0, 1.0)])
    with pytest.raises(ValueError):
        RealGraph(_line_vertices(2), [(0, 3, 1.0)])
    with pytest.raises(ValueError):
        RealGraph(_line_vertices(2), [(0, 1, 1.0), (1, 0, 2.0)])
    with pytest.raises(ValueError):
        RealGraph(_line_vertices(2), [(0, 1, -1.0)])
    with pytest.raises(ValueError):
        IntGraph(_line_vertices(2), [(0, 1, 1.5)])
    with pytest.raises(ValueError):
        IntGraph(_line_vertices(2), [(0, 1, 0)])


def test_graph_edge_queries():
    g = RealGraph(_line_vertices(3), [(1, 0, 2.0), (1, 2, 3.0)])
    assert g.edges == ((0, 1, 2.0), (1, 2, 3.0))  # canonical u < v, sorted
    assert g.has_edge(2, 1) and not g.has_edge(0, 2)
    assert g.weight(2, 1) == 3.0
    with pytest.raises(ValueError):
        g.weight(0, 2)
    assert g.adjacency[1] == ((0, 2.0), (2, 3.0))


# ---------------------------------------------------------------------------
# discretization

def test_round_half_away_from_zero():
    assert [round_half_away(x) for x in (0.0, 0.4, 0.5, 1.5, 2.5, 2.49)] == [0, 0, 1, 2, 3, 2]
    with pytest.raises(ValueError):
        round_half_away(-0.5)


def test_discretize_identity_on_integer_weights():
    g = RealGraph(_line_vertices(4), [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 3.0)])
    gi = discretize(g, 1.0)
    assert isinstance(gi, IntGraph)
    assert [w for _, _, w in gi.edges] == [1, 2, 3]
    assert gi.vertices == g.vertices


def test_discretize_rounds_and_clamps():
    g = RealGraph(_line_vertices(3), [(0, 1, 1.41421), (1, 2, 0.2)])
    assert [w for _, _, w in discretize(g, 0.5).edges] == [3, 1]  # round(2.82842) = 3
    assert [w for _, _, w in discretize(g, 1.0).edges] == [1, 1]  # 0.2 clamps to 1
    with pytest.raises(ValueError):
        discretize(g, 0.0)


def test_discretization_error_zero_for_exact_representation():
    g = RealGraph(_line_vertices(3), [(0, 1, 1.0), (1, 2, 2.0)])
    assert discretization_error(g, 1.0, [[0, 1, 2], [2, 1]]) == 0.0
    assert discretization_error(g, 1.0, []) == 0.0


def test_discretization_error_hand_value():
    g = RealGraph(_line_vertices(3), [(0, 1, 1.0), (1, 2, 1.41421)])
    got = discretization_error(g, 0.5, [[0, 1, 2]])
    assert got == pytest.approx(abs(1.0 - 1.0) + abs(1.41421 - 1.5), abs=1e-9)


def test_discretization_error_is_unclamped_and_per_traversal():
    g = RealGraph(_line_vertices(2), [(0, 1, 0.2)])
    # round(0.2) = 0 in the error term even though discretize clamps to 1
    assert discretization_error(g, 1.0, [[0, 1]]) == pytest.approx(0.2)
    assert discretization_error(g, 1.0, [[0, 1, 0]]) == pytest.approx(0.4)
    # wait steps (repeated vertex) contribute nothing
    assert discretization_error(g, 1.0, [[0, 0, 1, 1]]) == pytest.approx(0.2)


def test_discretization_error_rejects_unknown_edge():
    g = RealGraph(_line_vertices(3), [(0, 1, 1.0)])
    with pytest.raises(ValueError):
        discretization_error(g, 1.0, [[0, 2]])


def test_discretized_costs_scale_back_to_real_costs():
    rng = np.random.default_rng(23)
    for _ in range(10):
        n = 8
        edges = []
        for u in range(n):
            for v in range(u + 1, n):
                if rng.random() < 0.4:
                    edges.append((u, v, float(rng.uniform(0.3, 3.0))))
        if not edges:
            continue
        g = RealGraph(_line_vertices(n), edges)
        s = float(rng.uniform(0.05, 0.5))
        gi = discretize(g, s)
        for (u, v, w), (_, _, wi) in zip(g.edges, gi.edges):
            assert abs(w - wi * s) <= 0.5 * s + 1e-12  # each weight lands within half a tick


# ---------------------------------------------------------------------------
# shortest paths

def _random_graph(rng, n, p=0.45, max_w=4.0):
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.append((u, v, float(rng.uniform(0.5, max_w))))
    return RealGraph(_line_vertices(n), edges)


def test_dijkstra_matches_bellman_ford():
    rng = np.random.default_rng(24)
    for _ in range(30):
        g = _random_graph(rng, int(rng.integers(2, 9)))
        src = int(rng.integers(0, g.n))
        want = oracles.bellman_ford(g.n, g.edges, src)
        got = dijkstra(g, src)
        for a, b in zip(got, want):
            assert a == pytest.approx(b) or (math.isinf(a) and math.isinf(b))


def test_shortest_path_is_a_valid_optimal_path():
    rng = np.random.default_rng(25)
    for _ in range(30):
        g = _random_graph(rng, int(rng.integers(2, 9)))
        src, tgt = (int(x) for x in rng.integers(0, g.n, size=2))
        dist = oracles.bellman_ford(g.n, g.edges, src)
        path = shortest_path(g, src, tgt)
        if math.isinf(dist[tgt]):
            assert path is None
            continue
        assert path is not None and path[0] == src and path[-1] == tgt
        total = sum(g.weight(u, v) for u, v in zip(path, path[1:]))
        assert total == pytest.approx(dist[tgt])


def test_dijkstra_source_out_of_range():
    g = _random_graph(np.random.default_rng(0), 4)
    with pytest.raises(ValueError):
        dijkstra(g, 9)
