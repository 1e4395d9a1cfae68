"""Tests for the multi-objective GA kernel.

The sorting routine is checked against an O(n^2) peeling oracle on random
objective sets, including heavy ties and exact duplicates.  The evolve loop
gets two analytic problems: a straight trade-off front it must spread along,
and a collapsed problem whose front is a single point it must converge to.
"""

import random

import numpy as np
import pytest

from intmapf import nsga2_evolve
from intmapf.nsga import crowding_distance, dominates, fast_nondominated_sort

from oracles import pareto_fronts_peel


def test_dominates_basics():
    assert dominates(np.array([1.0, 1.0]), np.array([2.0, 2.0]))
    assert dominates(np.array([1.0, 2.0]), np.array([1.0, 3.0]))
    assert not dominates(np.array([1.0, 2.0]), np.array([2.0, 1.0]))
    assert not dominates(np.array([2.0, 1.0]), np.array([1.0, 2.0]))
    assert not dominates(np.array([1.0, 1.0]), np.array([1.0, 1.0]))


def test_sort_puts_duplicates_in_one_front():
    objs = np.array([[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]])
    fronts = fast_nondominated_sort(objs)
    assert [sorted(f) for f in fronts] == [[0, 1], [2]]


def test_sort_matches_peeling_oracle():
    rng = np.random.default_rng(12)
    pr = random.Random(12)
    for _ in range(200):
        n = pr.randint(1, 64)
        if pr.random() < 0.5:
            objs = rng.random((n, 2))
        else:
            objs = rng.integers(0, 5, size=(n, 2)).astype(float)  # lots of ties
        got = [sorted(f) for f in fast_nondominated_sort(objs)]
        want = pareto_fronts_peel(objs)
        assert got == want
        assert sorted(i for f in got for i in f) == list(range(n))


def test_crowding_hand_case():
    objs = np.array([[0.0, 2.0], [1.0, 1.0], [2.0, 0.0]])
    dist = crowding_distance(objs, [0, 1, 2])
    assert dist[0] == np.inf and dist[2] == np.inf
    assert dist[1] == pytest.approx(2.0)


def test_crowding_small_fronts_are_infinite():
    objs = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.all(np.isinf(crowding_distance(objs, [0, 1])))
    assert np.all(np.isinf(crowding_distance(objs, [0])))


def test_crowding_flat_objective_adds_nothing():
    objs = np.array([[0.0, 5.0], [1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    dist = crowding_distance(objs, [0, 1, 2, 3])
    assert dist[0] == np.inf and dist[3] == np.inf
    # second objective is constant, so middles only collect the first's gaps
    assert dist[1] == pytest.approx(2.0 / 3.0)
    assert dist[2] == pytest.approx(2.0 / 3.0)


def _tradeoff(x):
    return np.stack([x, 1.0 - x], axis=1)


def _collapsed(x):
    f = (x - 0.5) ** 2
    return np.stack([f, f], axis=1)


def test_evolve_spreads_along_a_tradeoff_front():
    rng = np.random.default_rng(5)
    init = rng.random(24)
    xs, fs = nsga2_evolve(init, _tradeoff, (0.0, 1.0), 30, rng)
    assert len(xs) >= 2
    assert np.all((0.0 <= xs) & (xs <= 1.0))
    assert np.all(np.diff(xs) >= 0)  # sorted by decision value
    assert np.allclose(fs, _tradeoff(xs))
    assert xs.max() - xs.min() >= 0.8
    # every member is nondominated by every other
    assert all(
        not dominates(fs[j], fs[i]) for i in range(len(xs)) for j in range(len(xs)) if i != j
    )


def test_evolve_converges_when_objectives_collapse():
    rng = np.random.default_rng(9)
    init = rng.random(24)
    xs, _ = nsga2_evolve(init, _collapsed, (0.0, 1.0), 30, rng)
    assert np.all(np.abs(xs - 0.5) <= 0.05)


def test_evolve_is_deterministic_per_seed():
    init = np.linspace(0.1, 0.9, 16)
    a = nsga2_evolve(init, _tradeoff, (0.0, 1.0), 12, np.random.default_rng(33))
    b = nsga2_evolve(init, _tradeoff, (0.0, 1.0), 12, np.random.default_rng(33))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    c = nsga2_evolve(init, _tradeoff, (0.0, 1.0), 12, np.random.default_rng(34))
    assert not np.array_equal(a[0], c[0])


def test_evolve_respects_bounds_under_wide_mutation():
    rng = np.random.default_rng(41)
    init = np.full(12, 2.5)
    xs, _ = nsga2_evolve(init, _tradeoff, (2.0, 3.0), 20, rng, eta_m=0.5)
    assert np.all((2.0 <= xs) & (xs <= 3.0))


def test_evolve_validation():
    rng = np.random.default_rng(1)
    with pytest.raises(ValueError, match="lo < hi"):
        nsga2_evolve(np.array([0.1, 0.2]), _tradeoff, (1.0, 1.0), 5, rng)
    with pytest.raises(ValueError, match="at least 2"):
        nsga2_evolve(np.array([0.1]), _tradeoff, (0.0, 1.0), 5, rng)
    with pytest.raises(ValueError, match="shape"):
        nsga2_evolve(np.array([0.1, 0.2]), lambda x: x, (0.0, 1.0), 5, rng)
