"""NSGA-II for a scalar decision variable under two minimization objectives.

Plain-function kernel: fast non-dominated sorting, crowding distance, binary
tournament selection, simulated binary crossover, and polynomial mutation,
with (mu + lambda) truncation each generation.  The evolve loop returns the
final population's first front, which the tuner scans for its next sample.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

__all__ = [
    "dominates",
    "fast_nondominated_sort",
    "crowding_distance",
    "nsga2_evolve",
]


def dominates(a: np.ndarray, b: np.ndarray) -> bool:
    """Pareto dominance for minimization: no worse everywhere, better somewhere."""
    return bool(np.all(a <= b) and np.any(a < b))


def fast_nondominated_sort(objs: np.ndarray) -> list[list[int]]:
    """Deb's O(M N^2) sort; returns fronts as index lists, best front first."""
    objs = np.asarray(objs, dtype=float)
    n = len(objs)
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    dom_count = np.zeros(n, dtype=int)
    for p in range(n):
        for q in range(p + 1, n):
            if dominates(objs[p], objs[q]):
                dominated_by[p].append(q)
                dom_count[q] += 1
            elif dominates(objs[q], objs[p]):
                dominated_by[q].append(p)
                dom_count[p] += 1
    fronts: list[list[int]] = [[p for p in range(n) if dom_count[p] == 0]]
    while True:
        nxt: list[int] = []
        for p in fronts[-1]:
            for q in dominated_by[p]:
                dom_count[q] -= 1
                if dom_count[q] == 0:
                    nxt.append(q)
        if not nxt:
            break
        fronts.append(sorted(nxt))
    return fronts


def crowding_distance(objs: np.ndarray, front: list[int]) -> np.ndarray:
    """Crowding distance of each front member, in front order; extremes get inf."""
    objs = np.asarray(objs, dtype=float)
    m = len(front)
    dist = np.zeros(m)
    if m <= 2:
        dist[:] = np.inf
        return dist
    sub = objs[front]
    for k in range(sub.shape[1]):
        order = np.argsort(sub[:, k], kind="stable")
        lo, hi = sub[order[0], k], sub[order[-1], k]
        dist[order[0]] = dist[order[-1]] = np.inf
        if hi > lo:
            gaps = (sub[order[2:], k] - sub[order[:-2], k]) / (hi - lo)
            dist[order[1:-1]] += gaps
    return dist


def _sbx(p1: float, p2: float, eta: float, rng: np.random.Generator) -> tuple[float, float]:
    u = rng.random()
    if u <= 0.5:
        beta = (2.0 * u) ** (1.0 / (eta + 1.0))
    else:
        beta = (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta + 1.0))
    c1 = 0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2)
    c2 = 0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2)
    return c1, c2


def _poly_mutate(x: float, lo: float, hi: float, eta: float, rng: np.random.Generator) -> float:
    u = rng.random()
    if u < 0.5:
        delta = (2.0 * u) ** (1.0 / (eta + 1.0)) - 1.0
    else:
        delta = 1.0 - (2.0 * (1.0 - u)) ** (1.0 / (eta + 1.0))
    return x + delta * (hi - lo)


def _rank_and_crowd(objs: np.ndarray) -> tuple[np.ndarray, np.ndarray, list[list[int]]]:
    fronts = fast_nondominated_sort(objs)
    rank = np.empty(len(objs), dtype=int)
    crowd = np.empty(len(objs))
    for r, front in enumerate(fronts):
        rank[front] = r
        crowd[front] = crowding_distance(objs, front)
    return rank, crowd, fronts


def _tournament(rank: np.ndarray, crowd: np.ndarray, rng: np.random.Generator) -> int:
    a, b = rng.integers(0, len(rank), size=2)
    if rank[a] != rank[b]:
        return int(a if rank[a] < rank[b] else b)
    if crowd[a] != crowd[b]:
        return int(a if crowd[a] > crowd[b] else b)
    return int(a)


def nsga2_evolve(
    initial: np.ndarray,
    objective: Callable[[np.ndarray], np.ndarray],
    bounds: tuple[float, float],
    generations: int,
    rng: np.random.Generator,
    *,
    eta_c: float = 15.0,
    eta_m: float = 20.0,
    p_crossover: float = 0.9,
    p_mutation: float = 1.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Evolve a scalar population and return (first-front values, their objectives).

    objective maps an (n,) array of decision values to an (n, 2) array to
    minimize.  The mutation rate default is 1 because the decision variable
    is one-dimensional.  The returned front is sorted by decision value.
    """
    lo, hi = bounds
    if not hi > lo:
        raise ValueError(f"bounds must satisfy lo < hi, got ({lo}, {hi})")
    x = np.clip(np.asarray(initial, dtype=float), lo, hi)
    n = len(x)
    if n < 2:
        raise ValueError(f"population needs at least 2 members, got {n}")
    f = _eval_objs(objective, x)
    for _ in range(generations):
        rank, crowd, _ = _rank_and_crowd(f)
        kids: list[float] = []
        while len(kids) < n:
            p1 = x[_tournament(rank, crowd, rng)]
            p2 = x[_tournament(rank, crowd, rng)]
            if rng.random() <= p_crossover:
                c1, c2 = _sbx(p1, p2, eta_c, rng)
            else:
                c1, c2 = p1, p2
            if rng.random() <= p_mutation:
                c1 = _poly_mutate(c1, lo, hi, eta_m, rng)
            if rng.random() <= p_mutation:
                c2 = _poly_mutate(c2, lo, hi, eta_m, rng)
            kids.extend((c1, c2))
        cx = np.clip(np.array(kids[:n]), lo, hi)
        cf = _eval_objs(objective, cx)
        pool_x = np.concatenate([x, cx])
        pool_f = np.concatenate([f, cf])
        rank, crowd, fronts = _rank_and_crowd(pool_f)
        chosen: list[int] = []
        for front in fronts:
            if len(chosen) + len(front) <= n:
                chosen.extend(front)
            else:
                room = n - len(chosen)
                fc = crowding_distance(pool_f, front)
                order = np.argsort(-fc, kind="stable")
                chosen.extend(front[i] for i in order[:room])
                break
        x = pool_x[chosen]
        f = pool_f[chosen]
    first = fast_nondominated_sort(f)[0]
    order = np.argsort(x[first], kind="stable")
    idx = [first[i] for i in order]
    return x[idx], f[idx]


def _eval_objs(objective: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    f = np.asarray(objective(x), dtype=float)
    if f.shape != (len(x), 2):
        raise ValueError(f"objective must return shape ({len(x)}, 2), got {f.shape}")
    return f
