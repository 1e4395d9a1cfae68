"""Tuning the discretization scale with a surrogate-guided search loop.

The loop treats the solver as a black box T(s): discretize the real graph at
scale s, solve, measure wall time.  A Gaussian-process surrogate is fit to
log(runtime + 1e-3) with inputs normalized to [0, 1] and targets standardized;
a lower confidence bound built from the surrogate trades off against the
discretization error C(s) of the incumbent plans in a small NSGA-II run, and
the front member with the best normalized combined score becomes the next
true evaluation.  Timed-out evaluations are charged the full timeout as their
runtime, so the surrogate learns to avoid them.

The loop itself is solver-agnostic: it takes an eval function mapping s to
(runtime, success, paths) and an error function mapping (s, paths) to C(s),
which keeps it testable against synthetic objectives.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass, replace
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.optimize import minimize

from .cbs import Solution, SolveConfig, solve
from .graph import RealGraph, discretization_error, discretize, shortest_path
from .mapio import Instance
from .nsga import nsga2_evolve

__all__ = [
    "Observation",
    "SurrogatePosterior",
    "TuneConfig",
    "IterationRecord",
    "ParetoArchive",
    "TuneResult",
    "fit_surrogate",
    "lcb",
    "score_candidates",
    "tune",
    "tune_graph",
    "format_tune_report",
]

_LOG_SHIFT = 1e-3  # keeps log(runtime + shift) finite for instant solves
_MIN_JITTER = 1e-8


@dataclass(frozen=True)
class Observation:
    """One true evaluation of the solver at scale s."""

    s: float
    runtime: float
    success: bool
    error: float


class SurrogatePosterior:
    """GP posterior over standardized log runtime as a function of s.

    Squared-exponential kernel on s normalized to [0, 1].  mean/std accept a
    scalar or an array and return the same shape; std is the posterior
    standard deviation of the latent function (observation noise excluded),
    clamped at zero.
    """

    def __init__(
        self,
        x_norm: np.ndarray,
        alpha: np.ndarray,
        chol_lower: np.ndarray,
        ell: float,
        sf2: float,
        sn2: float,
        x_lo: float,
        x_span: float,
        y_mean: float,
        y_std: float,
    ):
        self._x = x_norm
        self._alpha = alpha
        self._L = chol_lower
        self.ell = ell
        self.sf2 = sf2
        self.sn2 = sn2
        self._x_lo = x_lo
        self._x_span = x_span
        self.y_mean = y_mean
        self.y_std = y_std

    def _kvec(self, s) -> tuple[np.ndarray, bool]:
        arr = np.atleast_1d(np.asarray(s, dtype=float))
        q = (arr - self._x_lo) / self._x_span
        diff = q[:, None] - self._x[None, :]
        return self.sf2 * np.exp(-0.5 * (diff / self.ell) ** 2), np.isscalar(s) or np.ndim(s) == 0

    def mean(self, s):
        k, scalar = self._kvec(s)
        mu = k @ self._alpha
        return float(mu[0]) if scalar else mu

    def std(self, s):
        k, scalar = self._kvec(s)
        v = solve_triangular(self._L, k.T, lower=True)
        var = np.maximum(self.sf2 - np.sum(v * v, axis=0), 0.0)
        sd = np.sqrt(var)
        return float(sd[0]) if scalar else sd


def _nll(log_params: np.ndarray, d2: np.ndarray, y: np.ndarray, fixed_sn2: float | None) -> float:
    ell, sf2 = math.exp(log_params[0]), math.exp(log_params[1])
    sn2 = fixed_sn2 if fixed_sn2 is not None else math.exp(log_params[2])
    n = len(y)
    K = sf2 * np.exp(-0.5 * d2 / (ell * ell)) + max(sn2, _MIN_JITTER) * np.eye(n)
    try:
        c, low = cho_factor(K, lower=True)
    except np.linalg.LinAlgError:
        return 1e25
    alpha = cho_solve((c, low), y)
    return float(0.5 * y @ alpha + np.sum(np.log(np.diag(c))) + 0.5 * n * math.log(2 * math.pi))


def fit_surrogate(
    observations: Sequence[Observation],
    bounds: tuple[float, float] | None = None,
    *,
    noise_variance: float | None = None,
    restarts: int = 8,
    seed: int = 0,
) -> SurrogatePosterior:
    """Fit the GP to the observations by marginal-likelihood maximization.

    Needs at least 2 observations.  Hyperparameters (length scale, signal
    variance, and noise variance unless noise_variance pins it) are optimized
    by multi-start L-BFGS-B with seeded restart draws, so a fixed seed yields
    a fixed posterior.  Failed evaluations participate with their penalty
    runtime.
    """
    if len(observations) < 2:
        raise ValueError(f"surrogate needs >= 2 observations, got {len(observations)}")
    xs = np.array([o.s for o in observations], dtype=float)
    y_raw = np.log(np.array([o.runtime for o in observations], dtype=float) + _LOG_SHIFT)
    x_lo, x_hi = bounds if bounds is not None else (float(xs.min()), float(xs.max()))
    x_span = x_hi - x_lo
    if x_span <= 0:
        x_span = 1.0
    x_norm = (xs - x_lo) / x_span
    y_mean = float(y_raw.mean())
    y_std = float(y_raw.std())
    if y_std == 0.0:
        y_std = 1.0
    y = (y_raw - y_mean) / y_std
    diff = x_norm[:, None] - x_norm[None, :]
    d2 = diff * diff

    log_bounds = [(math.log(1e-2), math.log(10.0)), (math.log(1e-4), math.log(1e2))]
    start0 = [math.log(0.3), math.log(1.0)]
    if noise_variance is None:
        log_bounds.append((math.log(1e-8), math.log(10.0)))
        start0.append(math.log(1e-2))
    rng = np.random.default_rng(seed)
    best_params: np.ndarray | None = None
    best_val = math.inf
    for r in range(max(1, restarts)):
        if r == 0:
            p0 = np.array(start0)
        else:
            p0 = np.array([rng.uniform(lo, hi) for lo, hi in log_bounds])
        res = minimize(
            _nll,
            p0,
            args=(d2, y, noise_variance),
            method="L-BFGS-B",
            bounds=log_bounds,
        )
        val = float(res.fun)
        if val < best_val:
            best_val = val
            best_params = np.asarray(res.x)
    assert best_params is not None
    ell = math.exp(best_params[0])
    sf2 = math.exp(best_params[1])
    sn2 = noise_variance if noise_variance is not None else math.exp(best_params[2])
    n = len(y)
    K = sf2 * np.exp(-0.5 * d2 / (ell * ell)) + max(sn2, _MIN_JITTER) * np.eye(n)
    c, low = cho_factor(K, lower=True)
    alpha = cho_solve((c, low), y)
    L = np.tril(c) if low else np.triu(c).T
    return SurrogatePosterior(x_norm, alpha, L, ell, sf2, sn2, x_lo, x_span, y_mean, y_std)


def lcb(post: SurrogatePosterior, s, t: int, delta: float):
    """Lower confidence bound mu(s) - sqrt(beta_t) sigma(s).

    beta_t = 2 log(t^2.5 pi^2 / (3 delta)) for a scalar decision variable,
    clamped at zero so early iterations cannot flip the bound's sign.
    """
    if t < 1:
        raise ValueError(f"iteration index t must be >= 1, got {t}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    beta = 2.0 * math.log(t**2.5 * math.pi**2 / (3.0 * delta))
    root = math.sqrt(max(beta, 0.0))
    return post.mean(s) - root * post.std(s)


def score_candidates(post: SurrogatePosterior, s_values, t: int, delta: float, errors) -> np.ndarray:
    """Combined pick score over a candidate population: both terms min-max normalized.

    Lower is better.  With a single candidate, or a degenerate spread, a
    term's normalized contribution is zero.
    """
    a = np.atleast_1d(np.asarray(lcb(post, np.asarray(s_values, dtype=float), t, delta), dtype=float))
    c = np.atleast_1d(np.asarray(errors, dtype=float))
    if a.shape != c.shape:
        raise ValueError(f"lcb and error arrays disagree: {a.shape} vs {c.shape}")

    def norm(v: np.ndarray) -> np.ndarray:
        span = v.max() - v.min()
        if len(v) <= 1 or span <= 0:
            return np.zeros_like(v)
        return (v - v.min()) / span

    return norm(a) + norm(c)


class ParetoArchive:
    """Non-dominated (runtime, error) pairs seen so far, with their scales."""

    def __init__(self) -> None:
        self._points: list[tuple[float, tuple[float, float]]] = []

    def insert(self, s: float, objs: tuple[float, float]) -> bool:
        """Add a point unless dominated; drop members the new point dominates."""
        f = np.asarray(objs, dtype=float)
        keep: list[tuple[float, tuple[float, float]]] = []
        for old_s, old_f in self._points:
            of = np.asarray(old_f)
            if bool(np.all(of <= f)) and bool(np.any(of < f)):
                return False  # dominated by an existing point
            if not (bool(np.all(f <= of)) and bool(np.any(f < of))):
                keep.append((old_s, old_f))
        keep.append((s, (float(f[0]), float(f[1]))))
        self._points = keep
        return True

    def __iter__(self) -> Iterator[tuple[float, tuple[float, float]]]:
        return iter(self._points)

    def __len__(self) -> int:
        return len(self._points)


@dataclass(frozen=True)
class TuneConfig:
    s_min: float
    s_max: float
    budget: int = 25
    population: int = 20
    generations: int = 30
    delta: float = 0.1
    eval_timeout: float | None = None
    restarts: int = 8

    def __post_init__(self) -> None:
        if not (0 < self.s_min <= self.s_max and math.isfinite(self.s_max)):
            raise ValueError(f"need 0 < s_min <= s_max, got ({self.s_min}, {self.s_max})")
        if self.budget < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")
        if self.population < 4:
            raise ValueError(f"population must be >= 4, got {self.population}")
        if self.generations < 1:
            raise ValueError(f"generations must be >= 1, got {self.generations}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")


@dataclass(frozen=True)
class IterationRecord:
    t: int
    s: float
    runtime: float
    error: float
    success: bool
    lcb: float | None  # None for bootstrap evaluations
    score: float | None


@dataclass(frozen=True)
class TuneResult:
    best_s: float | None  # None when every evaluation failed
    observations: tuple[Observation, ...]
    records: tuple[IterationRecord, ...]
    pareto: tuple[tuple[float, tuple[float, float]], ...]
    regret_trace: tuple[tuple[float, float], ...]  # cumulative (runtime, error) regret


EvalFn = Callable[[float], tuple[float, bool, list[list[int]] | None]]
ErrorFn = Callable[[float, list[list[int]]], float]


def tune(
    eval_fn: EvalFn,
    error_fn: ErrorFn,
    config: TuneConfig,
    *,
    seed: int = 0,
    initial_paths: list[list[int]] | None = None,
) -> TuneResult:
    """Run the surrogate-guided loop for config.budget true evaluations.

    eval_fn(s) returns (runtime, success, paths or None); successful paths
    become the incumbent used by error_fn(s, paths) for the error objective.
    Bootstrap evaluations cover s_min, s_max, and their geometric mean; after
    that every pick comes from an NSGA-II front over (lcb, error) scored by
    score_candidates.  Identical seeds and a deterministic eval_fn give an
    identical observation sequence.
    """
    rng = np.random.default_rng(seed)
    incumbent = initial_paths
    obs: list[Observation] = []
    records: list[IterationRecord] = []
    archive = ParetoArchive()

    def c_of(s: float) -> float:
        return error_fn(float(s), incumbent) if incumbent is not None else 0.0

    def observe(s: float, lcb_v: float | None, score_v: float | None) -> None:
        nonlocal incumbent
        runtime, success, paths = eval_fn(float(s))
        if success and paths is not None:
            incumbent = paths
        err = c_of(s)
        o = Observation(float(s), float(runtime), bool(success), float(err))
        obs.append(o)
        archive.insert(o.s, (o.runtime, o.error))
        records.append(IterationRecord(len(obs), o.s, o.runtime, o.error, o.success, lcb_v, score_v))

    lo, hi = config.s_min, config.s_max
    if lo == hi:
        observe(lo, None, None)
        return _wrap_up(obs, records, archive)
    bootstrap = [lo, hi, math.sqrt(lo * hi)][: config.budget]
    for s0 in bootstrap:
        observe(s0, None, None)
    while len(obs) < config.budget:
        t_next = len(obs) + 1
        post = fit_surrogate(obs, bounds=(lo, hi), restarts=config.restarts, seed=seed * 100003 + t_next)
        pop0 = _biased_population(rng, obs, config)

        def objective(xs: np.ndarray) -> np.ndarray:
            a = np.atleast_1d(np.asarray(lcb(post, xs, t_next, config.delta), dtype=float))
            c = np.array([c_of(float(s)) for s in xs])
            return np.column_stack([a, c])

        front_x, front_f = nsga2_evolve(pop0, objective, (lo, hi), config.generations, rng)
        scores = score_candidates(post, front_x, t_next, config.delta, front_f[:, 1])
        pick = int(np.argmin(scores))
        observe(float(front_x[pick]), float(front_f[pick, 0]), float(scores[pick]))
    return _wrap_up(obs, records, archive)


def _biased_population(rng: np.random.Generator, obs: list[Observation], config: TuneConfig) -> np.ndarray:
    """Half log-uniform over [s_min, s_max], half Gaussian jitter around elites."""
    n = config.population
    n_uniform = n // 2
    n_elite = n - n_uniform
    lo, hi = config.s_min, config.s_max
    uniform = np.exp(rng.uniform(math.log(lo), math.log(hi), size=n_uniform))
    ranked = sorted(obs, key=lambda o: (not o.success, o.runtime, o.error, o.s))
    sigma = 0.1 * (hi - lo)
    elites = np.array(
        [ranked[i % len(ranked)].s + rng.normal(0.0, sigma) for i in range(n_elite)]
    )
    return np.clip(np.concatenate([uniform, elites]), lo, hi)


def _wrap_up(obs: list[Observation], records: list[IterationRecord], archive: ParetoArchive) -> TuneResult:
    successes = [o for o in obs if o.success]
    best_s = min(successes, key=lambda o: (o.runtime, o.error, o.s)).s if successes else None
    runtimes = np.array([o.runtime for o in obs])
    errors = np.array([o.error for o in obs])
    r_best = runtimes.min()
    e_best = errors.min()
    trace = tuple(
        (float(c1), float(c2))
        for c1, c2 in zip(np.cumsum(runtimes - r_best), np.cumsum(errors - e_best))
    )
    return TuneResult(best_s, tuple(obs), tuple(records), tuple(archive), trace)


def tune_graph(
    instance: Instance,
    config: TuneConfig,
    *,
    solve_config: SolveConfig | None = None,
    seed: int = 0,
) -> TuneResult:
    """Tune the discretization scale for one instance on a real-weighted graph.

    Each evaluation discretizes at s, solves the integer instance with the
    per-evaluation timeout, and reports measured wall time (the timeout value
    itself when the solver times out).  The incumbent starts as the
    unconstrained single-agent shortest paths so the error objective is
    defined before the first success.
    """
    g = instance.graph
    if not isinstance(g, RealGraph):
        raise TypeError("tune_graph expects the instance on a real-weighted graph")
    base = solve_config if solve_config is not None else SolveConfig()
    if config.eval_timeout is not None:
        base = replace(base, timeout=config.eval_timeout)

    def eval_fn(s: float) -> tuple[float, bool, list[list[int]] | None]:
        g_int = discretize(g, s)
        inst = replace(instance, graph=g_int)
        t0 = _time.perf_counter()
        result = solve(inst, base)
        rt = _time.perf_counter() - t0
        if isinstance(result, Solution):
            return rt, True, [p.vertices() for p in result.plans]
        if result.reason == "timeout" and config.eval_timeout is not None:
            rt = config.eval_timeout
        return rt, False, None

    def error_fn(s: float, paths: list[list[int]]) -> float:
        return discretization_error(g, s, paths)

    initial = []
    for a in range(instance.n_agents):
        p = shortest_path(g, instance.starts[a], instance.goals[a])
        if p is not None:
            initial.append(p)
    return tune(eval_fn, error_fn, config, seed=seed, initial_paths=initial or None)


def format_tune_report(result: TuneResult) -> str:
    """CSV report, one row per true evaluation."""
    lines = ["t,s,runtime_s,error,success,lcb,score"]
    for r in result.records:
        lines.append(
            ",".join(
                [
                    str(r.t),
                    repr(r.s),
                    repr(r.runtime),
                    repr(r.error),
                    "true" if r.success else "false",
                    "" if r.lcb is None else repr(r.lcb),
                    "" if r.score is None else repr(r.score),
                ]
            )
        )
    return "\n".join(lines) + "\n"
