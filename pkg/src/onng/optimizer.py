"""Choosing the expected out/in degrees of an adjusted graph.

A candidate ``(eo, ei)`` is scored by the mean of ``log10`` distance
computations over a target precision range. The range endpoints are located
by bisection on epsilon, the span between them is sampled at equally spaced
epsilons, and ``log10 C`` is integrated over the measured precisions with the
trapezoid rule. A coordinate hill climb on the ``step`` grid then looks for
the cheapest candidate.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .construction import adjust_path, degree_adjust
from .core import Dataset, Graph
from .search import DynamicDegree, SearchParams, Searcher, VpTree
from .truth import GroundTruth, batch_recall

log = logging.getLogger(__name__)


class UnreachablePrecision(RuntimeError):
    """The target precision was not reached within the epsilon limit."""


@dataclass(frozen=True)
class TargetRange:
    pl: float = 0.90
    pu: float = 0.98

    def __post_init__(self):
        if not 0 < self.pl < self.pu < 1:
            raise ValueError("need 0 < pl < pu < 1")


@dataclass(frozen=True)
class MeasurePoint:
    epsilon: float
    precision: float
    mean_computations: float


@dataclass
class OptimizerConfig:
    step: int = 5
    binary_search_tol: float = 0.005
    n_samples: int = 10
    eps_start: float = 0.1
    eps_limit: float = 10.0
    max_bisections: int = 40
    queries: np.ndarray | None = None
    truth: GroundTruth | None = None

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("n_samples must be at least 2")
        if self.step < 1:
            raise ValueError("step must be positive")


class Evaluator:
    """Callable ``epsilon -> MeasurePoint`` over a fixed query batch.

    Seeds are routed once; measurements are cached per epsilon since the
    counts are deterministic.
    """

    def __init__(self, searcher: Searcher, queries, truth: GroundTruth, params: SearchParams):
        queries = np.ascontiguousarray(queries, dtype=np.float64)
        if len(queries) == 0:
            raise ValueError("empty query batch")
        if len(truth) != len(queries):
            raise ValueError("ground truth does not match the query batch")
        self.searcher = searcher
        self.queries = queries
        self.truth = truth
        self.params = params
        self._seeds = searcher.seeds_batch(queries)
        self._cache: dict[float, MeasurePoint] = {}

    def search(self, epsilon: float):
        return self.searcher.search_batch(self.queries, self.params.with_epsilon(epsilon), self._seeds)

    def __call__(self, epsilon: float) -> MeasurePoint:
        epsilon = float(epsilon)
        point = self._cache.get(epsilon)
        if point is None:
            ids, _, counts = self.search(epsilon)
            prec = float(batch_recall(ids, self.truth, self.params.k).mean())
            point = MeasurePoint(epsilon, prec, float(counts.mean()))
            self._cache[epsilon] = point
        return point


def measure(searcher: Searcher, queries, truth: GroundTruth, epsilon: float,
            params: SearchParams) -> MeasurePoint:
    """Mean precision and mean distance computations at one epsilon."""
    return Evaluator(searcher, queries, truth, params)(epsilon)


def epsilon_for_precision(measure_fn: Callable[[float], MeasurePoint], target_p: float,
                          tol: float = 0.005, side: str = "lower", eps_start: float = 0.1,
                          eps_limit: float = 10.0, max_bisections: int = 40) -> float:
    """Epsilon whose precision sits just on ``side`` of ``target_p``.

    ``side="lower"`` looks for ``target - tol < p <= target``; ``"upper"`` for
    ``target <= p < target + tol``. If even epsilon 0 overshoots, 0 is
    returned. Raises ``UnreachablePrecision`` when doubling epsilon from
    ``eps_start`` passes ``eps_limit`` without reaching the target.
    """
    if side not in ("lower", "upper"):
        raise ValueError("side must be 'lower' or 'upper'")

    def inside(p):
        if side == "lower":
            return target_p - tol < p <= target_p
        return target_p <= p < target_p + tol

    def above(p):
        return p > target_p if side == "lower" else p >= target_p + tol

    p0 = measure_fn(0.0).precision
    if inside(p0) or above(p0):
        return 0.0
    lo, hi = 0.0, eps_start
    while True:
        p = measure_fn(hi).precision
        if inside(p):
            return hi
        if p >= target_p:
            break
        lo = hi
        hi *= 2
        if hi > eps_limit:
            raise UnreachablePrecision(
                f"precision {p:.4f} at epsilon {lo:g} is below the target {target_p}")
    for _ in range(max_bisections):
        mid = 0.5 * (lo + hi)
        p = measure_fn(mid).precision
        if inside(p):
            return mid
        if above(p):
            hi = mid
        else:
            lo = mid
    # precision jumps across the window; settle for the closer bracket end
    plo, phi = measure_fn(lo).precision, measure_fn(hi).precision
    best = lo if abs(plo - target_p) <= abs(phi - target_p) else hi
    log.warning("no epsilon within %.4f of precision %.4f; using %.6g", tol, target_p, best)
    return best


def integrate_log_computations(points) -> float:
    """Mean of ``log10 C`` over the precision span covered by ``points``.

    Points are ordered by precision and equal precisions are merged by
    averaging ``log10 C``. A span of zero width yields the plain mean.
    """
    by_p: dict[float, list[float]] = {}
    for pt in points:
        if not pt.mean_computations > 0:
            raise ValueError("mean computations must be positive")
        by_p.setdefault(float(pt.precision), []).append(math.log10(pt.mean_computations))
    ps = sorted(by_p)
    ys = [math.fsum(by_p[p]) / len(by_p[p]) for p in ps]
    if len(ps) == 1:
        return ys[0]
    area = math.fsum((ps[i + 1] - ps[i]) * (ys[i] + ys[i + 1]) / 2 for i in range(len(ps) - 1))
    return area / math.fsum(ps[i + 1] - ps[i] for i in range(len(ps) - 1))


@dataclass
class LossResult:
    value: float
    eps_l: float
    eps_u: float
    points: list[MeasurePoint] = field(default_factory=list)


def loss(measure_fn: Callable[[float], MeasurePoint], target: TargetRange = TargetRange(),
         cfg: OptimizerConfig | None = None) -> LossResult:
    cfg = cfg or OptimizerConfig()
    kw = dict(tol=cfg.binary_search_tol, eps_start=cfg.eps_start, eps_limit=cfg.eps_limit,
              max_bisections=cfg.max_bisections)
    eps_l = epsilon_for_precision(measure_fn, target.pl, side="lower", **kw)
    eps_u = epsilon_for_precision(measure_fn, target.pu, side="upper", **kw)
    if eps_u < eps_l:
        eps_l, eps_u = eps_u, eps_l
    points = [measure_fn(float(e)) for e in np.linspace(eps_l, eps_u, cfg.n_samples)]
    return LossResult(integrate_log_computations(points), eps_l, eps_u, points)


# -- hill climbing --------------------------------------------------------


@dataclass
class ClimbRecord:
    eo: int
    ei: int
    loss: float
    eps_l: float = math.nan
    eps_u: float = math.nan


@dataclass
class OptimizationResult:
    eo: int
    ei: int
    loss: float
    trace: list[ClimbRecord]

    def write_trace(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eo", "ei", "loss", "eps_l", "eps_u"])
            for r in self.trace:
                w.writerow([r.eo, r.ei, repr(r.loss), repr(r.eps_l), repr(r.eps_u)])


def hill_climb(evaluate: Callable[[int, int], ClimbRecord | float], start: tuple[int, int],
               step: int, lower: int, upper: int) -> OptimizationResult:
    """Axis-neighbour hill climb on the grid ``{lower, lower+step, ...} <= upper``.

    ``evaluate`` returns a loss (``inf`` marks an infeasible point) or a full
    record. Each grid point is evaluated at most once.
    """
    cache: dict[tuple[int, int], ClimbRecord] = {}
    trace: list[ClimbRecord] = []

    def score(pt):
        if pt not in cache:
            r = evaluate(*pt)
            if not isinstance(r, ClimbRecord):
                r = ClimbRecord(pt[0], pt[1], float(r))
            cache[pt] = r
            trace.append(r)
        return cache[pt].loss

    cur = (min(max(start[0], lower), upper), min(max(start[1], lower), upper))
    cur_loss = score(cur)
    while True:
        best, best_loss = None, cur_loss
        for dx, dy in ((-step, 0), (step, 0), (0, -step), (0, step)):
            pt = (cur[0] + dx, cur[1] + dy)
            if not (lower <= pt[0] <= upper and lower <= pt[1] <= upper):
                continue
            v = score(pt)
            if v < best_loss:
                best, best_loss = pt, v
        if best is None:
            break
        cur, cur_loss = best, best_loss
    if math.isinf(cur_loss):
        raise UnreachablePrecision(f"no feasible candidate around {cur}")
    return OptimizationResult(cur[0], cur[1], cur_loss, trace)


def optimize_degrees(aknng: Graph, dataset: Dataset, target: TargetRange = TargetRange(),
                     cfg: OptimizerConfig | None = None, constrained: bool = False,
                     dynamic: DynamicDegree | None = DynamicDegree(), k: int = 20,
                     tree: VpTree | None = None, start: tuple[int, int] | None = None,
                     path_adjust: bool = True) -> OptimizationResult:
    """Hill-climb ``(eo, ei)`` for the full adjustment pipeline on ``aknng``.

    Every candidate graph is rebuilt from ``aknng`` (degree adjustment, then
    path adjustment) and scored on ``cfg.queries``/``cfg.truth``. Candidates
    whose precision cannot reach the target range score ``inf``.
    """
    cfg = cfg or OptimizerConfig()
    if cfg.queries is None or cfg.truth is None:
        raise ValueError("optimizer config needs queries and ground truth")
    kc = int(aknng.deg.max())
    lower, upper = cfg.step, kc - cfg.step
    if upper < lower:
        raise ValueError(f"AKNNG degree {kc} leaves no room for step {cfg.step}")
    tree = tree or VpTree(dataset)
    params = SearchParams(k=k, epsilon=0.0, dynamic=dynamic)

    def evaluate(eo, ei):
        g = degree_adjust(aknng, eo, ei, constrained)
        if path_adjust:
            g = adjust_path(g)
        ev = Evaluator(Searcher(g, dataset, tree), cfg.queries, cfg.truth, params)
        try:
            res = loss(ev, target, cfg)
        except UnreachablePrecision:
            log.info("eo=%d ei=%d: target precision unreachable", eo, ei)
            return ClimbRecord(eo, ei, math.inf)
        log.info("eo=%d ei=%d: loss %.5f (eps %.4g..%.4g)", eo, ei, res.value, res.eps_l, res.eps_u)
        return ClimbRecord(eo, ei, res.value, res.eps_l, res.eps_u)

    start = start or (2 * cfg.step, 2 * cfg.step)
    return hill_climb(evaluate, start, cfg.step, lower, upper)
