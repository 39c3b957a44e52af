"""Precision vs. distance-computation curves and scaling measurements."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from .construction import ConstructionParams, construct_anng, construct_graph
from .core import Dataset, Graph
from .optimizer import Evaluator, OptimizerConfig, epsilon_for_precision
from .search import DynamicDegree, SearchParams, Searcher, VpTree
from .truth import GroundTruth, batch_recall, brute_force_knn, recall

__all__ = [
    "CurvePoint", "EvalCurve", "brute_force_knn", "recall", "sweep", "computations_at",
    "build_pipeline", "scaling_study", "ScalingRow", "CSV_HEADER",
]

CSV_HEADER = ("graph_label", "epsilon", "precision", "mean_computations", "mean_query_us")


@dataclass(frozen=True)
class CurvePoint:
    epsilon: float
    precision: float
    mean_computations: float
    mean_query_us: float


@dataclass
class EvalCurve:
    graph_label: str
    points: list[CurvePoint] = field(default_factory=list)

    def rows(self):
        for p in sorted(self.points, key=lambda p: p.epsilon):
            yield (self.graph_label, repr(p.epsilon), repr(p.precision),
                   repr(p.mean_computations), f"{p.mean_query_us:.3f}")

    def to_csv(self, fh=None, header: bool = True) -> str | None:
        out = fh or io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        if header:
            w.writerow(CSV_HEADER)
        w.writerows(self.rows())
        return None if fh else out.getvalue()

    def precisions(self) -> np.ndarray:
        return np.array([p.precision for p in self.points])

    def computations(self) -> np.ndarray:
        return np.array([p.mean_computations for p in self.points])


def sweep(searcher: Searcher, queries, truth: GroundTruth, epsilons, params: SearchParams,
          label: str = "graph", repeats: int = 3) -> EvalCurve:
    """Measure one curve point per epsilon.

    Counts and precision come from a single deterministic pass; the query
    time is the median of ``repeats`` timed single-threaded passes.
    """
    epsilons = sorted(float(e) for e in epsilons)
    if not epsilons:
        raise ValueError("no epsilons given")
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    seeds = searcher.seeds_batch(queries)
    curve = EvalCurve(label)
    for eps in epsilons:
        p = params.with_epsilon(eps)
        ids, _, counts = searcher.search_batch(queries, p, seeds)
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            searcher.search_batch(queries, p)
            times.append(time.perf_counter() - t0)
        prec = float(batch_recall(ids, truth, params.k).mean())
        curve.points.append(CurvePoint(eps, prec, float(counts.mean()),
                                       1e6 * float(np.median(times)) / len(queries)))
    return curve


def computations_at(curve: EvalCurve, precision: float) -> float:
    """Mean computations at ``precision``, linearly interpolated between the
    curve's adjacent points (ordered by precision). NaN outside the curve."""
    pts = sorted(curve.points, key=lambda p: (p.precision, p.mean_computations))
    ps = [p.precision for p in pts]
    cs = [p.mean_computations for p in pts]
    if not pts or precision < ps[0] or precision > ps[-1]:
        return float("nan")
    for i in range(len(ps)):
        if ps[i] == precision:
            return cs[i]
        if ps[i] > precision:
            t = (precision - ps[i - 1]) / (ps[i] - ps[i - 1])
            return cs[i - 1] + t * (cs[i] - cs[i - 1])
    return cs[-1]


@dataclass
class Pipeline:
    anng: Graph
    aknng: Graph
    graph: Graph
    tree: VpTree


def build_pipeline(dataset: Dataset, params: ConstructionParams, seed: int = 0) -> Pipeline:
    anng = construct_anng(dataset, params.kc, params.epsilon_c, seed=seed)
    graph, aknng = construct_graph(anng, params, return_aknng=True)
    return Pipeline(anng, aknng, graph, VpTree(dataset, seed=seed))


@dataclass(frozen=True)
class ScalingRow:
    n: int
    epsilon: float
    precision: float
    mean_computations: float


def scaling_study(dataset: Dataset, queries, sizes, params: ConstructionParams,
                  target_recall: float = 0.9, k: int = 20,
                  dynamic: DynamicDegree | None = DynamicDegree(), seed: int = 0,
                  cfg: OptimizerConfig | None = None) -> list[ScalingRow]:
    """Mean computations at ``target_recall`` for prefixes of ``dataset``.

    For each size the pipeline is rebuilt on the first ``n`` vectors and
    epsilon is tuned to the smallest value reaching the target recall
    (upper-side bisection).
    """
    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise ValueError("sizes must be ascending")
    cfg = cfg or OptimizerConfig()
    rows = []
    for n in sizes:
        if n > len(dataset):
            raise ValueError(f"size {n} exceeds dataset of {len(dataset)}")
        sub = dataset.subset(n)
        pipe = build_pipeline(sub, params, seed=seed)
        truth = GroundTruth.compute(sub, queries, k)
        ev = Evaluator(Searcher(pipe.graph, sub, pipe.tree), queries, truth,
                       SearchParams(k=k, epsilon=0.0, dynamic=dynamic))
        eps = epsilon_for_precision(ev, target_recall, cfg.binary_search_tol, side="upper",
                                    eps_start=cfg.eps_start, eps_limit=cfg.eps_limit)
        pt = ev(eps)
        rows.append(ScalingRow(n, eps, pt.precision, pt.mean_computations))
    return rows
