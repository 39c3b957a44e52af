"""Command-line entry point: ``onng <command> ...``.

Exit codes: 0 success, 2 input-format error, 3 unreachable precision,
4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

import numpy as np

from . import io as onng_io
from .bench import CSV_HEADER, scaling_study, sweep
from .construction import ConstructionParams, aknng_from_anng, construct_anng, construct_graph
from .core import Dataset, graph_stats, validate_graph
from .optimizer import OptimizerConfig, TargetRange, UnreachablePrecision, optimize_degrees
from .search import DynamicDegree, SearchParams, Searcher, VpTree
from .truth import GroundTruth

EXIT_FORMAT = 2
EXIT_UNREACHABLE = 3
EXIT_INVARIANT = 4

log = logging.getLogger("onng")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _dynamic(args) -> DynamicDegree | None:
    return DynamicDegree(args.e0, args.we) if args.dynamic else None


def _truth(path, queries: Dataset) -> GroundTruth:
    ids = onng_io.read_ivecs(path)
    if len(ids) != len(queries):
        raise onng_io.FormatError(f"{path} has {len(ids)} rows for {len(queries)} queries")
    return GroundTruth(ids, np.full(ids.shape, np.nan))


def _load_index(path):
    graph, dataset, tree = onng_io.load_index(path)
    validate_graph(graph, dataset)
    return graph, dataset, tree


def cmd_build(args):
    data = onng_io.load_vectors(args.data, args.metric)
    data.require_usable()
    anng = construct_anng(data, args.kc, args.epsilon_c, seed=args.seed)
    tree = None if args.no_tree else VpTree(data, seed=args.seed)
    onng_io.save_index(args.out, anng, data, tree)
    print(f"built ANNG over {len(data)} vectors: {anng.num_edges} edges -> {args.out}")


def cmd_adjust(args):
    anng, data, tree = _load_index(args.index)
    params = ConstructionParams(kc=args.kc, eo=args.eo, ei=args.ei, constrained=args.constrained,
                                path_adjust=not args.no_path_adjust)
    graph = construct_graph(anng, params)
    validate_graph(graph, data)
    onng_io.save_index(args.out, graph, data, tree or VpTree(data, seed=args.seed))
    print(f"adjusted graph: {graph.num_edges} edges, mean outdegree {graph.deg.mean():.2f} -> {args.out}")


def cmd_optimize(args):
    anng, data, tree = _load_index(args.index)
    queries = onng_io.load_vectors(args.queries, data.metric)
    cfg = OptimizerConfig(step=args.step, queries=queries.vectors, truth=_truth(args.truth, queries))
    aknng = aknng_from_anng(anng, args.kc)
    res = optimize_degrees(aknng, data, TargetRange(args.pl, args.pu), cfg,
                           constrained=args.constrained, dynamic=_dynamic(args), k=args.k,
                           tree=tree or VpTree(data, seed=args.seed),
                           path_adjust=not args.no_path_adjust)
    if args.trace:
        res.write_trace(args.trace)
    print(json.dumps({"eo": res.eo, "ei": res.ei, "loss": res.loss, "evaluations": len(res.trace)}))


def cmd_search(args):
    graph, data, tree = _load_index(args.index)
    queries = onng_io.load_vectors(args.queries, data.metric)
    searcher = Searcher(graph, data, tree, rng_seed=args.seed)
    params = SearchParams(k=args.k, epsilon=args.epsilon, dynamic=_dynamic(args),
                          max_edges_override=args.max_edges)
    ids, dist, counts = searcher.search_batch(queries.vectors, params)
    if args.out:
        onng_io.write_ivecs(args.out, ids)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["query", "rank", "id", "distance"])
        for qi in range(len(ids)):
            for rank, (i, d) in enumerate(zip(ids[qi], dist[qi])):
                if i >= 0:
                    w.writerow([qi, rank, int(i), repr(float(d))])
    log.info("mean distance computations %.1f", counts.mean())


def cmd_gt(args):
    data = onng_io.load_vectors(args.data, args.metric)
    queries = onng_io.load_vectors(args.queries, args.metric)
    truth = GroundTruth.compute(data, queries.vectors, args.k)
    onng_io.write_ivecs(args.out, truth.ids)
    print(f"ground truth for {len(queries)} queries (k={truth.k}) -> {args.out}")


def cmd_bench(args):
    graph, data, tree = _load_index(args.index)
    queries = onng_io.load_vectors(args.queries, data.metric)
    truth = _truth(args.truth, queries)
    searcher = Searcher(graph, data, tree, rng_seed=args.seed)
    params = SearchParams(k=args.k, epsilon=0.0, dynamic=_dynamic(args))
    curve = sweep(searcher, queries.vectors, truth, _floats(args.epsilons), params, args.label,
                  repeats=args.repeats)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            curve.to_csv(fh)
    else:
        curve.to_csv(sys.stdout)


def cmd_stats(args):
    graph, data, _ = _load_index(args.index)
    s = graph_stats(graph, data)
    print(json.dumps({
        "nodes": graph.n,
        "edges": graph.num_edges,
        "mean_outdegree": s.mean_outdegree,
        "mean_top5_outdegree": s.mean_top5_outdegree,
        "mean_bottom5_indegree": s.mean_bottom5_indegree,
        "mean_indegree_distance": s.mean_indegree_distance,
    }, indent=2))


def cmd_scaling(args):
    data = onng_io.load_vectors(args.data, args.metric)
    queries = onng_io.load_vectors(args.queries, args.metric)
    params = ConstructionParams(kc=args.kc, epsilon_c=args.epsilon_c, eo=args.eo, ei=args.ei,
                                constrained=args.constrained)
    rows = scaling_study(data, queries.vectors, _ints(args.sizes), params, args.recall, k=args.k,
                         dynamic=_dynamic(args), seed=args.seed)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["n", "epsilon", "precision", "mean_computations"])
        for r in rows:
            w.writerow([r.n, repr(r.epsilon), repr(r.precision), repr(r.mean_computations)])
    finally:
        if out is not sys.stdout:
            out.close()


def _add_dynamic(p, default_on: bool):
    p.add_argument("--dynamic", dest="dynamic", action="store_true", default=default_on,
                   help="cap explored edges per node at 10**(we*eps)+e0")
    p.add_argument("--no-dynamic", dest="dynamic", action="store_false")
    p.add_argument("--e0", type=int, default=30)
    p.add_argument("--we", type=float, default=20.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="onng", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    ap.add_argument("--verbose", "-v", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="dataset -> ANNG index")
    p.add_argument("data")
    p.add_argument("--out", required=True)
    p.add_argument("--metric", default="euclidean", choices=["euclidean", "angular"])
    p.add_argument("--kc", type=int, default=50)
    p.add_argument("--epsilon-c", type=float, default=0.1)
    p.add_argument("--no-tree", action="store_true")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("adjust", help="ANNG index -> degree- and path-adjusted index")
    p.add_argument("index")
    p.add_argument("--out", required=True)
    p.add_argument("--kc", type=int, default=50)
    p.add_argument("--eo", type=int, required=True)
    p.add_argument("--ei", type=int, required=True)
    p.add_argument("--constrained", action="store_true")
    p.add_argument("--no-path-adjust", action="store_true")
    p.set_defaults(func=cmd_adjust)

    p = sub.add_parser("optimize", help="hill-climb eo/ei for an ANNG index")
    p.add_argument("index")
    p.add_argument("--queries", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--kc", type=int, default=50)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--pl", type=float, default=0.90)
    p.add_argument("--pu", type=float, default=0.98)
    p.add_argument("--step", type=int, default=5)
    p.add_argument("--constrained", action="store_true")
    p.add_argument("--no-path-adjust", action="store_true")
    p.add_argument("--trace", help="write per-candidate CSV trace here")
    _add_dynamic(p, default_on=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("search", help="k-NN search for each query")
    p.add_argument("index")
    p.add_argument("--queries", required=True)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--max-edges", type=int, default=None)
    p.add_argument("--out", help="write result ids as ivecs instead of CSV on stdout")
    _add_dynamic(p, default_on=False)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("gt", help="exact ground truth by full scan")
    p.add_argument("data")
    p.add_argument("--queries", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--metric", default="euclidean", choices=["euclidean", "angular"])
    p.set_defaults(func=cmd_gt)

    p = sub.add_parser("bench", help="precision / computation curve as CSV")
    p.add_argument("index")
    p.add_argument("--queries", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--epsilons", default="0,0.02,0.04,0.06,0.08,0.1,0.15,0.2")
    p.add_argument("--label", default="graph")
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--out")
    _add_dynamic(p, default_on=False)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stats", help="degree statistics of an index")
    p.add_argument("index")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("scaling", help="computations at fixed recall over a size ladder")
    p.add_argument("data")
    p.add_argument("--queries", required=True)
    p.add_argument("--sizes", required=True, help="comma-separated ascending sizes")
    p.add_argument("--metric", default="euclidean", choices=["euclidean", "angular"])
    p.add_argument("--kc", type=int, default=50)
    p.add_argument("--epsilon-c", type=float, default=0.1)
    p.add_argument("--eo", type=int, default=10)
    p.add_argument("--ei", type=int, default=40)
    p.add_argument("--constrained", action="store_true")
    p.add_argument("--recall", type=float, default=0.9)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--out")
    _add_dynamic(p, default_on=True)
    p.set_defaults(func=cmd_scaling)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (onng_io.FormatError, FileNotFoundError) as exc:
        print(f"onng: input error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except UnreachablePrecision as exc:
        print(f"onng: {exc}", file=sys.stderr)
        return EXIT_UNREACHABLE
    except AssertionError as exc:
        print(f"onng: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return 0


if __name__ == "__main__":
    sys.exit(main())
