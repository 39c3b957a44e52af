"""Plain-Python reference implementations used as test oracles.

Graphs here are ``dict[int, list[tuple[float, int]]]`` (length, target),
kept sorted; nothing is shared with the package's kernels.
"""

import math

import numpy as np


def euclid(a, b):
    return math.sqrt(sum((float(x) - float(y)) ** 2 for x, y in zip(a, b)))


def to_ref(graph):
    return {u: sorted((float(w), int(t)) for t, w in zip(graph.neighbors(u), graph.lengths(u)))
            for u in range(graph.n)}


def ref_edges(ref):
    return {(u, t) for u, row in ref.items() for _, t in row}


def exact_knng(vectors, k, metric=euclid):
    """Exact k-NN graph as a reference dict, float32-rounded lengths."""
    n = len(vectors)
    g = {}
    for u in range(n):
        cand = sorted((float(np.float32(metric(vectors[u], vectors[v]))), v) for v in range(n) if v != u)
        g[u] = cand[:k]
    return g


def scan_knn(vectors, q, k):
    """Second, independent exhaustive scan (pure Python)."""
    d = sorted((euclid(v, q), i) for i, v in enumerate(vectors))
    return [i for _, i in d[:k]]


def adjusted(ref, eo, ei):
    """Union of each node's eo shortest edges and reversed ei shortest edges."""
    out = {u: {} for u in ref}
    for u, row in ref.items():
        for w, t in row[:eo]:
            out[u][t] = w
        for w, t in row[:ei]:
            out[t][u] = w
    return {u: sorted((w, t) for t, w in row.items()) for u, row in out.items()}


def constrained_trace(ref, eo, ei):
    """Step-by-step trace of the constrained adjustment; returns
    (final graph, phase-1 graph, rescued edge set)."""
    tk = adjusted(ref, 0, ei)
    order = sorted(tk, key=lambda u: (len(tk[u]), u))
    sel = {u: [] for u in ref}
    indeg = {u: 0 for u in ref}
    rescued = set()
    for o in order:
        for w, n in tk[o]:
            ok = indeg[n] < ei and len(sel[o]) < eo
            if indeg[n] == 0 or ok:
                sel[o].append((w, n))
                indeg[n] += 1
                if not ok:
                    rescued.add((o, n))
    phase1 = {u: sorted(row) for u, row in sel.items()}
    final = {u: list(row) for u, row in phase1.items()}
    for o in ref:
        have = {t for _, t in final[o]}
        for w, n in ref[o]:
            if len(final[o]) >= eo:
                break
            if n not in have:
                final[o].append((w, n))
                have.add(n)
    return {u: sorted(row) for u, row in final.items()}, phase1, rescued


def path_adjusted(ref):
    """Round-based path adjustment on reference dicts; returns (graph, witnesses)."""
    pending = {u: list(row) for u, row in ref.items()}
    kept = {u: [] for u in ref}
    witnesses = {}
    while any(pending.values()):
        for n in sorted(pending):
            if not pending[n]:
                continue
            w_nd, nd = pending[n].pop(0)
            via = None
            for _, m in kept[n]:
                for w2, t in kept[m]:
                    if t == nd and w2 < w_nd:
                        via = m
                        break
                if via is not None:
                    break
            if via is None:
                kept[n].append((w_nd, nd))
            else:
                witnesses[(n, nd)] = via
    return kept, witnesses


def knn_search_ref(ref, vectors, seeds, q, k, eps, ep=math.inf, metric=euclid):
    """Literal best-first search with seeds evaluated and marked up front.

    Returns (sorted [(dist, id)], number of distance evaluations)."""
    visited = set()
    count = 0
    frontier = []
    result = []
    for s in seeds:
        if s in visited:
            continue
        visited.add(s)
        d = metric(vectors[s], q)
        count += 1
        frontier.append((d, s))
        result.append((d, s))
        result.sort()
        del result[k:]
    r = result[-1][0] if len(result) == k else math.inf

    def bound():
        return math.inf if math.isinf(eps) else r * (1 + eps)

    while frontier:
        frontier.sort()
        ds, s = frontier.pop(0)
        if ds > bound():
            break
        p = 1
        for _, n in ref[s]:
            if p > ep:
                break
            if n not in visited:
                visited.add(n)
                d = metric(vectors[n], q)
                count += 1
                if d <= bound():
                    frontier.append((d, n))
                if d <= r:
                    result.append((d, n))
                    result.sort()
                    del result[k:]
                    if len(result) == k:
                        r = result[-1][0]
            p += 1
    return result, count


def reachable(ref, seeds):
    seen = set(seeds)
    stack = list(seeds)
    while stack:
        u = stack.pop()
        for _, t in ref[u]:
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return seen
