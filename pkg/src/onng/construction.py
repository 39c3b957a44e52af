"""Graph construction: incremental ANNG, degree adjustment and path adjustment."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .core import Dataset, Graph, _insert_sorted
from .search import SEEDS_PER_LEAF, _knn_search, hash_size


@dataclass(frozen=True)
class ConstructionParams:
    kc: int = 50
    epsilon_c: float = 0.1
    eo: int = 10
    ei: int = 40
    constrained: bool = False
    path_adjust: bool = True

    def validate(self) -> None:
        if self.kc < 1 or self.epsilon_c < 0 or self.eo < 0 or self.ei < 0:
            raise ValueError("construction parameters out of range")
        if self.kc <= max(self.eo, self.ei):
            raise ValueError(f"kc={self.kc} must exceed both eo={self.eo} and ei={self.ei}")


# -- ANNG -----------------------------------------------------------------


@numba.njit(cache=True)
def _anng_insert_range(ids, lens, deg, data, metric, kc, eps, start, seed, table_size, nseeds):
    """Insert nodes ``start..n-1``. Stops early, returning the node it could not
    insert, when some adjacency row would overflow; otherwise returns n."""
    n = data.shape[0]
    b = np.empty(table_size, dtype=np.int64)
    head = np.empty(table_size, dtype=np.int64)
    nxt = np.empty(256, dtype=np.int64)
    val = np.empty(256, dtype=np.int64)
    cap = ids.shape[1]
    for o in range(start, n):
        if o == 0:
            continue
        m = min(nseeds, o)
        seeds = np.empty(m, dtype=np.int64)
        if m == o:
            for j in range(m):
                seeds[j] = j
        else:
            np.random.seed(seed + o)
            j = 0
            while j < m:
                c = np.random.randint(0, o)
                dup = False
                for t in range(j):
                    if seeds[t] == c:
                        dup = True
                        break
                if not dup:
                    seeds[j] = c
                    j += 1
        q = data[o].astype(np.float64)
        hits, hd, _, nxt, val, _ = _knn_search(
            ids, lens, deg, data, metric, q, seeds, kc, eps, np.inf, b, head, nxt, val, False
        )
        if deg[o] + hits.shape[0] > cap:
            return o
        for j in range(hits.shape[0]):
            if deg[hits[j]] >= cap:
                return o
        for j in range(hits.shape[0]):
            length = np.float32(hd[j])
            _insert_sorted(ids, lens, deg, o, hits[j], length)
            _insert_sorted(ids, lens, deg, hits[j], o, length)
    return n


def construct_anng(dataset: Dataset, kc: int, epsilon_c: float = 0.1, seed: int = 0,
                   num_seeds: int = SEEDS_PER_LEAF) -> Graph:
    """Incrementally built approximate neighborhood graph.

    Nodes are inserted in dataset order. Each new node searches the graph
    built so far (random seeds among earlier nodes, unlimited edge scan) for
    its ``kc`` nearest and is linked to each of them in both directions.
    """
    n = len(dataset)
    if n == 0:
        raise ValueError("dataset is empty")
    g = Graph(n, max(2 * kc, 8))
    metric = int(dataset.metric)
    table = hash_size(n)
    pos = 0
    while pos < n:
        pos = _anng_insert_range(g.ids, g.lens, g.deg, dataset.vectors, metric, kc, float(epsilon_c),
                                 pos, seed, table, num_seeds)
        if pos < n:
            g.grow(2 * g.ids.shape[1])
    return g.compact()


# -- static degree adjustment ---------------------------------------------


def construct_adjusted_graph(g: Graph, eo: int, ei: int) -> Graph:
    """Keep each node's ``eo`` shortest edges and add the reverse of its
    ``ei`` shortest edges.

    Both kinds come from the same shortest-first scan of the node's
    adjacency, which covers ``max(eo, ei)`` edges; repeated edges collapse.
    """
    if eo < 0 or ei < 0:
        raise ValueError("eo and ei must be non-negative")
    src, dst, lens = g.edge_arrays()
    rank = np.arange(len(src)) - np.concatenate(([0], np.cumsum(g.deg)[:-1]))[src] if len(src) else src
    fwd = rank < eo
    rev = rank < ei
    return Graph.from_edges(
        g.n,
        np.concatenate((src[fwd], dst[rev])),
        np.concatenate((dst[fwd], src[rev])),
        np.concatenate((lens[fwd], lens[rev])),
    )


@numba.njit(cache=True)
def _constraint_phase1(t_ids, t_lens, t_deg, eo, ei):
    n = t_deg.shape[0]
    order = np.argsort(t_deg, kind="mergesort")
    total = 0
    for u in range(n):
        total += t_deg[u]
    src = np.empty(total, dtype=np.int64)
    dst = np.empty(total, dtype=np.int64)
    ln = np.empty(total, dtype=np.float32)
    rescue = np.zeros(total, dtype=np.bool_)
    indeg = np.zeros(n, dtype=np.int64)
    outdeg = np.zeros(n, dtype=np.int64)
    m = 0
    for oi in range(n):
        o = order[oi]
        for j in range(t_deg[o]):
            t = t_ids[o, j]
            fits = indeg[t] < ei and outdeg[o] < eo
            if indeg[t] == 0 or fits:
                src[m] = o
                dst[m] = t
                ln[m] = t_lens[o, j]
                rescue[m] = not fits
                indeg[t] += 1
                outdeg[o] += 1
                m += 1
    return src[:m], dst[:m], ln[:m], rescue[:m]


@numba.njit(cache=True)
def _constraint_refill(g_ids, g_lens, g_deg, p_ids, p_deg, eo):
    n = g_deg.shape[0]
    total = 0
    for u in range(n):
        total += min(g_deg[u], eo)
    src = np.empty(total, dtype=np.int64)
    dst = np.empty(total, dtype=np.int64)
    ln = np.empty(total, dtype=np.float32)
    m = 0
    for o in range(n):
        have = p_deg[o]
        for j in range(g_deg[o]):
            if have >= eo:
                break
            t = g_ids[o, j]
            present = False
            for x in range(p_deg[o]):
                if p_ids[o, x] == t:
                    present = True
                    break
            if not present:
                src[m] = o
                dst[m] = t
                ln[m] = g_lens[o, j]
                m += 1
                have += 1
    return src[:m], dst[:m], ln[:m]


def constrained_selection(g: Graph, eo: int, ei: int) -> tuple[Graph, np.ndarray]:
    """First phase of the constrained adjustment.

    Returns the selected graph and, in ``edge_arrays`` order, a mask of the
    edges accepted only because their target had no incoming edge yet.
    """
    t = construct_adjusted_graph(g, 0, ei)
    src, dst, ln, rescue = _constraint_phase1(t.ids, t.lens, t.deg, eo, ei)
    sel = Graph.from_edges(g.n, src, dst, ln)
    # phase-1 pairs are unique, so from_edges only reorders them
    return sel, rescue[np.lexsort((dst, ln, src))]


def construct_adjusted_graph_with_constraint(g: Graph, eo: int, ei: int) -> Graph:
    """Degree adjustment that keeps outdegrees near ``eo``.

    Nodes are visited in ascending outdegree of the reversed graph (reverse
    budget ``ei``). Each reversed edge ``o -> n`` is accepted when ``n`` has
    no incoming edge yet, or when ``n`` is under ``ei`` incoming and ``o``
    under ``eo`` outgoing. Nodes left under ``eo`` are then topped up with
    their shortest original edges.
    """
    if eo < 0 or ei < 0:
        raise ValueError("eo and ei must be non-negative")
    sel, _ = constrained_selection(g, eo, ei)
    s1, d1, l1 = sel.edge_arrays()
    s2, d2, l2 = _constraint_refill(g.ids, g.lens, g.deg, sel.ids, sel.deg, eo)
    return Graph.from_edges(g.n, np.concatenate((s1, s2)), np.concatenate((d1, d2)),
                            np.concatenate((l1, l2)))


# -- path adjustment ------------------------------------------------------


@numba.njit(cache=True)
def _has_path(p_ids, p_lens, p_deg, ns, nd, direct):
    """Index of a node w with ns->w, w->nd kept and |w nd| < direct, else -1."""
    for a in range(p_deg[ns]):
        w = p_ids[ns, a]
        for c in range(p_deg[w]):
            if p_lens[w, c] >= direct:
                break
            if p_ids[w, c] == nd:
                return w
    return -1


@numba.njit(cache=True)
def _adjust_path(ids, lens, deg):
    n = deg.shape[0]
    cap = ids.shape[1]
    p_ids = np.full((n, cap), -1, dtype=np.int32)
    p_lens = np.zeros((n, cap), dtype=np.float32)
    p_deg = np.zeros(n, dtype=np.int32)
    total = 0
    maxdeg = 0
    for u in range(n):
        total += deg[u]
        maxdeg = max(maxdeg, deg[u])
    removed = np.empty((total, 3), dtype=np.int64)
    nr = 0
    # round r handles every node's r-th shortest edge, nodes in id order
    for r in range(maxdeg):
        for u in range(n):
            if r >= deg[u]:
                continue
            v = ids[u, r]
            w = _has_path(p_ids, p_lens, p_deg, u, v, lens[u, r])
            if w < 0:
                p_ids[u, p_deg[u]] = v
                p_lens[u, p_deg[u]] = lens[u, r]
                p_deg[u] += 1
            else:
                removed[nr, 0] = u
                removed[nr, 1] = v
                removed[nr, 2] = w
                nr += 1
    return p_ids, p_lens, p_deg, removed[:nr]


def has_path(g: Graph, ns: int, nd: int, dataset: Dataset | None = None) -> bool:
    """Whether some ``n`` in ``N(ns)`` links to ``nd`` with ``|n nd| < |ns nd|``.

    ``|ns nd|`` is the stored edge length when ``ns -> nd`` is an edge of
    ``g``; otherwise it is computed from ``dataset``.
    """
    hit = np.nonzero(g.neighbors(ns) == nd)[0]
    if len(hit):
        direct = g.lengths(ns)[hit[0]]
    elif dataset is not None:
        direct = dataset.distance(ns, nd)
    else:
        raise ValueError(f"{ns} -> {nd} is not an edge; pass the dataset to measure it")
    return _has_path(g.ids, g.lens, g.deg, ns, nd, np.float32(direct)) >= 0


def adjust_path(g: Graph, *, witnesses: bool = False):
    """Drop edges that have a two-hop detour whose second leg is shorter.

    Edges are examined shortest-first in rounds over all nodes, each checked
    against the graph kept so far. With ``witnesses=True`` also returns an
    ``(m, 3)`` array of ``(source, target, via)`` for every removed edge.
    """
    p_ids, p_lens, p_deg, removed = _adjust_path(g.ids, g.lens, g.deg)
    out = Graph(g.n, 1)
    out.ids, out.lens, out.deg = p_ids, p_lens, p_deg
    out = out.compact()
    return (out, removed) if witnesses else out


# -- pipeline -------------------------------------------------------------


def aknng_from_anng(anng: Graph, kc: int) -> Graph:
    return construct_adjusted_graph(anng, kc, 0)


def degree_adjust(aknng: Graph, eo: int, ei: int, constrained: bool = False) -> Graph:
    if constrained:
        return construct_adjusted_graph_with_constraint(aknng, eo, ei)
    return construct_adjusted_graph(aknng, eo, ei)


def construct_graph(anng: Graph, params: ConstructionParams, *, return_aknng: bool = False):
    """Truncate the ANNG to ``kc`` edges, adjust degrees, then adjust paths."""
    params.validate()
    aknng = aknng_from_anng(anng, params.kc)
    adjusted = degree_adjust(aknng, params.eo, params.ei, params.constrained)
    if params.path_adjust:
        adjusted = adjust_path(adjusted)
    return (adjusted, aknng) if return_aknng else adjusted
