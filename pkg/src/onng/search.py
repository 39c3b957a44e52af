"""Best-first k-NN search over an edge-sorted graph.

The search keeps a frontier ordered by distance to the query and a result
set of at most ``k`` nodes whose worst distance is the search radius ``r``.
Nodes are expanded while they lie within ``r * (1 + epsilon)``. Each
expansion scans the node's edges in stored (shortest first) order and may be
cut off after ``e_p`` edges, where ``e_p`` either comes from the dynamic rule
``10 ** (we * epsilon) + e0`` or from an explicit override.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import Dataset, Graph, _dist

DEFAULT_HASH_BITS = 11
LEAF_CAPACITY = 100
SEEDS_PER_LEAF = 10


def hash_size(n: int, b: int = DEFAULT_HASH_BITS) -> int:
    """Visited-table size ``2 ** floor((floor(log2 n) + b) / 2)``."""
    if n < 1:
        raise ValueError("n must be positive")
    return 1 << ((n.bit_length() - 1 + b) // 2)


def effective_edge_limit(epsilon: float, e0: int, we: float) -> float:
    return 10.0 ** (we * epsilon) + e0


# -- visited set ----------------------------------------------------------
# Slots ``b`` hold the first id per hash value; later colliders go to a
# per-slot chain stored in a shared pool (``head``/``nxt``/``val``).


@numba.njit(cache=True)
def _vs_reset(b, head):
    b[:] = -1
    head[:] = -1


@numba.njit(cache=True)
def _vs_mark(b, head, nxt, val, used, i):
    h = i & (b.shape[0] - 1)
    if b[h] == -1:
        b[h] = i
        return nxt, val, used
    if b[h] == i:
        return nxt, val, used
    j = head[h]
    while j != -1:
        if val[j] == i:
            return nxt, val, used
        j = nxt[j]
    if used == val.shape[0]:
        nv = np.empty(2 * val.shape[0], dtype=val.dtype)
        nn = np.empty(2 * nxt.shape[0], dtype=nxt.dtype)
        nv[:used] = val
        nn[:used] = nxt
        val, nxt = nv, nn
    val[used] = i
    nxt[used] = head[h]
    head[h] = used
    return nxt, val, used + 1


@numba.njit(cache=True)
def _vs_is_marked(b, head, nxt, val, i):
    h = i & (b.shape[0] - 1)
    if b[h] == i:
        return True
    j = head[h]
    while j != -1:
        if val[j] == i:
            return True
        j = nxt[j]
    return False


class VisitedSet:
    """Per-query record of visited node ids.

    A power-of-two table keeps the first id seen for each hash value, so the
    common lookup is one masked index and one comparison; colliding ids spill
    into a per-slot chain.
    """

    def __init__(self, size: int):
        if size < 1 or size & (size - 1):
            raise ValueError("table size must be a power of two")
        self.b = np.full(size, -1, dtype=np.int64)
        self.head = np.full(size, -1, dtype=np.int64)
        self.nxt = np.empty(64, dtype=np.int64)
        self.val = np.empty(64, dtype=np.int64)
        self.used = 0

    @classmethod
    def for_nodes(cls, n: int, b: int = DEFAULT_HASH_BITS) -> "VisitedSet":
        return cls(hash_size(n, b))

    @property
    def size(self) -> int:
        return self.b.shape[0]

    def mark(self, i: int) -> None:
        self.nxt, self.val, self.used = _vs_mark(self.b, self.head, self.nxt, self.val, self.used, i)

    def is_marked(self, i: int) -> bool:
        return bool(_vs_is_marked(self.b, self.head, self.nxt, self.val, i))

    __contains__ = is_marked

    def overflow(self, h: int) -> list[int]:
        """Ids chained behind slot ``h``, oldest first."""
        out = []
        j = self.head[h]
        while j != -1:
            out.append(int(self.val[j]))
            j = self.nxt[j]
        return out[::-1]

    def clear(self) -> None:
        _vs_reset(self.b, self.head)
        self.used = 0


# -- search kernel --------------------------------------------------------


@numba.njit(cache=True)
def _knn_search(ids, lens, deg, data, metric, q, seeds, k, eps, ep, b, head, nxt, val, trace):
    """Returns (hit ids, hit distances, distance count, pool arrays, trace)."""
    _vs_reset(b, head)
    used = 0
    count = 0
    tr = np.empty(64 if trace else 0, dtype=np.int64)
    ntr = 0

    frontier = [(0.0, np.int64(0))]
    frontier.clear()
    result = [(0.0, np.int64(0))]  # max-heap via (-d, -id)
    result.clear()

    for j in range(seeds.shape[0]):
        s = np.int64(seeds[j])
        if s < 0 or _vs_is_marked(b, head, nxt, val, s):
            continue
        nxt, val, used = _vs_mark(b, head, nxt, val, used, s)
        d = _dist(metric, data[s], q)
        count += 1
        if trace:
            if ntr == tr.shape[0]:
                t2 = np.empty(2 * ntr, dtype=np.int64)
                t2[:ntr] = tr
                tr = t2
            tr[ntr] = s
            ntr += 1
        heapq.heappush(frontier, (d, s))
        heapq.heappush(result, (-d, -s))
        if len(result) > k:
            heapq.heappop(result)

    # unbounded eps keeps the whole frontier even when r is 0
    grow = np.inf if eps == np.inf else 1.0 + eps
    r = np.inf
    if len(result) == k:
        r = -result[0][0]
    re = np.inf if grow == np.inf else r * grow

    while len(frontier) > 0:
        ds, s = heapq.heappop(frontier)
        if ds > re:
            break
        p = 1
        for j in range(deg[s]):
            if p > ep:
                break
            n = np.int64(ids[s, j])
            if not _vs_is_marked(b, head, nxt, val, n):
                nxt, val, used = _vs_mark(b, head, nxt, val, used, n)
                d = _dist(metric, data[n], q)
                count += 1
                if trace:
                    if ntr == tr.shape[0]:
                        t2 = np.empty(2 * ntr, dtype=np.int64)
                        t2[:ntr] = tr
                        tr = t2
                    tr[ntr] = n
                    ntr += 1
                if d <= re:
                    heapq.heappush(frontier, (d, n))
                if d <= r:
                    heapq.heappush(result, (-d, -n))
                    if len(result) > k:
                        heapq.heappop(result)
                    if len(result) == k:
                        r = -result[0][0]
                        if grow != np.inf:
                            re = r * grow
            p += 1

    m = len(result)
    out = np.empty(m, dtype=np.int64)
    outd = np.empty(m, dtype=np.float64)
    for j in range(m - 1, -1, -1):
        nd, ni = heapq.heappop(result)
        out[j] = -ni
        outd[j] = -nd
    return out, outd, count, nxt, val, tr[:ntr]


@numba.njit(cache=True)
def _search_batch(ids, lens, deg, data, metric, queries, seeds, seed_cost, k, eps, ep, table_size):
    nq = queries.shape[0]
    hit_ids = np.full((nq, k), -1, dtype=np.int64)
    hit_d = np.full((nq, k), np.inf)
    counts = np.zeros(nq, dtype=np.int64)
    b = np.empty(table_size, dtype=np.int64)
    head = np.empty(table_size, dtype=np.int64)
    nxt = np.empty(256, dtype=np.int64)
    val = np.empty(256, dtype=np.int64)
    for i in range(nq):
        out, outd, c, nxt, val, _ = _knn_search(
            ids, lens, deg, data, metric, queries[i], seeds[i], k, eps, ep, b, head, nxt, val, False
        )
        hit_ids[i, : out.shape[0]] = out
        hit_d[i, : out.shape[0]] = outd
        counts[i] = c + seed_cost[i]
    return hit_ids, hit_d, counts


# -- parameters and results -------------------------------------------------


@dataclass(frozen=True)
class DynamicDegree:
    e0: int = 30
    we: float = 20.0

    def __post_init__(self):
        if self.e0 < 0 or not self.we > 0:
            raise ValueError("dynamic degree needs e0 >= 0 and we > 0")


@dataclass(frozen=True)
class SearchParams:
    k: int = 20
    epsilon: float = 0.1
    dynamic: DynamicDegree | None = None
    max_edges_override: int | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.dynamic is not None and self.max_edges_override is not None:
            raise ValueError("dynamic degree and an explicit edge limit are exclusive")
        if self.max_edges_override is not None and self.max_edges_override < 1:
            raise ValueError("max_edges_override must be positive")

    def edge_limit(self) -> float:
        if self.dynamic is not None:
            return effective_edge_limit(self.epsilon, self.dynamic.e0, self.dynamic.we)
        if self.max_edges_override is not None:
            return float(self.max_edges_override)
        return math.inf

    def with_epsilon(self, epsilon: float) -> "SearchParams":
        return SearchParams(self.k, epsilon, self.dynamic, self.max_edges_override)


@dataclass
class SearchResult:
    hits: list[tuple[int, float]]
    distance_computations: int
    trace: np.ndarray | None = None

    @property
    def ids(self) -> list[int]:
        return [i for i, _ in self.hits]


def _check_query(dataset: Dataset, q) -> np.ndarray:
    q = np.ascontiguousarray(q, dtype=np.float64)
    if q.shape != (dataset.dim,):
        raise ValueError(f"query has shape {q.shape}, dataset dim is {dataset.dim}")
    return q


def knn_search(
    graph: Graph,
    dataset: Dataset,
    seeds,
    q,
    params: SearchParams,
    *,
    visited: VisitedSet | None = None,
    trace: bool = False,
) -> SearchResult:
    """Search ``graph`` for the ``params.k`` nearest nodes to ``q``.

    Seeds are evaluated (and counted) first and marked visited, so no node's
    distance to ``q`` is computed twice. With ``trace=True`` the result also
    carries the ids in the order their distances were evaluated.
    """
    seeds = np.asarray(seeds, dtype=np.int64)
    if seeds.size == 0:
        raise ValueError("seed list is empty")
    q = _check_query(dataset, q)
    vs = visited or VisitedSet.for_nodes(max(graph.n, 1))
    out, outd, count, vs.nxt, vs.val, tr = _knn_search(
        graph.ids, graph.lens, graph.deg, dataset.vectors, int(dataset.metric), q, seeds,
        params.k, params.epsilon, params.edge_limit(), vs.b, vs.head, vs.nxt, vs.val, trace,
    )
    vs.used = 0
    hits = [(int(i), float(d)) for i, d in zip(out, outd)]
    return SearchResult(hits, int(count), tr if trace else None)


# -- seeds ------------------------------------------------------------------


@numba.njit(cache=True)
def _dists_from(data, metric, pivot, members):
    out = np.empty(members.shape[0])
    for j in range(members.shape[0]):
        out[j] = _dist(metric, data[members[j]], data[pivot])
    return out


@numba.njit(cache=True)
def _route(pivot, radius, inner, outer, leaf, data, metric, q):
    node = 0
    cost = 0
    while leaf[node] < 0:
        d = _dist(metric, data[pivot[node]], q)
        cost += 1
        if d <= radius[node]:
            node = inner[node]
        else:
            node = outer[node]
    return leaf[node], cost


@numba.njit(cache=True)
def _route_batch(pivot, radius, inner, outer, leaf, data, metric, queries, seed_ptr, seed_ids, width):
    nq = queries.shape[0]
    seeds = np.full((nq, width), -1, dtype=np.int64)
    costs = np.zeros(nq, dtype=np.int64)
    for i in range(nq):
        lf, c = _route(pivot, radius, inner, outer, leaf, data, metric, queries[i])
        a = seed_ptr[lf]
        m = seed_ptr[lf + 1] - a
        seeds[i, :m] = seed_ids[a : a + m]
        costs[i] = c
    return seeds, costs


class VpTree:
    """Vantage-point tree used only to pick seed nodes for a query.

    Internal nodes split their members at the median distance to a random
    pivot (``<=`` goes inner). Leaves hold at most ``leaf_capacity`` ids and
    cache the ``seeds_per_leaf`` members nearest to the leaf's own pivot.
    """

    def __init__(self, dataset: Dataset, seed: int = 0, leaf_capacity: int = LEAF_CAPACITY,
                 seeds_per_leaf: int = SEEDS_PER_LEAF):
        dataset.require_usable()
        self.dataset = dataset
        self.leaf_capacity = leaf_capacity
        self.seeds_per_leaf = seeds_per_leaf
        rng = np.random.default_rng(seed)
        pivot, radius, inner, outer, leaf = [], [], [], [], []
        leaf_members, leaf_pivots, leaf_seeds = [], [], []
        metric = int(dataset.metric)
        data = dataset.vectors

        def new_node():
            pivot.append(-1)
            radius.append(0.0)
            inner.append(-1)
            outer.append(-1)
            leaf.append(-1)
            return len(pivot) - 1

        stack = [(new_node(), np.arange(len(dataset), dtype=np.int64))]
        while stack:
            node, members = stack.pop()
            p = int(members[rng.integers(len(members))])
            d = _dists_from(data, metric, p, members)
            if len(members) <= leaf_capacity:
                order = np.lexsort((members, d))
                leaf[node] = len(leaf_members)
                leaf_members.append(members)
                leaf_pivots.append(p)
                leaf_seeds.append(members[order[:seeds_per_leaf]])
                continue
            order = np.lexsort((members, d))
            rad = d[order[(len(members) - 1) // 2]]
            mask = d <= rad
            if mask.all():
                # all distances tie; split by rank so recursion terminates
                mask = np.zeros(len(members), dtype=bool)
                mask[order[: len(members) // 2]] = True
            pivot[node], radius[node] = p, float(rad)
            a, b = new_node(), new_node()
            inner[node], outer[node] = a, b
            stack.append((b, members[~mask]))
            stack.append((a, members[mask]))

        self.pivot = np.array(pivot, dtype=np.int64)
        self.radius = np.array(radius, dtype=np.float64)
        self.inner = np.array(inner, dtype=np.int64)
        self.outer = np.array(outer, dtype=np.int64)
        self.leaf = np.array(leaf, dtype=np.int64)
        self.leaf_pivots = np.array(leaf_pivots, dtype=np.int64)
        self.leaf_ptr = np.concatenate(([0], np.cumsum([len(m) for m in leaf_members]))).astype(np.int64)
        self.leaf_ids = np.concatenate(leaf_members).astype(np.int64)
        self.seed_ptr = np.concatenate(([0], np.cumsum([len(s) for s in leaf_seeds]))).astype(np.int64)
        self.seed_ids = np.concatenate(leaf_seeds).astype(np.int64)

    @classmethod
    def from_arrays(cls, dataset: Dataset, arrays: dict) -> "VpTree":
        tree = cls.__new__(cls)
        tree.dataset = dataset
        for key, value in arrays.items():
            setattr(tree, key, value)
        tree.leaf_capacity = int(np.diff(tree.leaf_ptr).max()) if len(tree.leaf_ptr) > 1 else 0
        tree.seeds_per_leaf = int(np.diff(tree.seed_ptr).max()) if len(tree.seed_ptr) > 1 else 0
        return tree

    ARRAYS = ("pivot", "radius", "inner", "outer", "leaf", "leaf_pivots", "leaf_ptr", "leaf_ids",
              "seed_ptr", "seed_ids")

    def arrays(self) -> dict:
        return {name: getattr(self, name) for name in self.ARRAYS}

    @property
    def num_leaves(self) -> int:
        return len(self.leaf_pivots)

    def leaves(self) -> list[np.ndarray]:
        return [self.leaf_ids[a:b] for a, b in zip(self.leaf_ptr[:-1], self.leaf_ptr[1:])]

    def leaf_seeds(self, j: int) -> np.ndarray:
        return self.seed_ids[self.seed_ptr[j] : self.seed_ptr[j + 1]]

    def route(self, q) -> tuple[int, int]:
        """(leaf index, distance computations spent routing)."""
        q = _check_query(self.dataset, q)
        lf, cost = _route(self.pivot, self.radius, self.inner, self.outer, self.leaf,
                          self.dataset.vectors, int(self.dataset.metric), q)
        return int(lf), int(cost)

    def seeds(self, q) -> tuple[np.ndarray, int]:
        lf, cost = self.route(q)
        return self.leaf_seeds(lf).copy(), cost

    def seeds_batch(self, queries) -> tuple[np.ndarray, np.ndarray]:
        queries = np.ascontiguousarray(queries, dtype=np.float64)
        width = int(np.diff(self.seed_ptr).max())
        return _route_batch(self.pivot, self.radius, self.inner, self.outer, self.leaf,
                            self.dataset.vectors, int(self.dataset.metric), queries,
                            self.seed_ptr, self.seed_ids, width)


def vptree_build(dataset: Dataset, seed: int = 0) -> VpTree:
    return VpTree(dataset, seed)


def seeds_tree(tree: VpTree, q) -> tuple[list[int], int]:
    """Cached seeds of the leaf ``q`` routes to, plus the routing cost."""
    seeds, cost = tree.seeds(q)
    return seeds.tolist(), cost


def seeds_random(graph: Graph, count: int = SEEDS_PER_LEAF, rng_seed: int = 0) -> list[int]:
    if graph.n == 0:
        raise ValueError("graph is empty")
    if count > graph.n:
        raise ValueError(f"cannot draw {count} distinct seeds from {graph.n} nodes")
    rng = np.random.default_rng(rng_seed)
    return rng.choice(graph.n, size=count, replace=False).astype(int).tolist()


class Searcher:
    """Search front end bundling a graph, its vectors and a seed source.

    Seeds come from ``tree`` when given, otherwise from a fixed random draw
    of ``random_seeds`` nodes (the same draw for every query).
    """

    def __init__(self, graph: Graph, dataset: Dataset, tree: VpTree | None = None,
                 random_seeds: int = SEEDS_PER_LEAF, rng_seed: int = 0):
        if graph.n != len(dataset):
            raise ValueError("graph and dataset sizes differ")
        self.graph = graph
        self.dataset = dataset
        self.tree = tree
        self._random = None
        if tree is None:
            self._random = np.array(seeds_random(graph, min(random_seeds, graph.n), rng_seed), dtype=np.int64)
        self.table_size = hash_size(max(graph.n, 1))

    def seeds_batch(self, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.tree is not None:
            return self.tree.seeds_batch(queries)
        nq = len(queries)
        return np.tile(self._random, (nq, 1)), np.zeros(nq, dtype=np.int64)

    def search_batch(self, queries, params: SearchParams, seeds=None):
        """(ids, distances, distance computations) for every query row.

        Rows of ``ids`` are padded with -1 when fewer than ``k`` nodes were
        reached. ``seeds`` may carry a precomputed ``seeds_batch`` result.
        """
        queries = np.ascontiguousarray(queries, dtype=np.float64)
        if queries.ndim != 2 or queries.shape[1] != self.dataset.dim:
            raise ValueError("queries must be an (nq, dim) array")
        seed_mat, cost = seeds if seeds is not None else self.seeds_batch(queries)
        g = self.graph
        return _search_batch(g.ids, g.lens, g.deg, self.dataset.vectors, int(self.dataset.metric),
                             queries, seed_mat, cost, params.k, params.epsilon, params.edge_limit(),
                             self.table_size)

    def search(self, q, params: SearchParams) -> SearchResult:
        if self.tree is not None:
            seeds, cost = self.tree.seeds(q)
        else:
            seeds, cost = self._random, 0
        res = knn_search(self.graph, self.dataset, seeds, q, params)
        res.distance_computations += cost
        return res
