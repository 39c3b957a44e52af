"""Vector storage, distance metrics and the edge-sorted directed graph."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numba
import numpy as np


class MetricKind(enum.IntEnum):
    EUCLIDEAN = 0
    ANGULAR = 1

    @classmethod
    def parse(cls, value: "MetricKind | str | int") -> "MetricKind":
        if isinstance(value, MetricKind):
            return value
        if isinstance(value, str):
            try:
                return cls[value.upper()]
            except KeyError:
                raise ValueError(f"unknown metric {value!r}") from None
        return cls(int(value))


@numba.njit(cache=True, fastmath=False)
def _dist(metric, a, b):
    # float64 accumulation regardless of storage dtype
    if metric == 0:
        s = 0.0
        for i in range(a.shape[0]):
            t = np.float64(a[i]) - np.float64(b[i])
            s += t * t
        return math.sqrt(s)
    dot = 0.0
    na = 0.0
    nb = 0.0
    for i in range(a.shape[0]):
        x = np.float64(a[i])
        y = np.float64(b[i])
        dot += x * y
        na += x * x
        nb += y * y
    c = dot / math.sqrt(na * nb)
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    return math.acos(c)


def distance(metric: MetricKind | str, a, b) -> float:
    """Distance between two vectors under ``metric``.

    Euclidean is the L2 norm of the difference; angular is the arccos of the
    clamped cosine similarity and is undefined for zero vectors.
    """
    metric = MetricKind.parse(metric)
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if metric is MetricKind.ANGULAR and (not a.any() or not b.any()):
        raise ValueError("angular distance is undefined for a zero vector")
    return float(_dist(int(metric), a, b))


class Dataset:
    """Dense float32 vectors addressed by 0-based node id."""

    def __init__(self, vectors, metric: MetricKind | str = MetricKind.EUCLIDEAN, dim: int | None = None):
        arr = np.asarray(vectors, dtype=np.float32)
        if arr.size == 0:
            arr = arr.reshape(0, dim or 0)
        if arr.ndim != 2:
            raise ValueError("vectors must form a 2-d array")
        if dim is not None and arr.shape[1] != dim:
            raise ValueError(f"expected dim {dim}, got {arr.shape[1]}")
        if not np.isfinite(arr).all():
            raise ValueError("vectors must be finite")
        self.vectors = np.ascontiguousarray(arr)
        self.vectors.setflags(write=False)
        self.metric = MetricKind.parse(metric)
        if self.metric is MetricKind.ANGULAR and len(arr) and not np.any(arr, axis=1).all():
            raise ValueError("angular metric does not admit zero vectors")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def __getitem__(self, i):
        return self.vectors[i]

    def require_usable(self) -> None:
        if len(self) == 0 or self.dim <= 0:
            raise ValueError("dataset is empty or has no dimensionality")

    def distance(self, i: int, j: int) -> float:
        return float(_dist(int(self.metric), self.vectors[i], self.vectors[j]))

    def distances_to(self, q, ids=None) -> np.ndarray:
        """float64 distances from ``q`` to the selected (default: all) vectors."""
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (self.dim,):
            raise ValueError(f"query has shape {q.shape}, dataset dim is {self.dim}")
        x = self.vectors if ids is None else self.vectors[np.asarray(ids)]
        x = x.astype(np.float64)
        if self.metric is MetricKind.EUCLIDEAN:
            return np.sqrt(((x - q) ** 2).sum(axis=1))
        cos = (x @ q) / (np.linalg.norm(x, axis=1) * np.linalg.norm(q))
        return np.arccos(np.clip(cos, -1.0, 1.0))

    def subset(self, n: int) -> "Dataset":
        return Dataset(self.vectors[:n], self.metric)


@numba.njit(cache=True)
def _insert_sorted(ids, lens, deg, s, t, length):
    """Insert s->t into the padded row keeping (length, id) order. Returns
    1 if inserted, 0 if present, -1 if the row is full."""
    d = deg[s]
    pos = d
    for j in range(d):
        if ids[s, j] == t:
            return 0
    for j in range(d):
        if lens[s, j] > length or (lens[s, j] == length and ids[s, j] > t):
            pos = j
            break
    if d >= ids.shape[1]:
        return -1
    for j in range(d, pos, -1):
        ids[s, j] = ids[s, j - 1]
        lens[s, j] = lens[s, j - 1]
    ids[s, pos] = t
    lens[s, pos] = length
    deg[s] = d + 1
    return 1


class Graph:
    """Directed graph with per-node adjacency sorted by (length, target).

    Adjacency lives in padded arrays: row ``u`` of ``ids``/``lens`` holds the
    first ``deg[u]`` edges of node ``u``. Lengths are float32, matching the
    on-disk index layout.
    """

    def __init__(self, n: int, capacity: int = 8):
        self.ids = np.full((n, max(capacity, 1)), -1, dtype=np.int32)
        self.lens = np.zeros((n, max(capacity, 1)), dtype=np.float32)
        self.deg = np.zeros(n, dtype=np.int32)

    @property
    def n(self) -> int:
        return self.deg.shape[0]

    def __len__(self) -> int:
        return self.n

    @property
    def num_edges(self) -> int:
        return int(self.deg.sum())

    def neighbors(self, u: int) -> np.ndarray:
        return self.ids[u, : self.deg[u]]

    def lengths(self, u: int) -> np.ndarray:
        return self.lens[u, : self.deg[u]]

    def edges(self, u: int) -> list[tuple[int, float]]:
        return [(int(t), float(w)) for t, w in zip(self.neighbors(u), self.lengths(u))]

    def outdegrees(self) -> np.ndarray:
        return self.deg.copy()

    def indegrees(self) -> np.ndarray:
        src, dst, _ = self.edge_arrays()
        return np.bincount(dst, minlength=self.n).astype(np.int32)

    def grow(self, capacity: int) -> None:
        if capacity <= self.ids.shape[1]:
            return
        ids = np.full((self.n, capacity), -1, dtype=np.int32)
        lens = np.zeros((self.n, capacity), dtype=np.float32)
        ids[:, : self.ids.shape[1]] = self.ids
        lens[:, : self.lens.shape[1]] = self.lens
        self.ids, self.lens = ids, lens

    def insert_edge(self, dataset: Dataset, source: int, target: int) -> bool:
        """Add ``source -> target`` with its metric length; a repeat is a no-op.

        Returns whether an edge was actually added.
        """
        if source == target:
            raise ValueError("self-loops are not allowed")
        if not (0 <= source < self.n and 0 <= target < self.n):
            raise IndexError(f"edge ({source}, {target}) out of range for {self.n} nodes")
        length = np.float32(dataset.distance(source, target))
        return self._insert(source, target, length)

    def _insert(self, source: int, target: int, length) -> bool:
        status = _insert_sorted(self.ids, self.lens, self.deg, source, target, np.float32(length))
        if status < 0:
            self.grow(2 * self.ids.shape[1])
            status = _insert_sorted(self.ids, self.lens, self.deg, source, target, np.float32(length))
        return status == 1

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Flattened (source, target, length) arrays in adjacency order."""
        mask = np.arange(self.ids.shape[1])[None, :] < self.deg[:, None]
        src = np.broadcast_to(np.arange(self.n, dtype=np.int32)[:, None], self.ids.shape)[mask]
        return src, self.ids[mask], self.lens[mask]

    @classmethod
    def from_edges(cls, n: int, src, dst, lens) -> "Graph":
        """Build a graph from an edge list, sorting rows and dropping repeats."""
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        lens = np.asarray(lens, dtype=np.float32)
        if np.any(src == dst):
            raise ValueError("self-loops are not allowed")
        order = np.lexsort((dst, lens, src))
        src, dst, lens = src[order], dst[order], lens[order]
        if len(src) > 1:
            key = src * max(n, 1) + dst
            _, first = np.unique(key, return_index=True)
            keep = np.zeros(len(src), dtype=bool)
            keep[first] = True
            src, dst, lens = src[keep], dst[keep], lens[keep]
        deg = np.bincount(src, minlength=n).astype(np.int32) if n else np.zeros(0, np.int32)
        g = cls(n, int(deg.max()) if n and len(src) else 1)
        starts = np.concatenate(([0], np.cumsum(deg)[:-1])) if n else deg
        col = np.arange(len(src)) - starts[src]
        g.ids[src, col] = dst
        g.lens[src, col] = lens
        g.deg[:] = deg
        return g

    def copy(self) -> "Graph":
        g = Graph(self.n, self.ids.shape[1])
        g.ids[:] = self.ids
        g.lens[:] = self.lens
        g.deg[:] = self.deg
        return g

    def compact(self) -> "Graph":
        """Same graph with padding trimmed to the maximum outdegree."""
        cap = max(int(self.deg.max()) if self.n else 1, 1)
        g = Graph(self.n, cap)
        g.ids[:] = self.ids[:, :cap]
        g.lens[:] = self.lens[:, :cap]
        g.deg[:] = self.deg
        return g

    def truncate(self, k: int) -> "Graph":
        """Keep each node's ``k`` shortest edges."""
        cap = max(min(k, self.ids.shape[1]), 1)
        g = Graph(self.n, cap)
        g.ids[:] = self.ids[:, :cap]
        g.lens[:] = self.lens[:, :cap]
        g.deg[:] = np.minimum(self.deg, k)
        g.ids[np.arange(cap)[None, :] >= g.deg[:, None]] = -1
        g.lens[np.arange(cap)[None, :] >= g.deg[:, None]] = 0
        return g

    def edge_set(self) -> set[tuple[int, int]]:
        src, dst, _ = self.edge_arrays()
        return set(zip(src.tolist(), dst.tolist()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        if self.n != other.n or not np.array_equal(self.deg, other.deg):
            return False
        a, b = self.edge_arrays(), other.edge_arrays()
        return all(np.array_equal(x, y) for x, y in zip(a, b))

    __hash__ = None

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.num_edges})"


def transpose(graph: Graph) -> Graph:
    src, dst, lens = graph.edge_arrays()
    return Graph.from_edges(graph.n, dst, src, lens)


@dataclass
class GraphStats:
    mean_top5_outdegree: float
    mean_bottom5_indegree: float
    mean_indegree_distance: float
    mean_outdegree: float


def graph_stats(graph: Graph, dataset: Dataset | None = None) -> GraphStats:
    """Degree statistics used to compare adjusted graphs.

    The 5% tails cover ``ceil(0.05 n)`` nodes. The indegree distance is the
    mean stored edge length of the transposed graph cut to each node's 10
    shortest edges; ``dataset`` is accepted for symmetry with the other
    entry points but lengths come from the edges themselves.
    """
    n = graph.n
    if n == 0:
        raise ValueError("graph is empty")
    m = math.ceil(0.05 * n)
    out = np.sort(graph.deg)[::-1]
    indeg = np.sort(graph.indegrees())
    lens = transpose(graph).truncate(10).edge_arrays()[2]
    return GraphStats(
        mean_top5_outdegree=float(out[:m].mean()),
        mean_bottom5_indegree=float(indeg[:m].mean()),
        mean_indegree_distance=float(lens.astype(np.float64).mean()) if len(lens) else 0.0,
        mean_outdegree=float(graph.deg.mean()),
    )


class InvariantError(AssertionError):
    """A graph or dataset broke one of its structural guarantees."""


def validate_graph(graph: Graph, dataset: Dataset, rtol: float = 1e-5, atol: float = 1e-6) -> None:
    """Raise ``InvariantError`` unless every edge is in range, loop-free,
    unique within its row, sorted, and carries its metric length."""
    if graph.n != len(dataset):
        raise InvariantError(f"graph has {graph.n} nodes, dataset {len(dataset)}")
    src, dst, lens = graph.edge_arrays()
    if len(src) == 0:
        return
    if dst.min() < 0 or dst.max() >= graph.n:
        raise InvariantError("edge target out of range")
    if (src == dst).any():
        raise InvariantError("self-loop present")
    same = src[1:] == src[:-1]
    ordered = (lens[1:] > lens[:-1]) | ((lens[1:] == lens[:-1]) & (dst[1:] > dst[:-1]))
    if (same & ~ordered).any():
        raise InvariantError("adjacency not sorted by (length, target) or has duplicates")
    true = np.array([_dist(int(dataset.metric), dataset.vectors[a], dataset.vectors[b])
                     for a, b in zip(src.tolist(), dst.tolist())]) if len(src) < 50_000 else None
    if true is None:
        pick = np.random.default_rng(0).choice(len(src), 50_000, replace=False)
        true = np.array([_dist(int(dataset.metric), dataset.vectors[src[i]], dataset.vectors[dst[i]])
                         for i in pick.tolist()])
        lens = lens[pick]
    if not np.allclose(lens, true, rtol=rtol, atol=atol):
        raise InvariantError("stored edge length disagrees with the metric distance")
