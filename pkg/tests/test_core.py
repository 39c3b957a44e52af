import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_graph
from onng import Dataset, Graph, distance, graph_stats, transpose
from onng.core import InvariantError, MetricKind, validate_graph


def test_distance_examples():
    assert distance("euclidean", [0, 0], [3, 4]) == 5.0
    assert distance("euclidean", [1.5, -2], [1.5, -2]) == 0.0
    assert distance("angular", [1, 0], [0, 1]) == pytest.approx(math.pi / 2, abs=1e-12)


def test_distance_errors():
    with pytest.raises(ValueError):
        distance("euclidean", [0, 0], [0, 0, 1])
    with pytest.raises(ValueError):
        distance("angular", [0, 0], [1, 0])
    with pytest.raises(ValueError):
        MetricKind.parse("manhattan")


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3),
       st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3),
       st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3))
def test_euclidean_metric_axioms(a, b, c):
    ab, ba = distance("euclidean", a, b), distance("euclidean", b, a)
    assert ab == ba and ab >= 0
    assert ab <= distance("euclidean", a, c) + distance("euclidean", c, b) + 1e-9


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset([[1.0, np.nan]])
    with pytest.raises(ValueError):
        Dataset([[0.0, 0.0]], "angular")
    ds = Dataset(np.zeros((0, 3)), dim=3)
    assert len(ds) == 0 and ds.dim == 3
    with pytest.raises(ValueError):
        Dataset(np.zeros((0, 0))).require_usable()
    ds = Dataset([[1, 2], [3, 4]])
    with pytest.raises(ValueError):
        ds.vectors[0, 0] = 5


def test_insert_edge_examples():
    ds = Dataset([[0, 0], [1, 0], [5, 5], [2, 0]])
    g = Graph(4, 1)
    assert g.insert_edge(ds, 0, 3)
    assert g.edges(0) == [(3, 2.0)]
    g.insert_edge(ds, 0, 1)
    assert g.edges(0) == [(1, 1.0), (3, 2.0)]
    assert not g.insert_edge(ds, 0, 3)
    assert g.edges(0) == [(1, 1.0), (3, 2.0)]
    with pytest.raises(ValueError):
        g.insert_edge(ds, 2, 2)
    with pytest.raises(IndexError):
        g.insert_edge(ds, 0, 4)


def test_insert_edge_tie_breaks_by_id():
    ds = Dataset([[0, 0], [1, 0], [-1, 0], [0, 1]])
    g = Graph(4, 1)
    for t in (3, 2, 1):
        g.insert_edge(ds, 0, t)
    assert g.neighbors(0).tolist() == [1, 2, 3]


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2**31))
def test_random_graphs_are_valid(n, seed):
    g, ds = random_graph(np.random.default_rng(seed), n)
    validate_graph(g, ds)
    rows = [g.edges(u) for u in range(n)]
    for row in rows:
        assert [(w, t) for t, w in row] == sorted((w, t) for t, w in row)


def test_validate_graph_detects_corruption():
    g, ds = random_graph(np.random.default_rng(3), 20)
    u = int(np.argmax(g.deg))
    bad = g.copy()
    bad.lens[u, 0] += 1.0
    with pytest.raises(InvariantError):
        validate_graph(bad, ds)
    bad = g.copy()
    bad.ids[u, 0] = u
    with pytest.raises(AssertionError):
        validate_graph(bad, ds)


def test_transpose_examples():
    ds = Dataset([[0, 0], [1, 0], [0, 2]])
    g = Graph(3)
    g.insert_edge(ds, 0, 1)
    t = transpose(g)
    assert t.edges(1) == [(0, 1.0)] and t.num_edges == 1
    g = Graph(3)
    for s, d in ((0, 1), (1, 2), (2, 0)):
        g.insert_edge(ds, s, d)
    assert transpose(g).edge_set() == {(1, 0), (2, 1), (0, 2)}


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**31))
def test_transpose_reverses_every_edge(n, seed):
    g, ds = random_graph(np.random.default_rng(seed), n)
    t = transpose(g)
    fwd = {(u, int(v), float(w)) for u in range(n) for v, w in zip(g.neighbors(u), g.lengths(u))}
    rev = {(int(v), u, float(w)) for u in range(n) for v, w in zip(t.neighbors(u), t.lengths(u))}
    assert fwd == rev
    validate_graph(t, ds)
    assert transpose(t) == g.compact()


def test_from_edges_drops_duplicates_and_sorts():
    g = Graph.from_edges(3, [0, 0, 0, 1], [2, 1, 2, 0], [2.0, 1.0, 2.0, 1.0])
    assert g.edges(0) == [(1, 1.0), (2, 2.0)]
    assert g.num_edges == 3


def test_truncate_keeps_shortest():
    g = Graph.from_edges(2, [0, 0, 0], [1, 1, 1], [1.0, 1.0, 1.0])
    assert g.truncate(5).edges(0) == [(1, 1.0)]
    g = Graph.from_edges(4, [0, 0, 0], [3, 1, 2], [3.0, 1.0, 2.0])
    assert g.truncate(2).neighbors(0).tolist() == [1, 2]


def test_graph_stats_examples():
    rng = np.random.default_rng(0)
    ds = Dataset(rng.normal(size=(20, 3)))
    g = Graph(20, 7)
    for u in range(20):
        for j in range(1, 8):
            g.insert_edge(ds, u, (u + j) % 20)
    s = graph_stats(g, ds)
    assert s.mean_top5_outdegree == 7.0
    assert s.mean_outdegree == 7.0

    g = Graph.from_edges(20, [u for u in range(1, 20)], [(u % 19) + 1 for u in range(1, 20)],
                         np.ones(19))
    assert graph_stats(g).mean_bottom5_indegree == 0.0


def test_graph_stats_matches_recount():
    g, ds = random_graph(np.random.default_rng(9), 40, max_out=8)
    s = graph_stats(g, ds)
    out = sorted(len(g.neighbors(u)) for u in range(40))
    indeg = [0] * 40
    incoming = {u: [] for u in range(40)}
    for u in range(40):
        for v, w in zip(g.neighbors(u), g.lengths(u)):
            indeg[int(v)] += 1
            incoming[int(v)].append(float(w))
    tail = math.ceil(0.05 * 40)
    assert s.mean_top5_outdegree == pytest.approx(sum(out[-tail:]) / tail)
    assert s.mean_bottom5_indegree == pytest.approx(sum(sorted(indeg)[:tail]) / tail)
    near = [w for ws in incoming.values() for w in sorted(ws)[:10]]
    assert s.mean_indegree_distance == pytest.approx(sum(near) / len(near), rel=1e-6)
