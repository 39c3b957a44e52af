import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from onng import Dataset, Graph  # noqa: E402

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def graph_from_ref(ref, n=None):
    """Build a Graph from {u: [(length, target), ...]} without recomputing lengths."""
    n = n if n is not None else len(ref)
    src, dst, ln = [], [], []
    for u, row in ref.items():
        for w, t in row:
            src.append(u)
            dst.append(t)
            ln.append(w)
    return Graph.from_edges(n, src, dst, ln)


def knng(dataset: Dataset, k: int) -> Graph:
    """Exact k-NN graph through the public insert_edge path."""
    g = Graph(len(dataset), k)
    for u in range(len(dataset)):
        d = dataset.distances_to(dataset[u])
        d[u] = np.inf
        for v in np.lexsort((np.arange(len(d)), d))[:k]:
            g.insert_edge(dataset, u, int(v))
    return g


def random_graph(rng, n, dim=4, max_out=5):
    ds = Dataset(rng.normal(size=(n, dim)))
    g = Graph(n, 2)
    for u in range(n):
        for v in rng.choice(n, size=rng.integers(0, min(max_out, n) + 1), replace=False):
            if v != u:
                g.insert_edge(ds, u, int(v))
    return g, ds
