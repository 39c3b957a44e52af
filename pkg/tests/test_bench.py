import csv
import io

import numpy as np
import pytest

from onng import ConstructionParams, Dataset, GroundTruth, SearchParams, Searcher, VpTree
from onng.bench import (CSV_HEADER, CurvePoint, EvalCurve, build_pipeline, computations_at,
                        scaling_study, sweep)


def curve(*pts):
    return EvalCurve("g", [CurvePoint(i * 0.1, p, c, 1.0) for i, (p, c) in enumerate(pts)])


def test_computations_at_interpolates():
    c = curve((0.8, 100.0), (0.9, 200.0), (1.0, 400.0))
    assert computations_at(c, 0.85) == pytest.approx(150.0)
    assert computations_at(c, 0.9) == 200.0
    assert computations_at(c, 0.95) == pytest.approx(300.0)
    assert np.isnan(computations_at(c, 0.5))


def test_curve_csv_columns():
    c = curve((0.8, 100.0), (0.9, 200.0))
    rows = list(csv.reader(io.StringIO(c.to_csv())))
    assert tuple(rows[0]) == CSV_HEADER
    assert rows[1][:4] == ["g", "0.0", "0.8", "100.0"]
    assert len(rows) == 3


@pytest.fixture(scope="module")
def pipe():
    rng = np.random.default_rng(2)
    ds = Dataset(rng.random((800, 8)))
    queries = rng.random((40, 8))
    p = build_pipeline(ds, ConstructionParams(kc=20, eo=8, ei=12))
    return ds, queries, p


def test_pipeline_parts(pipe):
    ds, _, p = pipe
    assert p.aknng.deg.max() <= 20
    assert p.graph.edge_set() <= (p.aknng.edge_set() | {(v, u) for u, v in p.aknng.edge_set()})
    assert isinstance(p.tree, VpTree)


def test_sweep_curve_is_sane(pipe):
    ds, queries, p = pipe
    truth = GroundTruth.compute(ds, queries, 20)
    c = sweep(Searcher(p.graph, ds, p.tree), queries, truth, [0.2, 0.0, 0.1], SearchParams(k=20),
              "da", repeats=1)
    assert [pt.epsilon for pt in c.points] == [0.0, 0.1, 0.2]
    assert np.all(np.diff(c.computations()) >= 0)
    assert all(0 <= x <= 1 for x in c.precisions())
    assert all(pt.mean_query_us > 0 for pt in c.points)


def test_scaling_study_rows(pipe):
    ds, queries, _ = pipe
    rows = scaling_study(ds, queries, [200, 800], ConstructionParams(kc=20, eo=8, ei=12), 0.9)
    assert [r.n for r in rows] == [200, 800]
    assert all(r.precision >= 0.9 for r in rows)
    with pytest.raises(ValueError):
        scaling_study(ds, queries, [800, 200], ConstructionParams(kc=20, eo=8, ei=12))
