# %% [markdown]
# # Precision versus distance computations
#
# Sweep epsilon on the raw neighbourhood graph and on the adjusted graph,
# then compare costs at matched precision.

# %%
import sys

import numpy as np

from onng import (ConstructionParams, Dataset, DynamicDegree, GroundTruth, SearchParams, Searcher,
                  computations_at, sweep)
from onng.bench import build_pipeline, scaling_study

rng = np.random.default_rng(3)
ds = Dataset(rng.random((4000, 16)))
queries = rng.random((100, 16))
truth = GroundTruth.compute(ds, queries, 20)
pipe = build_pipeline(ds, ConstructionParams(kc=30, eo=10, ei=20))

# %%
eps = [0.0, 0.02, 0.05, 0.1, 0.2]
curves = [
    sweep(Searcher(pipe.anng, ds, pipe.tree), queries, truth, eps, SearchParams(k=20), "ANNG", repeats=1),
    sweep(Searcher(pipe.aknng, ds, pipe.tree), queries, truth, eps, SearchParams(k=20), "AKNNG", repeats=1),
    sweep(Searcher(pipe.graph, ds, pipe.tree), queries, truth, eps,
          SearchParams(k=20, dynamic=DynamicDegree()), "DA", repeats=1),
]
for i, c in enumerate(curves):
    c.to_csv(sys.stdout, header=i == 0)

# %%
# compare where every curve has a point at or below the target
target = max(0.95, max(c.precisions().min() for c in curves))
for c in curves:
    print(c.graph_label, round(target, 4), computations_at(c, target))

# %% [markdown]
# Cost at fixed recall as the dataset grows.

# %%
for row in scaling_study(ds, queries, [500, 1000, 2000, 4000], ConstructionParams(kc=30, eo=10, ei=20)):
    print(row)
