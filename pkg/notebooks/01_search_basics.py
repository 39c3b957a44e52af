# %% [markdown]
# # Graph search basics
#
# Build an exact k-NN graph over random points and search it best-first,
# then compare against a full scan.

# %%
import numpy as np

from onng import Dataset, Graph, SearchParams, brute_force_knn, knn_search, seeds_random

rng = np.random.default_rng(0)
ds = Dataset(rng.random((2000, 16)))

# %%
# exact 10-NN graph; insert_edge keeps every row sorted by length
g = Graph(len(ds), 10)
for u in range(len(ds)):
    d = ds.distances_to(ds[u])
    d[u] = np.inf
    for v in np.argsort(d, kind="stable")[:10]:
        g.insert_edge(ds, u, int(v))
g.num_edges

# %%
q = rng.random(16)
seeds = seeds_random(g, 10, rng_seed=1)
for eps in (0.0, 0.1, 0.3):
    res = knn_search(g, ds, seeds, q, SearchParams(k=10, epsilon=eps))
    exact = {i for i, _ in brute_force_knn(ds, q, 10)}
    print(eps, len(exact & set(res.ids)) / 10, res.distance_computations)

# %% [markdown]
# A larger epsilon widens the explored radius: more distance computations,
# higher recall. Capping the edges scanned per node trades the other way.

# %%
from onng import DynamicDegree, effective_edge_limit

for eps in (0.0, 0.05, 0.1):
    print(eps, effective_edge_limit(eps, 30, 20))
res = knn_search(g, ds, seeds, q, SearchParams(k=10, epsilon=0.1, dynamic=DynamicDegree(2, 10.0)))
res.distance_computations

# %% [markdown]
# The visited set is a power-of-two table plus per-slot chains for colliding ids.

# %%
from onng import VisitedSet, hash_size

vs = VisitedSet(hash_size(2048))
vs.mark(3)
vs.mark(2051)
vs.overflow(3), 2051 in vs, 4099 in vs
