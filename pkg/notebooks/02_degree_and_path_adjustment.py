# %% [markdown]
# # Degree and path adjustment
#
# Start from an incrementally built neighbourhood graph, cut it to `kc`
# edges per node, rebalance in/out degrees and drop edges that a shorter
# two-hop detour already covers.

# %%
import numpy as np

from onng import (Dataset, adjust_path, aknng_from_anng, construct_adjusted_graph,
                  construct_adjusted_graph_with_constraint, construct_anng, graph_stats)

rng = np.random.default_rng(1)
ds = Dataset(rng.random((2000, 16)))
anng = construct_anng(ds, kc=30, epsilon_c=0.1)
aknng = aknng_from_anng(anng, 30)
anng.deg.mean(), aknng.deg.mean()

# %%
def show(name, g):
    s = graph_stats(g)
    print(f"{name:10s} out {s.mean_outdegree:6.2f}  top5% out {s.mean_top5_outdegree:6.1f}  "
          f"bottom5% in {s.mean_bottom5_indegree:5.2f}")


sa = construct_adjusted_graph(aknng, 10, 20)
sac = construct_adjusted_graph_with_constraint(aknng, 10, 20)
show("AKNNG", aknng)
show("SA", sa)
show("SAC", sac)

# %% [markdown]
# Path adjustment keeps every node's shortest edge and only removes edges
# whose detour has a strictly shorter second leg.

# %%
for name, g in (("SA", sa), ("SAC", sac)):
    pa, wit = adjust_path(g, witnesses=True)
    print(name, g.deg.mean(), "->", pa.deg.mean(), f"({1 - pa.deg.mean() / g.deg.mean():.0%} fewer)")
wit[:5]
