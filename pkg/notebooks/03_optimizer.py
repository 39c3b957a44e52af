# %% [markdown]
# # Choosing expected degrees
#
# The loss of a graph is the mean of log10 distance computations over a
# target precision range. Hill climbing over (eo, ei) minimises it.

# %%
import numpy as np

from onng import (Dataset, GroundTruth, OptimizerConfig, TargetRange, construct_anng,
                  optimize_degrees)
from onng.construction import aknng_from_anng

rng = np.random.default_rng(2)
ds = Dataset(rng.random((3000, 16)))
train = rng.random((100, 16))
anng = construct_anng(ds, 30)
aknng = aknng_from_anng(anng, 30)

# %%
cfg = OptimizerConfig(step=5, queries=train, truth=GroundTruth.compute(ds, train, 20))
res = optimize_degrees(aknng, ds, TargetRange(0.9, 0.98), cfg)
res.eo, res.ei, res.loss

# %%
for r in res.trace:
    print(r.eo, r.ei, round(r.loss, 4), round(r.eps_l, 4), round(r.eps_u, 4))

# %% [markdown]
# The same machinery on a synthetic curve: C(p) = 10**p sampled exactly on
# [0.9, 0.98] integrates to 0.94.

# %%
from onng.optimizer import MeasurePoint, integrate_log_computations

integrate_log_computations([MeasurePoint(0, p, 10 ** p) for p in np.linspace(0.9, 0.98, 10)])
