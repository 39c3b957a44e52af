# %% [markdown]
# # Vector files, index files and the command line

# %%
import subprocess
import tempfile
from pathlib import Path

import numpy as np

from onng import Dataset, VpTree, construct_anng
from onng import io as oio

tmp = Path(tempfile.mkdtemp())
rng = np.random.default_rng(4)
oio.write_fvecs(tmp / "base.fvecs", rng.random((1500, 8)))
oio.write_fvecs(tmp / "query.fvecs", rng.random((20, 8)))
ds = oio.read_fvecs(tmp / "base.fvecs")
len(ds), ds.dim

# %%
g = construct_anng(ds, 20)
oio.save_index(tmp / "a.onng", g, ds, VpTree(ds))
g2, ds2, tree2 = oio.load_index(tmp / "a.onng")
g2 == g, oio.dumps_index(g2, ds2, tree2) == (tmp / "a.onng").read_bytes()

# %% [markdown]
# A flipped adjacency byte fails the checksum.

# %%
raw = bytearray((tmp / "a.onng").read_bytes())
raw[20 + 4 * 8 * 1500 + 5] ^= 1
try:
    oio.loads_index(bytes(raw))
except oio.FormatError as exc:
    print(type(exc).__name__, exc)

# %%
def onng(*args):
    out = subprocess.run(["onng", *map(str, args)], capture_output=True, text=True)
    print(out.returncode, out.stdout[-400:], out.stderr[-400:])


onng("build", tmp / "base.fvecs", "--out", tmp / "anng.onng", "--kc", 20)
onng("gt", tmp / "base.fvecs", "--queries", tmp / "query.fvecs", "--out", tmp / "gt.ivecs", "--k", 20)
onng("adjust", tmp / "anng.onng", "--kc", 20, "--eo", 8, "--ei", 12, "--out", tmp / "g.onng")
onng("bench", tmp / "g.onng", "--queries", tmp / "query.fvecs", "--truth", tmp / "gt.ivecs",
     "--epsilons", "0,0.05,0.1", "--label", "SA", "--repeats", 1)
onng("stats", tmp / "g.onng")
