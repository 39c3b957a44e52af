import csv
import json

import numpy as np
import pytest

from onng import cli
from onng import io as oio
from onng.optimizer import UnreachablePrecision


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    rng = np.random.default_rng(0)
    oio.write_fvecs(d / "base.fvecs", rng.random((600, 6)))
    oio.write_fvecs(d / "q.fvecs", rng.random((30, 6)))
    assert cli.main(["build", str(d / "base.fvecs"), "--out", str(d / "anng.onng"), "--kc", "20"]) == 0
    assert cli.main(["gt", str(d / "base.fvecs"), "--queries", str(d / "q.fvecs"),
                     "--out", str(d / "gt.ivecs"), "--k", "20"]) == 0
    return d


def test_build_adjust_search(files, capsys):
    d = files
    assert cli.main(["adjust", str(d / "anng.onng"), "--kc", "20", "--eo", "6", "--ei", "10",
                     "--out", str(d / "g.onng")]) == 0
    capsys.readouterr()
    assert cli.main(["search", str(d / "g.onng"), "--queries", str(d / "q.fvecs"), "--k", "5",
                     "--epsilon", "0.2"]) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["query", "rank", "id", "distance"] and len(rows) == 1 + 30 * 5
    assert cli.main(["search", str(d / "g.onng"), "--queries", str(d / "q.fvecs"), "--k", "5",
                     "--out", str(d / "res.ivecs")]) == 0
    assert oio.read_ivecs(d / "res.ivecs").shape == (30, 5)


def test_stats_and_bench(files, capsys):
    d = files
    capsys.readouterr()
    assert cli.main(["stats", str(d / "anng.onng")]) == 0
    s = json.loads(capsys.readouterr().out)
    assert s["nodes"] == 600 and s["edges"] > 0
    assert cli.main(["bench", str(d / "anng.onng"), "--queries", str(d / "q.fvecs"),
                     "--truth", str(d / "gt.ivecs"), "--epsilons", "0,0.1", "--repeats", "1"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "graph_label,epsilon,precision,mean_computations,mean_query_us"
    assert len(out) == 3


def test_optimize_writes_trace(files, capsys):
    d = files
    capsys.readouterr()
    assert cli.main(["optimize", str(d / "anng.onng"), "--queries", str(d / "q.fvecs"),
                     "--truth", str(d / "gt.ivecs"), "--kc", "20", "--trace", str(d / "t.csv")]) == 0
    res = json.loads(capsys.readouterr().out)
    assert {"eo", "ei", "loss"} <= set(res)
    assert (d / "t.csv").read_text().startswith("eo,ei,loss,eps_l,eps_u")


def test_scaling(files, capsys):
    d = files
    capsys.readouterr()
    assert cli.main(["scaling", str(d / "base.fvecs"), "--queries", str(d / "q.fvecs"),
                     "--sizes", "150,600", "--kc", "20", "--eo", "6", "--ei", "10"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "n,epsilon,precision,mean_computations" and len(out) == 3


def test_exit_code_format_errors(files, tmp_path):
    bad = tmp_path / "bad.onng"
    raw = bytearray((files / "anng.onng").read_bytes())
    raw[30000] ^= 0xFF
    bad.write_bytes(bytes(raw))
    assert cli.main(["stats", str(bad)]) == 2
    assert cli.main(["stats", str(tmp_path / "missing.onng")]) == 2
    (tmp_path / "t.fvecs").write_bytes(b"\x02\0\0\0\0")
    assert cli.main(["build", str(tmp_path / "t.fvecs"), "--out", str(tmp_path / "o")]) == 2


def test_exit_code_unreachable(files, monkeypatch):
    def boom(*a, **k):
        raise UnreachablePrecision("target out of reach")

    monkeypatch.setattr(cli, "optimize_degrees", boom)
    d = files
    assert cli.main(["optimize", str(d / "anng.onng"), "--queries", str(d / "q.fvecs"),
                     "--truth", str(d / "gt.ivecs"), "--kc", "20"]) == 3


def test_exit_code_invariant(files, tmp_path):
    g, ds, tree = oio.load_index(files / "anng.onng")
    last = g.deg[0] - 1
    g.lens[0, last] += 0.5  # stays sorted but no longer matches the vectors
    oio.save_index(tmp_path / "inv.onng", g, ds, tree)
    assert cli.main(["stats", str(tmp_path / "inv.onng")]) == 4
