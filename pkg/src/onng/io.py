"""TEXMEX vector files, CSV vectors and the binary index format.

Index layout (all integers little-endian)::

    header     "ONNG" | u16 version | u8 metric | u32 dim | u64 n | u8 flags
    vectors    n * dim float32
    adjacency  per node: u32 count, then count * (u32 target, f32 length)
    checksum   u32 CRC32 of the adjacency block
    tree       present when flags & 1; ten arrays, each u64 length + data
"""

from __future__ import annotations

import os
import struct
import zlib
from pathlib import Path

import numpy as np

from .core import Dataset, Graph, MetricKind
from .search import VpTree

MAGIC = b"ONNG"
VERSION = 1
FLAG_TREE = 1
_HEADER = struct.Struct("<4sHBIQB")
_EDGE = np.dtype([("target", "<u4"), ("length", "<f4")])
_TREE_DTYPES = {
    "pivot": "<i8", "radius": "<f8", "inner": "<i8", "outer": "<i8", "leaf": "<i8",
    "leaf_pivots": "<i8", "leaf_ptr": "<i8", "leaf_ids": "<i8", "seed_ptr": "<i8", "seed_ids": "<i8",
}


class FormatError(ValueError):
    """Malformed vector or index file."""


class TruncatedFile(FormatError):
    pass


class BadMagic(FormatError):
    pass


class VersionMismatch(FormatError):
    pass


class ChecksumMismatch(FormatError):
    pass


# -- TEXMEX ---------------------------------------------------------------


def _read_records(path, item: str) -> np.ndarray:
    raw = Path(path).read_bytes()
    itemsize = np.dtype(item).itemsize
    if not raw:
        return np.zeros((0, 0), dtype=item)
    if len(raw) < 4:
        raise TruncatedFile(f"{path}: truncated record header")
    d = int(np.frombuffer(raw, "<i4", 1)[0])
    if d <= 0:
        raise FormatError(f"{path}: non-positive dimension {d}")
    rec = 4 + d * itemsize
    if len(raw) % rec:
        raise TruncatedFile(f"{path}: {len(raw)} bytes is not a whole number of {rec}-byte records")
    n = len(raw) // rec
    buf = np.frombuffer(raw, np.uint8).reshape(n, rec)
    dims = buf[:, :4].copy().view("<i4").ravel()
    if (dims != d).any():
        bad = int(np.nonzero(dims != d)[0][0])
        raise FormatError(f"{path}: record {bad} has dimension {dims[bad]}, expected {d}")
    return buf[:, 4:].copy().view(item).reshape(n, d)


def read_fvecs(path, metric: MetricKind | str = MetricKind.EUCLIDEAN) -> Dataset:
    return Dataset(_read_records(path, "<f4"), metric)


def read_bvecs(path, metric: MetricKind | str = MetricKind.EUCLIDEAN) -> Dataset:
    return Dataset(_read_records(path, "u1").astype(np.float32), metric)


def read_ivecs(path) -> np.ndarray:
    return _read_records(path, "<i4").astype(np.int64)


def _write_records(path, arr: np.ndarray, item: str) -> None:
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise ValueError("expected a 2-d array")
    n, d = arr.shape
    out = np.empty((n, 4 + d * np.dtype(item).itemsize), dtype=np.uint8)
    out[:, :4] = np.full((n, 1), d, dtype="<i4").view(np.uint8)
    out[:, 4:] = np.ascontiguousarray(arr, dtype=item).view(np.uint8).reshape(n, -1)
    Path(path).write_bytes(out.tobytes())


def write_fvecs(path, vectors) -> None:
    _write_records(path, vectors, "<f4")


def write_bvecs(path, vectors) -> None:
    vectors = np.asarray(vectors)
    if vectors.size and (vectors.min() < 0 or vectors.max() > 255):
        raise ValueError("bvecs components must lie in 0..255")
    _write_records(path, vectors, "u1")


def write_ivecs(path, rows) -> None:
    _write_records(path, rows, "<i4")


def read_csv(path, metric: MetricKind | str = MetricKind.EUCLIDEAN) -> Dataset:
    try:
        arr = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return Dataset(arr, metric)


def load_vectors(path, metric: MetricKind | str = MetricKind.EUCLIDEAN) -> Dataset:
    """Read vectors, choosing the decoder from the file extension."""
    ext = os.path.splitext(str(path))[1].lower()
    readers = {".fvecs": read_fvecs, ".bvecs": read_bvecs, ".csv": read_csv, ".txt": read_csv}
    if ext not in readers:
        raise FormatError(f"unsupported vector file extension {ext!r}")
    return readers[ext](path, metric)


# -- index ----------------------------------------------------------------


def _adjacency_bytes(graph: Graph) -> bytes:
    parts = []
    for u in range(graph.n):
        d = int(graph.deg[u])
        rec = np.empty(d, dtype=_EDGE)
        rec["target"] = graph.ids[u, :d]
        rec["length"] = graph.lens[u, :d]
        parts.append(struct.pack("<I", d))
        parts.append(rec.tobytes())
    return b"".join(parts)


def dumps_index(graph: Graph, dataset: Dataset, tree: VpTree | None = None) -> bytes:
    if graph.n != len(dataset):
        raise ValueError("graph and dataset sizes differ")
    flags = FLAG_TREE if tree is not None else 0
    out = [
        _HEADER.pack(MAGIC, VERSION, int(dataset.metric), dataset.dim, len(dataset), flags),
        np.ascontiguousarray(dataset.vectors, dtype="<f4").tobytes(),
    ]
    adj = _adjacency_bytes(graph)
    out += [adj, struct.pack("<I", zlib.crc32(adj))]
    if tree is not None:
        for name, dt in _TREE_DTYPES.items():
            arr = np.ascontiguousarray(getattr(tree, name), dtype=dt)
            out += [struct.pack("<Q", arr.size), arr.tobytes()]
    return b"".join(out)


def save_index(path, graph: Graph, dataset: Dataset, tree: VpTree | None = None) -> None:
    Path(path).write_bytes(dumps_index(graph, dataset, tree))


class _Reader:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.pos = 0

    def take(self, nbytes: int, what: str) -> bytes:
        if self.pos + nbytes > len(self.raw):
            raise TruncatedFile(f"index truncated while reading {what}")
        chunk = self.raw[self.pos : self.pos + nbytes]
        self.pos += nbytes
        return chunk


def loads_index(raw: bytes) -> tuple[Graph, Dataset, VpTree | None]:
    r = _Reader(raw)
    if raw[:4] != MAGIC:
        raise BadMagic("not an index file (bad magic)")
    magic, version, metric, dim, n, flags = _HEADER.unpack(r.take(_HEADER.size, "header"))
    if version != VERSION:
        raise VersionMismatch(f"index format version {version}, expected {VERSION}")
    try:
        metric = MetricKind(metric)
    except ValueError:
        raise FormatError(f"unknown metric id {metric}") from None
    vecs = np.frombuffer(r.take(4 * n * dim, "vectors"), "<f4").reshape(n, dim)
    dataset = Dataset(vecs.astype(np.float32), metric, dim=dim)

    start = r.pos
    counts = np.empty(n, dtype=np.int64)
    rows = []
    for u in range(n):
        (d,) = struct.unpack("<I", r.take(4, "adjacency"))
        counts[u] = d
        rows.append(np.frombuffer(r.take(8 * d, "adjacency"), _EDGE))
    adj = raw[start : r.pos]
    (crc,) = struct.unpack("<I", r.take(4, "checksum"))
    if zlib.crc32(adj) != crc:
        raise ChecksumMismatch("adjacency checksum mismatch")

    g = Graph(n, int(counts.max()) if n else 1)
    for u, rec in enumerate(rows):
        d = len(rec)
        tgt = rec["target"].astype(np.int64)
        if d and (tgt.max() >= n or (tgt == u).any()):
            raise FormatError(f"node {u} has an invalid edge target")
        ln = rec["length"]
        if d > 1 and not np.all((ln[1:] > ln[:-1]) | ((ln[1:] == ln[:-1]) & (tgt[1:] > tgt[:-1]))):
            raise FormatError(f"adjacency of node {u} is not sorted")
        g.ids[u, :d] = tgt
        g.lens[u, :d] = ln
        g.deg[u] = d

    tree = None
    if flags & FLAG_TREE:
        arrays = {}
        for name, dt in _TREE_DTYPES.items():
            (size,) = struct.unpack("<Q", r.take(8, f"tree {name}"))
            arrays[name] = np.frombuffer(r.take(size * 8, f"tree {name}"), dt).astype(dt[1:])
        tree = VpTree.from_arrays(dataset, arrays)
    if r.pos != len(raw):
        raise FormatError(f"{len(raw) - r.pos} trailing bytes after index")
    return g, dataset, tree


def load_index(path) -> tuple[Graph, Dataset, VpTree | None]:
    return loads_index(Path(path).read_bytes())
