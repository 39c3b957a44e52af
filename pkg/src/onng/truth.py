"""Exact nearest neighbours by full scan, and recall against them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset


def brute_force_knn(dataset: Dataset, q, k: int) -> list[tuple[int, float]]:
    """The exact ``k`` nearest ids with distances; ties go to the smaller id."""
    if k > len(dataset):
        raise ValueError(f"k={k} exceeds dataset size {len(dataset)}")
    d = dataset.distances_to(q)
    order = np.lexsort((np.arange(len(d)), d))[:k]
    return [(int(i), float(d[i])) for i in order]


@dataclass
class GroundTruth:
    """Per-query exact neighbours, ``ids[i, j]`` being the j-th nearest."""

    ids: np.ndarray
    distances: np.ndarray

    @property
    def k(self) -> int:
        return self.ids.shape[1]

    def __len__(self) -> int:
        return self.ids.shape[0]

    @classmethod
    def compute(cls, dataset: Dataset, queries, k: int = 100) -> "GroundTruth":
        queries = np.asarray(queries)
        k = min(k, len(dataset))
        ids = np.empty((len(queries), k), dtype=np.int64)
        dist = np.empty((len(queries), k))
        for i, q in enumerate(queries):
            hits = brute_force_knn(dataset, q, k)
            ids[i] = [h[0] for h in hits]
            dist[i] = [h[1] for h in hits]
        return cls(ids, dist)

    def take(self, rows) -> "GroundTruth":
        return GroundTruth(self.ids[rows], self.distances[rows])


def recall(hits, truth, k: int) -> float:
    """Share of the first ``k`` true ids present among ``hits``."""
    truth = list(truth)
    if len(truth) < k:
        raise ValueError("truth list shorter than k")
    ids = {int(h[0]) if isinstance(h, tuple) else int(h) for h in hits}
    ids.discard(-1)
    return len(ids & {int(t) for t in truth[:k]}) / k


def batch_recall(hit_ids: np.ndarray, truth: GroundTruth, k: int) -> np.ndarray:
    """Row-wise recall for an ``(nq, >=k)`` id matrix padded with -1."""
    if truth.k < k:
        raise ValueError("ground truth shallower than k")
    t = truth.ids[:, :k]
    h = hit_ids[:, :k]
    found = (h[:, :, None] == t[:, None, :]).any(axis=1)
    return found.sum(axis=1) / k
