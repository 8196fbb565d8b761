"""Correlation of metric series against team outcomes."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class PairedSeries:
    x: tuple[float, ...]
    y: tuple[float, ...]
    labels: tuple[Hashable, ...] = field(default=())
    n_dropped: int = 0

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError("x and y differ in length")
        if self.labels and len(self.labels) != len(self.x):
            raise ValueError("labels and values differ in length")

    @classmethod
    def from_pairs(
        cls,
        x: Sequence[float | None],
        y: Sequence[float | None],
        labels: Sequence[Hashable] | None = None,
    ) -> "PairedSeries":
        """Build a series, dropping every position where either value is missing."""
        if len(x) != len(y):
            raise ValueError("x and y differ in length")
        labels = list(labels) if labels is not None else [None] * len(x)
        keep = [i for i in range(len(x)) if x[i] is not None and y[i] is not None]
        return cls(
            tuple(float(x[i]) for i in keep),
            tuple(float(y[i]) for i in keep),
            tuple(labels[i] for i in keep) if any(l is not None for l in labels) else (),
            len(x) - len(keep),
        )

    @property
    def n(self) -> int:
        return len(self.x)


def average_ranks(values: Iterable[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of the ranks they span."""
    a = np.asarray(list(values), dtype=float)
    order = np.argsort(a, kind="mergesort")
    ranks = np.empty(len(a), dtype=float)
    i = 0
    while i < len(a):
        j = i
        while j + 1 < len(a) and a[order[j + 1]] == a[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    if len(x) < 2:
        raise ValueError("need at least 2 paired values")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0 or np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("zero variance")
    r = float(dx @ dy) / np.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def pearson(series: PairedSeries) -> float:
    return _pearson(np.asarray(series.x, dtype=float), np.asarray(series.y, dtype=float))


def spearman(series: PairedSeries) -> float:
    """Rank correlation: Pearson's r on average ranks."""
    if series.n < 2:
        raise ValueError("need at least 2 paired values")
    return _pearson(average_ranks(series.x), average_ranks(series.y))
