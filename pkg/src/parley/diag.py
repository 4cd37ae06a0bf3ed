"""Embedding-space diagnostics: argmax anisotropy and running-mean
convergence of pooled text vectors."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from . import kernels
from .embed import EmbeddingTable
from .errors import EmptyStream


@dataclass
class AnisotropyHistogram:
    dimension: int
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def chi_square_uniform(self):
        """(statistic, p-value) of the counts against a uniform spread."""
        from scipy.stats import chisquare

        res = chisquare(self.counts)
        return float(res.statistic), float(res.pvalue)


def anisotropy(table: EmbeddingTable) -> AnisotropyHistogram:
    """How many vectors have their largest component in each dimension
    (ties go to the lowest index)."""
    winners = np.argmax(table.vectors, axis=1)
    return AnisotropyHistogram(table.dimension, np.bincount(winners, minlength=table.dimension))


def stream_matrix(table: EmbeddingTable, tokens: Sequence[str]) -> np.ndarray:
    rows = [table.index[t] for t in tokens if t in table.index]
    return np.ascontiguousarray(table.vectors[rows])


@dataclass
class RunningMeanSeries:
    means: np.ndarray

    @property
    def n(self) -> np.ndarray:
        return np.arange(1, len(self.means) + 1)

    @property
    def max_component(self) -> np.ndarray:
        return self.means.max(axis=1)

    @property
    def min_component(self) -> np.ndarray:
        return self.means.min(axis=1)

    def __len__(self) -> int:
        return len(self.means)


def running_mean_extrema(table: EmbeddingTable, token_stream: Sequence[str], kernel=None) -> RunningMeanSeries:
    """Running mean of the stream's vectors; out-of-vocabulary tokens are
    skipped."""
    kernel = kernel or kernels
    X = stream_matrix(table, token_stream)
    if len(X) == 0:
        raise EmptyStream("no in-vocabulary token in stream")
    return RunningMeanSeries(kernel.running_mean(X))


def running_mean_similarity(
    table: EmbeddingTable, stream1: Sequence[str], stream2: Sequence[str], kernel=None
) -> np.ndarray:
    """cosine(mean of first n of stream1, mean of first n of stream2) for
    n = 1 .. min(len1, len2)."""
    a = running_mean_extrema(table, stream1, kernel).means
    b = running_mean_extrema(table, stream2, kernel).means
    n = min(len(a), len(b))
    a, b = a[:n], b[:n]
    aa = np.einsum("ij,ij->i", a, a)
    bb = np.einsum("ij,ij->i", b, b)
    ab = np.einsum("ij,ij->i", a, b)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = ab / np.sqrt(aa * bb)
    return np.clip(out, -1.0, 1.0)


def variance_ratio(series: np.ndarray, share: float = 0.2) -> float:
    """Variance of the last *share* of a series over that of the first."""
    m = max(1, int(len(series) * share))
    head = float(np.var(series[:m]))
    tail = float(np.var(series[-m:]))
    return tail / head if head > 0 else (0.0 if tail == 0 else float("inf"))


def trend_slope(series: np.ndarray, start: int = 500) -> float:
    """Least-squares slope of series[n] against n over n >= start (1-based)."""
    y = np.asarray(series[start - 1 :], dtype=float)
    x = np.arange(start, start + len(y), dtype=float)
    return float(np.polyfit(x, y, 1)[0])
