"""Aggregation of per-post scores into a regular time series."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np


@dataclass(frozen=True)
class ScoredPost:
    time: float
    score: float


@dataclass
class ScoreSeries:
    """Aggregated scores on half-open windows ``[origin + j*tau, origin + (j+1)*tau)``.

    ``values[j]`` is the sum of scores falling in window ``j`` divided by
    ``tau``. Index ``j`` here is zero-based.
    """

    tau: float
    origin: float
    values: np.ndarray

    def __len__(self):
        return len(self.values)

    @property
    def window_starts(self) -> np.ndarray:
        return self.origin + self.tau * np.arange(len(self.values))

    def window_start(self, j: int) -> float:
        return self.origin + self.tau * j


def window_index(time: float, tau: float, origin: float) -> int:
    return math.floor((time - origin) / tau)


def aggregate_scores(
    times: Iterable[float],
    scores: Iterable[float],
    tau: float,
    origin: float | None = None,
    end: float | None = None,
) -> ScoreSeries:
    """Bin scores into windows of length ``tau`` and divide each bin sum by ``tau``.

    Parameters
    ----------
    times, scores : iterable of float
        Post times and their anomaly scores.
    tau : float
        Window length in seconds.
    origin : float, optional
        Start of the first window; defaults to the earliest time.
    end : float, optional
        Extend the series with empty windows so that it covers ``end``.

    Returns
    -------
    ScoreSeries
        Empty windows hold 0.
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau!r}")
    t = np.asarray(list(times), dtype=float)
    s = np.asarray(list(scores), dtype=float)
    if t.shape != s.shape:
        raise ValueError("times and scores must have the same length")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    if origin is None:
        origin = float(t.min()) if t.size else 0.0
    if t.size and t.min() < origin:
        raise ValueError("posts before the series origin")
    idx = np.floor((t - origin) / tau).astype(np.int64)
    length = int(idx.max()) + 1 if idx.size else 0
    if end is not None and end >= origin:
        length = max(length, window_index(end, tau, origin) + 1)
    sums = np.bincount(idx, weights=s, minlength=length) if length else np.zeros(0)
    return ScoreSeries(float(tau), float(origin), sums / tau)


class StreamingAggregator:
    """Online version of :func:`aggregate_scores`.

    ``push`` yields ``(window_start, value)`` for every window closed by the
    new post, including empty ones.
    """

    def __init__(self, tau: float, origin: float):
        if not tau > 0:
            raise ValueError(f"tau must be positive, got {tau!r}")
        self.tau = float(tau)
        self.origin = float(origin)
        self._j = 0
        self._acc = 0.0

    def push(self, time: float, score: float) -> Iterator[tuple[float, float]]:
        j = window_index(time, self.tau, self.origin)
        if j < self._j:
            raise ValueError("post belongs to a window that is already closed")
        while self._j < j:
            yield self.origin + self.tau * self._j, self._acc / self.tau
            self._j += 1
            self._acc = 0.0
        self._acc += score

    def flush(self) -> tuple[float, float]:
        """Close the current window and return it."""
        out = (self.origin + self.tau * self._j, self._acc / self.tau)
        self._j += 1
        self._acc = 0.0
        return out
