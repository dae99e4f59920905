"""Dynamic threshold optimization over a discounted score histogram.

Scores are binned into ``n_bins`` cells: ``(-inf, a)``, ``n_bins - 2`` equal
cells covering ``[a, b)``, and ``[b, inf)``. The histogram forgets old
scores geometrically, and the alarm threshold is read off its upper
``rho`` tail. Each step computes the threshold, compares the score, and
only then learns the score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

# Slack for comparing cumulative bin mass against 1 - rho.
_CUM_TOL = 1e-12


@dataclass
class ThresholdHistogram:
    n_bins: int = 20
    a: float = 0.0
    b: float = 1.0
    rho: float = 0.05
    lambda_h: float = 0.01
    r_h: float = 0.005
    q1: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if int(self.n_bins) != self.n_bins or self.n_bins < 3:
            raise ValueError("n_bins must be an integer >= 3")
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise ValueError(f"need finite a < b, got a={self.a!r}, b={self.b!r}")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if self.lambda_h < 0:
            raise ValueError("lambda_h must be non-negative")
        if not 0.0 < self.r_h < 1.0:
            raise ValueError("r_h must lie in (0, 1)")
        if self.q1 is None:
            self.q1 = np.full(self.n_bins, 1.0 / self.n_bins)
        else:
            self.q1 = np.asarray(self.q1, dtype=float)

    @property
    def width(self) -> float:
        return (self.b - self.a) / (self.n_bins - 2)

    @property
    def q(self) -> np.ndarray:
        return (self.q1 + self.lambda_h) / (self.q1.sum() + self.n_bins * self.lambda_h)

    def bin_index(self, score: float) -> int:
        """Zero-based cell of ``score``; boundaries go to the upper cell."""
        if score < self.a:
            return 0
        if score >= self.b:
            return self.n_bins - 1
        h = 1 + int(math.floor((score - self.a) / self.width))
        return min(max(h, 1), self.n_bins - 2)

    def threshold(self) -> float:
        cum = np.cumsum(self.q)
        l = int(np.argmax(cum >= 1.0 - self.rho - _CUM_TOL)) + 1
        return self.a + self.width * (l + 1)

    def update(self, score: float) -> None:
        if math.isnan(score):
            raise ValueError("cannot learn a NaN score")
        self.q1 *= 1.0 - self.r_h
        self.q1[self.bin_index(score)] += self.r_h


def dto_init(n_bins: int = 20, a: float = 0.0, b: float = 1.0, rho: float = 0.05,
             lambda_h: float = 0.01, r_h: float = 0.005) -> ThresholdHistogram:
    """Histogram with uniform weights over ``n_bins`` cells on range ``[a, b]``."""
    return ThresholdHistogram(n_bins, a, b, rho, lambda_h, r_h)


def dto_threshold(hist: ThresholdHistogram) -> float:
    """``a + width * (l + 1)`` where ``l`` is the least 1-based cell whose
    cumulative mass reaches ``1 - rho``."""
    return hist.threshold()


def dto_update(hist: ThresholdHistogram, score: float) -> ThresholdHistogram:
    hist.update(score)
    return hist


def dto_alarm(score: float, eta: float) -> bool:
    return bool(score >= eta)


@dataclass(frozen=True)
class AlarmEvent:
    index: int
    time: float
    score: float
    threshold: float


class DynamicThreshold:
    """Streaming alarm rule with optional range calibration.

    If ``a`` and ``b`` are not given, the first ``warmup`` scores fix them:
    ``a`` is their minimum and ``b`` their maximum pushed up by
    ``range_margin`` times their spread. Those scores are then learned by
    the histogram but never raise alarms.

    The margin matters because the smoothing floor keeps a fixed amount of
    mass in the top cells, which caps the threshold a few cells below ``b``.
    With ``range_margin=0`` any later score near the warm-up maximum alarms.

    Examples
    --------
    >>> dt = DynamicThreshold(a=0.0, b=18.0)
    >>> dt.step(25.0)
    (20.0, True)
    """

    def __init__(self, n_bins: int = 20, rho: float = 0.05, lambda_h: float = 0.01,
                 r_h: float = 0.005, a: float | None = None, b: float | None = None,
                 warmup: int = 100, range_margin: float = 1.0):
        if (a is None) != (b is None):
            raise ValueError("give both a and b, or neither")
        self.params = dict(n_bins=n_bins, rho=rho, lambda_h=lambda_h, r_h=r_h)
        self.warmup = int(warmup)
        if not (math.isfinite(range_margin) and range_margin >= 0):
            raise ValueError("range_margin must be finite and non-negative")
        self.range_margin = float(range_margin)
        self._pending: list[float] = []
        self.hist: ThresholdHistogram | None = None
        if a is not None:
            self.hist = ThresholdHistogram(a=a, b=b, **self.params)
        elif self.warmup < 1:
            raise ValueError("warmup must be positive when a, b are calibrated")

    def _calibrate(self):
        lo, hi = min(self._pending), max(self._pending)
        if not hi > lo:
            hi = lo + max(abs(lo), 1.0) * 1e-6
        hi += self.range_margin * (hi - lo)
        self.hist = ThresholdHistogram(a=lo, b=hi, **self.params)
        for s in self._pending:
            self.hist.update(s)
        self._pending = []

    def step(self, score: float) -> tuple[float | None, bool]:
        """Return ``(threshold, alarm)`` for ``score`` and learn it."""
        if math.isnan(score):
            raise ValueError("cannot score NaN")
        if self.hist is None:
            self._pending.append(float(score))
            if len(self._pending) >= self.warmup:
                self._calibrate()
            return None, False
        eta = self.hist.threshold()
        alarm = dto_alarm(score, eta)
        self.hist.update(score)
        return eta, alarm


def dto_run(scores: Iterable[float], **kwargs) -> tuple[np.ndarray, np.ndarray]:
    """Apply :class:`DynamicThreshold` to a whole series.

    Returns thresholds (NaN during calibration) and boolean alarms.
    """
    dt = DynamicThreshold(**kwargs)
    eta, alarm = [], []
    for s in scores:
        e, a = dt.step(float(s))
        eta.append(np.nan if e is None else e)
        alarm.append(a)
    return np.asarray(eta, dtype=float), np.asarray(alarm, dtype=bool)
