"""Two-state burst detection on filtered event times.

Inter-event gaps are explained by a hidden chain with a low-rate
(non-burst, state 0) and a high-rate (burst, state 1) exponential gap law.
The chain starts in state 0, stays with probability ``1 - p_switch`` and
switches with probability ``p_switch``. Every entry into the burst state is
an alarm.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class BurstConfig:
    """Rates are in events per second."""

    lambda0: float = 0.001
    lambda1: float = 0.01
    p_switch: float = 0.3
    filter_threshold: float | None = None

    def __post_init__(self):
        if not 0.0 < self.lambda0 < self.lambda1:
            raise ValueError("need 0 < lambda0 < lambda1")
        if not 0.0 < self.p_switch < 1.0:
            raise ValueError("p_switch must lie in (0, 1)")
        if self.filter_threshold is not None and not math.isfinite(self.filter_threshold):
            raise ValueError("filter_threshold must be finite")


@dataclass
class BurstPath:
    times: np.ndarray
    states: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int8))
    log_prob: float = float("nan")

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def alarm_times(self) -> np.ndarray:
        return burst_alarms(self)


def filter_events(values: Sequence[float], threshold: float, tau: float = 1.0, origin: float = 0.0) -> np.ndarray:
    """Start times of active windows whose aggregated score is ``>= threshold``.

    Windows with a zero score hold no posts and never become events.
    """
    if not math.isfinite(threshold):
        raise ValueError("threshold must be finite")
    v = np.asarray(values, dtype=float)
    keep = np.flatnonzero((v != 0.0) & (v >= threshold))
    return origin + tau * keep.astype(float)


def default_filter_threshold(values: Sequence[float], quantile: float = 0.9) -> float:
    """``quantile`` of the non-zero window scores (0 if there are none)."""
    v = np.asarray(values, dtype=float)
    v = v[v != 0.0]
    return float(np.quantile(v, quantile)) if v.size else 0.0


def _log_emissions(gaps: np.ndarray, config: BurstConfig) -> np.ndarray:
    lam = np.array([config.lambda0, config.lambda1])
    return np.log(lam)[None, :] - gaps[:, None] * lam[None, :]


def path_log_prob(gaps: np.ndarray, states: Sequence[int], config: BurstConfig) -> float:
    """Joint log probability of ``states`` and ``gaps`` with the chain starting in state 0."""
    em = _log_emissions(np.asarray(gaps, dtype=float), config)
    stay, switch = math.log1p(-config.p_switch), math.log(config.p_switch)
    total, prev = 0.0, 0
    for i, s in enumerate(states):
        total += (stay if s == prev else switch) + em[i, s]
        prev = s
    return total


def burst_viterbi(events: Sequence[float], config: BurstConfig = BurstConfig()) -> BurstPath:
    """MAP state of every gap between consecutive ``events``.

    Ties are resolved toward the non-burst state, both for the final state
    and for each predecessor during backtracking.
    """
    times = np.asarray(events, dtype=float)
    if times.size < 2:
        return BurstPath(times)
    gaps = np.diff(times)
    if np.any(gaps <= 0):
        raise ValueError("event times must be strictly increasing")
    n = gaps.size
    em = _log_emissions(gaps, config)
    stay, switch = math.log1p(-config.p_switch), math.log(config.p_switch)
    back = np.zeros((n, 2), dtype=np.int8)
    d0 = stay + em[0, 0]
    d1 = switch + em[0, 1]
    for i in range(1, n):
        from0, from1 = d0 + stay, d1 + switch
        back[i, 0] = 0 if from0 >= from1 else 1
        n0 = max(from0, from1)
        from0, from1 = d0 + switch, d1 + stay
        back[i, 1] = 0 if from0 >= from1 else 1
        n1 = max(from0, from1)
        d0, d1 = n0 + em[i, 0], n1 + em[i, 1]
    states = np.zeros(n, dtype=np.int8)
    states[-1] = 0 if d0 >= d1 else 1
    for i in range(n - 1, 0, -1):
        states[i - 1] = back[i, states[i]]
    return BurstPath(times, states, max(d0, d1))


def burst_alarms(path: BurstPath) -> np.ndarray:
    """End times of the gaps where the state goes from non-burst to burst."""
    s = np.asarray(path.states, dtype=np.int8)
    if s.size == 0:
        return np.zeros(0)
    prev = np.concatenate(([0], s[:-1]))
    onset = np.flatnonzero((prev == 0) & (s == 1))
    return np.asarray(path.times, dtype=float)[onset + 1]


class OnlineBurstDetector:
    """Re-decodes the last ``suffix`` events on every new event.

    ``push`` returns the current state of the newest gap and whether that
    gap starts a new burst relative to what was previously reported.
    """

    def __init__(self, config: BurstConfig = BurstConfig(), suffix: int = 500):
        if suffix < 2:
            raise ValueError("suffix must hold at least two events")
        self.config = config
        self.events: deque[float] = deque(maxlen=suffix)
        self._last_state = 0

    def push(self, time: float) -> tuple[int, bool]:
        if self.events and time <= self.events[-1]:
            raise ValueError("event times must be strictly increasing")
        self.events.append(float(time))
        if len(self.events) < 2:
            return 0, False
        state = int(burst_viterbi(list(self.events), self.config).states[-1])
        alarm = state == 1 and self._last_state == 0
        self._last_state = state
        return state, alarm
