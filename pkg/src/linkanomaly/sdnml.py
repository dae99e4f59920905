"""Change-point scoring with sequentially discounted NML coding of an AR model.

A :class:`SDNML` instance learns a ``p``-th order autoregressive model of a
scalar stream with exponentially discounted least squares and reports, for
each new observation, its code length under the sequentially normalized
maximum likelihood density. Large code lengths mean the new value is poorly
explained by the recent past.

Two such scorers are chained by :func:`two_layer_score`: code lengths of the
raw series are smoothed, the smoothed series is scored again, and the second
code lengths are smoothed into the final change-point score.

Notation used in the code, with regression samples counted from 1:

``V``     discounted Gram matrix ``sum_j r(1-r)**(t-j) xbar_j xbar_j^T``
``chi``   discounted cross moment ``sum_j r(1-r)**(t-j) xbar_j x_j``
``a_hat`` discounted least-squares AR coefficients ``V^{-1} chi``
``S``     residual statistic accumulated after the warm-up ``t0``
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import InsufficientDataError

LOG_PI = math.log(math.pi)
_COND_LIMIT = 1e10


@dataclass(frozen=True)
class SdnmlConfig:
    """Parameters of one SDNML scorer and the smoothing that follows it.

    Parameters
    ----------
    order : int
        AR order ``p``.
    r : float
        Discounting coefficient in (0, 1); larger forgets faster.
    kappa : int
        Smoothing window applied to the code lengths.
    warmup : int, optional
        Regression samples accumulated before estimates are used. Defaults
        to ``order + 1``.
    variance_floor : float
        Added to the residual statistic inside the density.
    variance : {"cumulative", "discounted"}
        ``"cumulative"`` sums squared residuals with equal weight;
        ``"discounted"`` uses ``S_t = (1-r) S_{t-1} + r e_t**2`` and the
        matching normalizer with the extra ``(1-r)``, ``r`` factors.
    """

    order: int = 30
    r: float = 0.01
    kappa: int = 15
    warmup: int | None = None
    variance_floor: float = 1e-12
    variance: str = "cumulative"

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise ValueError("order must be a positive integer")
        if not 0.0 < self.r < 1.0:
            raise ValueError("r must lie in (0, 1)")
        if int(self.kappa) != self.kappa or self.kappa < 1:
            raise ValueError("kappa must be a positive integer")
        if self.warmup is not None and self.warmup < 1:
            raise ValueError("warmup must be positive")
        if self.variance_floor < 0:
            raise ValueError("variance_floor must be non-negative")
        if self.variance not in ("cumulative", "discounted"):
            raise ValueError("variance must be 'cumulative' or 'discounted'")

    @property
    def warmup_samples(self) -> int:
        return self.order + 1 if self.warmup is None else int(self.warmup)

    def first_loss_index(self) -> int:
        """Zero-based input index of the first emitted code length."""
        return self.order + self.warmup_samples + 1


class SDNML:
    """Online SDNML scorer for a scalar series.

    Examples
    --------
    >>> rng = np.random.default_rng(0)
    >>> det = SDNML(SdnmlConfig(order=2, r=0.05))
    >>> losses = [det.update(x) for x in rng.normal(size=50)]
    >>> losses[:5]
    [None, None, None, None, None]
    >>> all(np.isfinite(v) for v in losses[6:])
    True
    """

    def __init__(self, config: SdnmlConfig = SdnmlConfig(), diagnostics: bool = False):
        self.config = config
        p = config.order
        self.r = config.r
        self.t = 0
        self.n_reg = 0
        self.t0: int | None = None
        self.lags: deque[float] = deque(maxlen=p)
        self.V = np.zeros((p, p))
        self.Vinv: np.ndarray | None = None
        self.chi = np.zeros(p)
        self.a_hat = np.zeros(p)
        self.S = 0.0
        self.residuals: list[float] = []
        self.degenerate = False
        self.diagnostics = diagnostics
        self.trace: list[tuple[int, float, float, float]] = []

    @property
    def ready(self) -> bool:
        """True once the warm-up is over and estimates are in use."""
        return self.t0 is not None

    @property
    def n_res(self) -> int:
        return len(self.residuals)

    @property
    def variance_estimate(self) -> float:
        """``S / (t - t0)``; the ML variance for the cumulative statistic."""
        return self.S / self.n_res if self.n_res else float("nan")

    def lag_vector(self) -> np.ndarray:
        """``(x_{t-1}, ..., x_{t-p})`` for the next observation."""
        return np.fromiter(reversed(self.lags), float, len(self.lags))

    def _candidate(self, x, xbar):
        """Residual, ``d_t`` and updated residual statistic for candidate values ``x``."""
        r = self.r
        u = self.Vinv @ xbar
        c = r * float(xbar @ u)
        d = c / (1.0 - r + c)
        e = (1.0 - d) * (x - float(self.a_hat @ xbar))
        if self.config.variance == "cumulative":
            S_new = self.S + e * e
        else:
            S_new = (1.0 - r) * self.S + r * e * e
        return e, c, d, S_new

    def _log_normalizer(self, n: int, d: float) -> float:
        r = self.r
        out = 0.5 * LOG_PI - math.log1p(-d) + gammaln((n - 1) / 2.0) - gammaln(n / 2.0)
        if self.config.variance == "discounted":
            out += 0.5 * math.log((1.0 - r) / r) - 0.5 * n * math.log1p(-r)
        return out

    def _code_length(self, S_new, d: float):
        n = self.n_res + 1
        eps = self.config.variance_floor
        return (
            self._log_normalizer(n, d)
            + 0.5 * n * np.log(S_new + eps)
            - 0.5 * (n - 1) * math.log(self.S + eps)
        )

    def peek(self, x):
        """Code length (nats) the next observation would get, without updating.

        Accepts a scalar or an array of candidate values. Returns ``None``
        while no code length can be emitted yet.
        """
        if not self.ready or self.n_res < 1:
            return None
        xbar = self.lag_vector()
        _, _, d, S_new = self._candidate(np.asarray(x, dtype=float), xbar)
        out = self._code_length(S_new, d)
        return float(out) if np.ndim(out) == 0 else out

    def update(self, x: float) -> float | None:
        """Consume one observation; return its code length or ``None`` during warm-up."""
        x = float(x)
        if not math.isfinite(x):
            raise ValueError("observations must be finite")
        p = self.config.order
        if len(self.lags) < p:
            self.lags.append(x)
            self.t += 1
            return None
        xbar = self.lag_vector()
        r = self.r
        loss = None
        if self.ready:
            e, c, d, S_new = self._candidate(x, xbar)
            if self.n_res >= 1:
                loss = float(self._code_length(S_new, d))
            self._rank_one(xbar, x, c)
            self.S = float(S_new)
            self.residuals.append(float(e))
        else:
            self.V = (1.0 - r) * self.V + r * np.outer(xbar, xbar)
            self.chi = (1.0 - r) * self.chi + r * xbar * x
            self.n_reg += 1
            if self.n_reg >= self.config.warmup_samples:
                self._start()
        self.lags.append(x)
        self.t += 1
        if self.diagnostics and loss is not None:
            self.trace.append((self.t, loss, float(np.linalg.norm(self.a_hat)), self.S))
        return loss

    def _start(self):
        self.t0 = self.t + 1
        if np.linalg.cond(self.V) < _COND_LIMIT:
            self.Vinv = np.linalg.inv(self.V)
            self.Vinv = 0.5 * (self.Vinv + self.Vinv.T)
        else:
            self.degenerate = True
            self.Vinv = np.linalg.pinv(self.V, rcond=1e-10, hermitian=True)
        self.a_hat = self.Vinv @ self.chi

    def _rank_one(self, xbar: np.ndarray, x: float, c: float):
        r = self.r
        self.V = (1.0 - r) * self.V + r * np.outer(xbar, xbar)
        self.chi = (1.0 - r) * self.chi + r * xbar * x
        self.n_reg += 1
        if self.degenerate:
            if np.linalg.cond(self.V) < _COND_LIMIT:
                self.degenerate = False
                self.Vinv = np.linalg.inv(self.V)
            else:
                self.Vinv = np.linalg.pinv(self.V, rcond=1e-10, hermitian=True)
        else:
            u = self.Vinv @ xbar
            self.Vinv = (self.Vinv - (r / (1.0 - r + c)) * np.outer(u, u)) / (1.0 - r)
        self.Vinv = 0.5 * (self.Vinv + self.Vinv.T)
        self.a_hat = self.Vinv @ self.chi

    def state_dict(self) -> dict:
        """Plain-Python snapshot of the scorer; see :meth:`from_state_dict`."""
        cfg = self.config
        return {
            "config": {
                "order": cfg.order, "r": cfg.r, "kappa": cfg.kappa, "warmup": cfg.warmup,
                "variance_floor": cfg.variance_floor, "variance": cfg.variance,
            },
            "t": self.t,
            "n_reg": self.n_reg,
            "t0": self.t0,
            "lags": list(self.lags),
            "V": self.V.tolist(),
            "Vinv": None if self.Vinv is None else self.Vinv.tolist(),
            "chi": self.chi.tolist(),
            "a_hat": self.a_hat.tolist(),
            "S": self.S,
            "residuals": list(self.residuals),
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_state_dict(cls, state: dict) -> "SDNML":
        det = cls(SdnmlConfig(**state["config"]))
        det.t = state["t"]
        det.n_reg = state["n_reg"]
        det.t0 = state["t0"]
        det.lags.extend(state["lags"])
        det.V = np.array(state["V"], dtype=float)
        det.Vinv = None if state["Vinv"] is None else np.array(state["Vinv"], dtype=float)
        det.chi = np.array(state["chi"], dtype=float)
        det.a_hat = np.array(state["a_hat"], dtype=float)
        det.S = state["S"]
        det.residuals = list(state["residuals"])
        det.degenerate = state["degenerate"]
        return det

    def write_trace(self, path) -> None:
        """Dump ``(t, code_length, |a_hat|, S)`` rows collected with ``diagnostics=True``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "code_length", "a_hat_norm", "S"])
            w.writerows(self.trace)


def discounted_ar_update(state: SDNML, x: float):
    """Advance ``state`` by one observation.

    Returns ``(state, a_hat, residual)``; ``a_hat`` and ``residual`` are
    ``None`` until the warm-up has finished.
    """
    was_ready = state.ready
    state.update(x)
    if not was_ready:
        return state, (state.a_hat.copy() if state.ready else None), None
    return state, state.a_hat.copy(), state.residuals[-1]


def sdnml_step(state: SDNML, x: float):
    """Advance ``state`` by one observation and return ``(state, code_length)``."""
    return state, state.update(x)


def sdnml_code_lengths(values: Iterable[float], config: SdnmlConfig) -> tuple[np.ndarray, np.ndarray]:
    """Run one scorer over ``values``.

    Returns the zero-based input indices that received a code length and the
    code lengths themselves.
    """
    det = SDNML(config)
    idx, out = [], []
    for i, x in enumerate(values):
        loss = det.update(x)
        if loss is not None:
            idx.append(i)
            out.append(loss)
    return np.asarray(idx, dtype=np.int64), np.asarray(out, dtype=float)


def smooth_log_loss(losses: Sequence[float], kappa: int) -> np.ndarray:
    """Trailing moving average; element ``i`` averages ``losses[i : i + kappa]``.

    The output has ``len(losses) - kappa + 1`` entries (none if too short).
    """
    if kappa < 1:
        raise ValueError("kappa must be at least 1")
    losses = [float(v) for v in losses]
    n = len(losses) - kappa + 1
    if n <= 0:
        return np.zeros(0)
    return np.array([math.fsum(losses[i:i + kappa]) / kappa for i in range(n)])


@dataclass
class ChangeScoreSeries:
    """Outputs of both layers, each paired with zero-based input indices.

    ``score_index[i]`` is the input window whose arrival produced
    ``score[i]``.
    """

    loss1_index: np.ndarray
    loss1: np.ndarray
    y_index: np.ndarray
    y: np.ndarray
    loss2_index: np.ndarray
    loss2: np.ndarray
    score_index: np.ndarray
    score: np.ndarray


def min_series_length(config: SdnmlConfig, second: SdnmlConfig | None = None) -> int:
    """Shortest input for which :func:`two_layer_score` emits a final score."""
    second = config if second is None else second
    first_y = config.first_loss_index() + config.kappa - 1
    return first_y + second.first_loss_index() + second.kappa - 1 + 1


def two_layer_score(
    values: Sequence[float],
    config: SdnmlConfig = SdnmlConfig(),
    second: SdnmlConfig | None = None,
) -> ChangeScoreSeries:
    """Two-layer SDNML change-point score of ``values``.

    Parameters
    ----------
    values : sequence of float
        Regularly spaced series (for example aggregated anomaly scores).
    config : SdnmlConfig
        First-layer scorer and smoothing.
    second : SdnmlConfig, optional
        Second-layer scorer; defaults to ``config``.

    Raises
    ------
    InsufficientDataError
        If the series is too short for both warm-ups.
    """
    second = config if second is None else second
    values = np.asarray(values, dtype=float)
    need = min_series_length(config, second)
    if len(values) < need:
        raise InsufficientDataError(
            f"series of length {len(values)} is shorter than the {need} windows both layers need"
        )
    i1, l1 = sdnml_code_lengths(values, config)
    y = smooth_log_loss(l1, config.kappa)
    iy = i1[config.kappa - 1:]
    j2, l2 = sdnml_code_lengths(y, second)
    i2 = iy[j2]
    score = smooth_log_loss(l2, second.kappa)
    iscore = i2[second.kappa - 1:]
    return ChangeScoreSeries(i1, l1, iy, y, i2, l2, iscore, score)


@dataclass
class TwoLayerScorer:
    """Streaming counterpart of :func:`two_layer_score`."""

    config: SdnmlConfig = field(default_factory=SdnmlConfig)
    second: SdnmlConfig | None = None

    def __post_init__(self):
        if self.second is None:
            self.second = self.config
        self.layer1 = SDNML(self.config)
        self.layer2 = SDNML(self.second)
        self._buf1: deque[float] = deque(maxlen=self.config.kappa)
        self._buf2: deque[float] = deque(maxlen=self.second.kappa)

    def update(self, x: float) -> float | None:
        loss = self.layer1.update(x)
        if loss is None:
            return None
        self._buf1.append(loss)
        if len(self._buf1) < self.config.kappa:
            return None
        y = math.fsum(self._buf1) / self.config.kappa
        loss2 = self.layer2.update(y)
        if loss2 is None:
            return None
        self._buf2.append(loss2)
        if len(self._buf2) < self.second.kappa:
            return None
        return math.fsum(self._buf2) / self.second.kappa
