"""End-to-end run: parse posts, score, aggregate, detect, write results."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

import numpy as np

from .aggregate import ScoreSeries, aggregate_scores
from .burst import BurstConfig, BurstPath, burst_viterbi, default_filter_threshold, filter_events
from .dto import AlarmEvent, DynamicThreshold
from .errors import InsufficientDataError, PostParseError
from .mention import THIRTY_DAYS, MentionModel, MentionModelParams, Post
from .sdnml import ChangeScoreSeries, SdnmlConfig, two_layer_score

OUTPUT_FILES = ("scores.csv", "aggregated.csv", "changepoints.csv", "bursts.csv", "summary.json")


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable of a run. Defaults follow the reference experiments
    where those are known.

    Times are in seconds; ``a`` and ``b`` left unset are calibrated from the
    first ``dto_warmup`` change-point scores.
    """

    # mention model
    window: float = THIRTY_DAYS
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    slack: float = 0.0
    # aggregation
    tau_changepoint: float = 60.0
    tau_burst: float = 1.0
    origin: float | None = None
    # change-point scoring
    ar_order: int = 30
    r: float = 0.01
    r2: float | None = None
    kappa: int = 15
    sdnml_warmup: int | None = None
    variance_floor: float = 1e-12
    variance: str = "cumulative"
    # dynamic threshold
    rho: float = 0.05
    n_bins: int = 20
    a: float | None = None
    b: float | None = None
    lambda_h: float = 0.01
    r_h: float = 0.005
    dto_warmup: int = 1440
    dto_range_margin: float = 1.0
    # burst detection
    lambda0: float = 0.001
    lambda1: float = 0.01
    p_switch: float = 0.3
    filter_threshold: float | None = None
    filter_quantile: float = 0.9
    burst_warmup: float = 86400.0
    # run control
    changepoint: bool = True
    burst: bool = True
    reference_time: float | None = None
    seed: int = 0

    def __post_init__(self):
        # Building the per-module configs runs their validation.
        self.mention_params()
        self.sdnml_configs()
        self.burst_config()
        if self.window <= 0 or self.slack < 0:
            raise ValueError("window must be positive and slack non-negative")
        if not (self.tau_changepoint > 0 and self.tau_burst > 0):
            raise ValueError("aggregation windows must be positive")
        if (self.a is None) != (self.b is None):
            raise ValueError("give both a and b, or neither")
        if self.a is not None and not self.a < self.b:
            raise ValueError("need a < b")
        if self.n_bins < 3:
            raise ValueError("n_bins must be at least 3")
        if not 0 < self.rho < 1 or self.lambda_h < 0 or not 0 < self.r_h < 1:
            raise ValueError("invalid threshold histogram parameters")
        if self.dto_warmup < 1:
            raise ValueError("dto_warmup must be positive")
        if not (math.isfinite(self.dto_range_margin) and self.dto_range_margin >= 0):
            raise ValueError("dto_range_margin must be finite and non-negative")
        if not 0 <= self.filter_quantile <= 1 or self.burst_warmup <= 0:
            raise ValueError("invalid burst filter settings")

    @classmethod
    def from_mapping(cls, values: dict) -> "PipelineConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(values) - names
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**values)

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "PipelineConfig":
        with open(path) as fh:
            return cls.from_mapping(json.load(fh))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    def mention_params(self) -> MentionModelParams:
        return MentionModelParams(self.alpha, self.beta, self.gamma)

    def sdnml_configs(self) -> tuple[SdnmlConfig, SdnmlConfig]:
        first = SdnmlConfig(self.ar_order, self.r, self.kappa, self.sdnml_warmup,
                            self.variance_floor, self.variance)
        second = first if self.r2 is None else dataclasses.replace(first, r=self.r2)
        return first, second

    def burst_config(self) -> BurstConfig:
        return BurstConfig(self.lambda0, self.lambda1, self.p_switch, self.filter_threshold)

    def dto_kwargs(self) -> dict:
        return dict(n_bins=self.n_bins, rho=self.rho, lambda_h=self.lambda_h, r_h=self.r_h,
                    a=self.a, b=self.b, warmup=self.dto_warmup,
                    range_margin=self.dto_range_margin)


# -- input -------------------------------------------------------------------


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def parse_post(line: str, line_number: int | None = None) -> Post:
    """Parse one record.

    Two layouts are accepted: a JSON object with keys ``t``, ``user`` and
    ``mentions`` (list of ids), or tab-separated ``t<TAB>user<TAB>m1,m2``
    where the mention column may be empty or absent.
    """
    text = line.strip()
    if not text:
        raise PostParseError("empty record", line_number=line_number)
    if text.startswith("{"):
        try:
            rec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PostParseError(f"invalid JSON ({exc.msg})", line_number=line_number) from None
        if not isinstance(rec, dict):
            raise PostParseError("record is not an object", line_number=line_number)
        for key in ("t", "user", "mentions"):
            if key not in rec:
                raise PostParseError("missing field", key, line_number)
        t, user, mentions = rec["t"], rec["user"], rec["mentions"]
        if not _is_number(t):
            raise PostParseError(f"expected a number, got {t!r}", "t", line_number)
        if not isinstance(mentions, list) or not all(isinstance(v, str) and v for v in mentions):
            raise PostParseError("expected a list of non-empty strings", "mentions", line_number)
        if "k" in rec and rec["k"] != len(mentions):
            raise PostParseError(f"k={rec['k']!r} does not match {len(mentions)} mentions", "k", line_number)
    else:
        cols = text.split("\t")
        if len(cols) < 2:
            raise PostParseError("expected at least two tab-separated columns", "user", line_number)
        try:
            t = float(cols[0])
        except ValueError:
            raise PostParseError(f"expected a number, got {cols[0]!r}", "t", line_number) from None
        user = cols[1].strip()
        raw = cols[2].strip() if len(cols) > 2 else ""
        mentions = [v.strip() for v in raw.split(",")] if raw else []
        if any(not v for v in mentions):
            raise PostParseError("empty mention in list", "mentions", line_number)
    if not math.isfinite(t) or t < 0:
        raise PostParseError(f"time must be finite and non-negative, got {t!r}", "t", line_number)
    if not isinstance(user, str) or not user.strip():
        raise PostParseError("expected a non-empty string", "user", line_number)
    return Post(float(t), user.strip(), tuple(mentions))


def read_posts(source: str | os.PathLike | IO[str]) -> Iterator[Post]:
    """Yield posts from a file path or open text stream, skipping blank and ``#`` lines."""
    if isinstance(source, (str, os.PathLike)):
        with open(source) as fh:
            yield from read_posts(fh)
        return
    for number, line in enumerate(source, 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield parse_post(line, number)


def post_to_json(post: Post) -> str:
    return json.dumps({"t": post.time, "user": post.user, "mentions": list(post.mentions)})


def write_posts(posts: Iterable[Post], path: str | os.PathLike) -> int:
    n = 0
    with open(path, "w") as fh:
        for p in posts:
            fh.write(post_to_json(p) + "\n")
            n += 1
    return n


# -- run ---------------------------------------------------------------------


@dataclass
class RunArtifacts:
    config: PipelineConfig
    posts: list[Post] = field(default_factory=list)
    scores: np.ndarray = field(default_factory=lambda: np.zeros(0))
    series: ScoreSeries | None = None
    change: ChangeScoreSeries | None = None
    thresholds: np.ndarray = field(default_factory=lambda: np.zeros(0))
    alarms: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    burst_threshold: float | None = None
    burst_path: BurstPath | None = None
    diagnostics: list[str] = field(default_factory=list)

    @property
    def changepoint_alarm_times(self) -> np.ndarray:
        if self.change is None:
            return np.zeros(0)
        return self.series.window_starts[self.change.score_index[self.alarms]]

    @property
    def alarm_events(self) -> list[AlarmEvent]:
        """Change-point alarms as (window index, window start, score, threshold) records."""
        if self.change is None:
            return []
        out = []
        for j, s, e, a in zip(self.change.score_index, self.change.score, self.thresholds, self.alarms):
            if a:
                out.append(AlarmEvent(int(j), float(self.series.window_start(int(j))), float(s), float(e)))
        return out

    @property
    def burst_alarm_times(self) -> np.ndarray:
        return np.zeros(0) if self.burst_path is None else self.burst_path.alarm_times

    @property
    def insufficient(self) -> bool:
        return any(d.startswith("insufficient data") for d in self.diagnostics)

    def summary(self) -> dict:
        cfg = self.config
        ref = cfg.reference_time

        def block(enabled: bool, times: np.ndarray, status: str) -> dict:
            times = [float(t) for t in times]
            after = [t for t in times if ref is None or t >= ref]
            return {
                "enabled": enabled,
                "status": status,
                "# of detections": len(times),
                "1st detection time": after[0] if after else None,
                "first_alarm_time": times[0] if times else None,
                "alarm_times": times,
            }

        def status(kind: str, enabled: bool) -> str:
            if not enabled:
                return "disabled"
            bad = [d for d in self.diagnostics if d.startswith("insufficient data") and kind in d]
            return "insufficient data" if bad else "ok"

        return {
            "n_posts": len(self.posts),
            "n_users": len({p.user for p in self.posts}),
            "n_windows": 0 if self.series is None else len(self.series),
            "origin": None if self.series is None else self.series.origin,
            "reference_time": ref,
            "changepoint": {
                **block(cfg.changepoint, self.changepoint_alarm_times, status("change-point", cfg.changepoint)),
                "n_scores": 0 if self.change is None else len(self.change.score),
            },
            "burst": {
                **block(cfg.burst, self.burst_alarm_times, status("burst", cfg.burst)),
                "filter_threshold": self.burst_threshold,
                "n_events": 0 if self.burst_path is None else len(self.burst_path.times),
            },
            "diagnostics": list(self.diagnostics),
            "parameters": cfg.to_dict(),
        }


def score_posts(posts: Iterable[Post], config: PipelineConfig) -> tuple[list[Post], np.ndarray]:
    """Link-anomaly score of each post against its author's earlier posts."""
    model = MentionModel(config.mention_params(), config.window, config.slack)
    posts = list(posts)
    return posts, np.array([model.observe(p) for p in posts], dtype=float)


def _origin(times: np.ndarray, config: PipelineConfig) -> float:
    if config.origin is not None:
        return float(config.origin)
    return math.floor(times.min() / config.tau_changepoint) * config.tau_changepoint


def detect_changepoints(series: ScoreSeries, config: PipelineConfig):
    """Two-layer scores of ``series`` followed by dynamic thresholding."""
    first, second = config.sdnml_configs()
    change = two_layer_score(series.values, first, second)
    dt = DynamicThreshold(**config.dto_kwargs())
    eta, alarm = [], []
    for s in change.score:
        e, a = dt.step(float(s))
        eta.append(np.nan if e is None else e)
        alarm.append(a)
    return change, np.asarray(eta, dtype=float), np.asarray(alarm, dtype=bool)


def detect_bursts(times: np.ndarray, scores: np.ndarray, origin: float, config: PipelineConfig):
    """Filter ``tau_burst`` windows by aggregated score and decode burst states."""
    fine = aggregate_scores(times, scores, config.tau_burst, origin)
    threshold = config.filter_threshold
    if threshold is None:
        nwarm = max(1, int(config.burst_warmup / config.tau_burst))
        threshold = default_filter_threshold(fine.values[:nwarm], config.filter_quantile)
    events = filter_events(fine.values, threshold, fine.tau, fine.origin)
    return threshold, burst_viterbi(events, config.burst_config())


def run_pipeline(posts: Iterable[Post], config: PipelineConfig = PipelineConfig()) -> RunArtifacts:
    """Score, aggregate and run the enabled detectors on a post stream.

    Insufficient data never raises; it is recorded in ``diagnostics`` and
    the corresponding outputs stay empty.
    """
    art = RunArtifacts(config)
    art.posts, art.scores = score_posts(posts, config)
    if not art.posts:
        art.series = ScoreSeries(config.tau_changepoint, 0.0 if config.origin is None else config.origin, np.zeros(0))
        if config.changepoint:
            art.diagnostics.append("insufficient data: change-point path received no posts")
        if config.burst:
            art.diagnostics.append("insufficient data: burst path received no posts")
        return art
    times = np.array([p.time for p in art.posts])
    origin = _origin(times, config)
    art.series = aggregate_scores(times, art.scores, config.tau_changepoint, origin)
    if config.changepoint:
        try:
            art.change, art.thresholds, art.alarms = detect_changepoints(art.series, config)
        except InsufficientDataError as exc:
            art.diagnostics.append(f"insufficient data: change-point path: {exc}")
    if config.burst:
        art.burst_threshold, art.burst_path = detect_bursts(times, art.scores, origin, config)
        if len(art.burst_path.times) < 2:
            art.diagnostics.append(
                f"insufficient data: burst path has {len(art.burst_path.times)} filtered events, needs 2"
            )
    return art


# -- output ------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def _write_csv(path: Path, header, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise OSError(f"failed to write {path}: {exc.strerror or exc}") from exc


def emit_results(art: RunArtifacts, outdir: str | os.PathLike) -> dict[str, Path]:
    """Write the five result files into ``outdir`` and return their paths."""
    out = Path(outdir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    paths = {name: out / name for name in OUTPUT_FILES}

    _write_csv(paths["scores.csv"], ["time", "user", "k", "score"],
               ((_fmt(p.time), p.user, p.k, _fmt(s)) for p, s in zip(art.posts, art.scores)))

    series = art.series
    starts = series.window_starts if series is not None else np.zeros(0)
    values = series.values if series is not None else np.zeros(0)
    _write_csv(paths["aggregated.csv"], ["window_start", "s_prime"],
               ((_fmt(t), _fmt(v)) for t, v in zip(starts, values)))

    rows = []
    if art.change is not None:
        for j, s, e, a in zip(art.change.score_index, art.change.score, art.thresholds, art.alarms):
            rows.append((_fmt(starts[j]), _fmt(s), _fmt(e), int(a)))
    _write_csv(paths["changepoints.csv"], ["window_start", "score", "threshold", "alarm"], rows)

    rows = []
    path = art.burst_path
    if path is not None and len(path.times):
        alarms = set(path.alarm_times.tolist())
        rows.append((_fmt(path.times[0]), 0, 0))
        for t, s in zip(path.times[1:], path.states):
            rows.append((_fmt(t), int(s), int(float(t) in alarms)))
    _write_csv(paths["bursts.csv"], ["time", "state", "alarm"], rows)

    try:
        with open(paths["summary.json"], "w") as fh:
            json.dump(art.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"failed to write {paths['summary.json']}: {exc.strerror or exc}") from exc
    return paths


def rho_sweep(art: RunArtifacts, rhos=(0.01, 0.05, 0.1)) -> list[dict]:
    """Alarm counts of the change-point path for several ``rho`` values.

    Reuses the change scores in ``art``; only the thresholding is redone.
    """
    if art.change is None:
        raise InsufficientDataError("no change-point scores to sweep over")
    out = []
    for rho in rhos:
        kw = art.config.dto_kwargs()
        kw["rho"] = rho
        dt = DynamicThreshold(**kw)
        alarms = [dt.step(float(s))[1] for s in art.change.score]
        idx = art.change.score_index[np.asarray(alarms, dtype=bool)]
        times = art.series.window_starts[idx]
        ref = art.config.reference_time
        after = [float(t) for t in times if ref is None or t >= ref]
        out.append({"rho": rho, "# of detections": int(len(times)),
                    "1st detection time": after[0] if after else None})
    return out
