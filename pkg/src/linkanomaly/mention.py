"""Per-user mention model and link-anomaly scoring.

Each user's normal behaviour is summarised by two predictive laws learned
from that user's posts inside a sliding time window:

* the number of mentions per post, a geometric law whose parameter is
  integrated out under a beta prior, and
* the identity of each mentionee, a Chinese restaurant process (CRP) that
  reserves mass for users never mentioned before.

The anomaly score of a new post is its negative log predictive probability
(in nats) under the poster's current window.
"""

from __future__ import annotations

import bisect
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable

from .errors import StreamOrderError

THIRTY_DAYS = 30 * 86400.0


@dataclass(frozen=True)
class Post:
    """One item of a social stream.

    Parameters
    ----------
    time : float
        Seconds since epoch.
    user : str
        Author identifier.
    mentions : tuple of str
        Mentioned users in order of appearance; duplicates are kept.
    """

    time: float
    user: str
    mentions: tuple[str, ...] = ()

    def __post_init__(self):
        if not isinstance(self.mentions, tuple):
            object.__setattr__(self, "mentions", tuple(self.mentions))
        if not self.user:
            raise ValueError("user identifier must be non-empty")

    @property
    def k(self) -> int:
        """Number of mentions in the post."""
        return len(self.mentions)


@dataclass(frozen=True)
class MentionModelParams:
    """Hyperparameters of the mention model.

    ``alpha`` and ``beta`` are the shapes of the beta prior on the geometric
    parameter, ``gamma`` is the CRP concentration.
    """

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")


class UserHistory:
    """Sliding-window training set of one user with sufficient statistics.

    Parameters
    ----------
    owner : str
        User identifier the window belongs to.
    window : float
        Window length ``T`` in seconds.
    slack : float
        Accepted lateness (seconds) of a post relative to the newest entry.
    """

    def __init__(self, owner: str = "", window: float = THIRTY_DAYS, slack: float = 0.0):
        if window <= 0:
            raise ValueError("window length must be positive")
        if slack < 0:
            raise ValueError("slack must be non-negative")
        self.owner = owner
        self.window = float(window)
        self.slack = float(slack)
        self.entries: deque[tuple[float, tuple[str, ...]]] = deque()
        self.m = 0
        self.counts: Counter[str] = Counter()

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def latest(self) -> float | None:
        return self.entries[-1][0] if self.entries else None

    def evict(self, now: float) -> None:
        """Drop every entry older than ``now - window``."""
        cutoff = now - self.window
        while self.entries and self.entries[0][0] < cutoff:
            _, mentions = self.entries.popleft()
            self.m -= len(mentions)
            self.counts.subtract(mentions)
            for v in set(mentions):
                if self.counts[v] <= 0:
                    del self.counts[v]

    def check_order(self, time: float) -> None:
        latest = self.latest
        if latest is not None and time < latest - self.slack:
            raise StreamOrderError(
                f"post at t={time} for user {self.owner!r} is earlier than "
                f"t={latest} by more than the allowed slack {self.slack}"
            )

    def add(self, post: Post) -> None:
        """Append ``post`` to the window (no eviction)."""
        self.check_order(post.time)
        item = (float(post.time), post.mentions)
        if self.entries and post.time < self.entries[-1][0]:
            times = [t for t, _ in self.entries]
            self.entries.insert(bisect.bisect_right(times, post.time), item)
        else:
            self.entries.append(item)
        self.m += post.k
        self.counts.update(post.mentions)

    def copy(self) -> "UserHistory":
        other = UserHistory(self.owner, self.window, self.slack)
        other.entries = deque(self.entries)
        other.m = self.m
        other.counts = Counter(self.counts)
        return other

    def __repr__(self):
        return f"UserHistory(owner={self.owner!r}, n={self.n}, m={self.m}, distinct={len(self.counts)})"


def update_history(history: UserHistory, post: Post, now: float | None = None) -> UserHistory:
    """Add ``post`` to ``history`` and evict entries outside ``[now - T, now]``.

    The history is modified in place and also returned. ``now`` defaults to
    the post time.
    """
    now = post.time if now is None else now
    history.check_order(post.time)
    history.add(post)
    history.evict(now)
    return history


def geometric_pmf(k: int, theta: float) -> float:
    """Probability of ``k`` mentions under a geometric law, ``(1-theta)**k * theta``."""
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta!r}")
    if k < 0:
        raise ValueError("k must be non-negative")
    return (1.0 - theta) ** k * theta


def log_predict_mention_count(k: int, n: int, m: int, params: MentionModelParams = MentionModelParams()) -> float:
    """Log of :func:`predict_mention_count`."""
    if k < 0 or n < 0 or m < 0:
        raise ValueError("k, n and m must be non-negative")
    a, b = params.alpha, params.beta
    out = math.log(n + a) - math.log(m + k + b)
    out += math.fsum(math.log(m + b + j) - math.log(n + m + a + b + j) for j in range(k + 1))
    return out


def predict_mention_count(k: int, n: int, m: int, params: MentionModelParams = MentionModelParams()) -> float:
    """Beta-geometric predictive probability of a post having ``k`` mentions.

    Parameters
    ----------
    k : int
        Mention count being predicted.
    n : int
        Number of posts in the training window.
    m : int
        Total mentions over those posts.
    params : MentionModelParams
        Prior shapes ``alpha`` and ``beta`` are used.

    Returns
    -------
    float
        ``(n+a)/(m+k+b) * prod_{j=0..k} (m+b+j)/(n+m+a+b+j)``.
    """
    return math.exp(log_predict_mention_count(k, n, m, params))


def predict_mentionee(v: Hashable, history: UserHistory, params: MentionModelParams = MentionModelParams()) -> float:
    """CRP predictive probability of mentioning ``v``.

    A previously mentioned user gets ``m_v / (m + gamma)``; for a user absent
    from the window the returned value is the total mass ``gamma / (m + gamma)``
    reserved for all unseen users.
    """
    m_v = history.counts.get(v, 0)
    denom = history.m + params.gamma
    if m_v >= 1:
        return m_v / denom
    return params.gamma / denom


def link_anomaly_score(post: Post, history: UserHistory, params: MentionModelParams = MentionModelParams()) -> float:
    """Negative log predictive probability of ``post`` given ``history`` (nats).

    ``history`` must already be restricted to the poster's window at the post
    time and must not contain the post itself.
    """
    score = -log_predict_mention_count(post.k, history.n, history.m, params)
    for v in post.mentions:
        score -= math.log(predict_mentionee(v, history, params))
    return score


@dataclass
class MentionModel:
    """Per-user histories keyed by user id, scoring each post before learning it.

    Examples
    --------
    >>> model = MentionModel()
    >>> round(model.observe(Post(0.0, "bob", ("alice",))), 4)
    1.7918
    """

    params: MentionModelParams = field(default_factory=MentionModelParams)
    window: float = THIRTY_DAYS
    slack: float = 0.0
    histories: dict[str, UserHistory] = field(default_factory=dict)

    def history(self, user: str) -> UserHistory:
        h = self.histories.get(user)
        if h is None:
            h = self.histories[user] = UserHistory(user, self.window, self.slack)
        return h

    def score(self, post: Post) -> float:
        """Score ``post`` against its author's window without learning it."""
        h = self.history(post.user)
        h.check_order(post.time)
        h.evict(post.time)
        return link_anomaly_score(post, h, self.params)

    def observe(self, post: Post) -> float:
        """Score ``post``, then add it to its author's window."""
        s = self.score(post)
        self.histories[post.user].add(post)
        return s

    def score_stream(self, posts: Iterable[Post]) -> list[float]:
        return [self.observe(p) for p in posts]


def crp_masses(history: UserHistory, params: MentionModelParams = MentionModelParams()) -> tuple[dict[str, float], float]:
    """Return the CRP probability of every seen mentionee and the unseen mass."""
    denom = history.m + params.gamma
    seen = {v: c / denom for v, c in history.counts.items() if c >= 1}
    return seen, params.gamma / denom


def mention_count_partial_sum(n: int, m: int, params: MentionModelParams, kmax: int) -> float:
    """Sum of the predictive mention-count law over ``k = 0..kmax``.

    Terms come from the ratio of consecutive probabilities, so the cost is
    linear in ``kmax``.
    """
    a, b = params.alpha, params.beta
    term = predict_mention_count(0, n, m, params)
    terms = [term]
    for k in range(kmax):
        term *= (m + k + b) / (m + k + 1 + b) * (m + b + k + 1) / (n + m + a + b + k + 1)
        terms.append(term)
    return math.fsum(terms)

