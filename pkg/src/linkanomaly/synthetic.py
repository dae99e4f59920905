"""Synthetic mention streams with a planted topic emergence.

Every user posts as a Poisson process. The number of mentions per post is
geometric, and each mention goes either to one of the user's friends
(Zipf-weighted) or, with a small probability, to someone outside that
circle. From ``emergence_time`` on, a subset of users posts
``rate_multiplier`` times faster, puts ``mention_multiplier`` times as many
mentions in each post on average, and reaches outside their circle with
probability ``novel_prob_after``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .mention import Post

DAY = 86400.0


@dataclass(frozen=True)
class SyntheticScenario:
    n_users: int = 200
    duration: float = 8 * DAY
    emergence_time: float = 7 * DAY
    start: float = 0.0
    posts_per_day: float = 30.0
    mention_theta: float = 0.7
    n_friends: int = 15
    zipf_exponent: float = 1.0
    novel_prob: float = 0.02
    n_outsiders: int = 5000
    affected_fraction: float = 1.0
    rate_multiplier: float = 3.0
    novel_prob_after: float = 0.5
    mention_multiplier: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.n_users < 2:
            raise ValueError("need at least two users")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if not 0.0 <= self.emergence_time <= self.duration:
            raise ValueError("emergence_time must lie within the stream duration")
        if self.posts_per_day < 0 or self.rate_multiplier < 0:
            raise ValueError("rates must be non-negative")
        if not 0.0 < self.mention_theta <= 1.0:
            raise ValueError("mention_theta must lie in (0, 1]")
        if self.mention_multiplier <= 0:
            raise ValueError("mention_multiplier must be positive")
        for name in ("novel_prob", "novel_prob_after", "affected_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.n_friends < 1 or self.n_friends >= self.n_users:
            raise ValueError("n_friends must be in [1, n_users)")

    @property
    def emergence_at(self) -> float:
        """Absolute time of the emergence."""
        return self.start + self.emergence_time

    def to_dict(self) -> dict:
        return asdict(self)


def _user_id(i: int) -> str:
    return f"u{i:04d}"


def _poisson_times(rng: np.random.Generator, rate: float, lo: float, hi: float) -> np.ndarray:
    if rate <= 0 or hi <= lo:
        return np.zeros(0)
    n = rng.poisson(rate * (hi - lo))
    return np.sort(rng.uniform(lo, hi, size=n))


def generate_synthetic_stream(scenario: SyntheticScenario) -> list[Post]:
    """Draw a time-ordered list of posts for ``scenario``; deterministic per seed."""
    sc = scenario
    rng = np.random.default_rng(sc.seed)
    users = [_user_id(i) for i in range(sc.n_users)]
    affected = set(rng.choice(sc.n_users, size=int(round(sc.affected_fraction * sc.n_users)), replace=False).tolist())
    ranks = np.arange(1, sc.n_friends + 1, dtype=float)
    weights = ranks ** -sc.zipf_exponent
    weights /= weights.sum()
    base_rate = sc.posts_per_day / DAY
    t_star = sc.emergence_at
    end = sc.start + sc.duration
    # geometric on {0, 1, ...} with mean (1 - theta) / theta, scaled after emergence
    mean_after = sc.mention_multiplier * (1.0 - sc.mention_theta) / sc.mention_theta
    theta_after = 1.0 / (1.0 + mean_after)

    records: list[tuple[float, int, tuple[str, ...]]] = []
    for i in range(sc.n_users):
        others = np.delete(np.arange(sc.n_users), i)
        friends = rng.choice(others, size=sc.n_friends, replace=False)
        hit = i in affected
        before = _poisson_times(rng, base_rate, sc.start, t_star)
        after = _poisson_times(rng, base_rate * (sc.rate_multiplier if hit else 1.0), t_star, end)
        for times, emerged in ((before, False), (after, hit)):
            theta = theta_after if emerged else sc.mention_theta
            novel = sc.novel_prob_after if emerged else sc.novel_prob
            ks = rng.geometric(theta, size=times.size) - 1
            for t, k in zip(times, ks):
                mentions = []
                for _ in range(int(k)):
                    if rng.random() < novel:
                        mentions.append(f"x{int(rng.integers(sc.n_outsiders)):05d}")
                    else:
                        mentions.append(_user_id(int(friends[rng.choice(sc.n_friends, p=weights)])))
                records.append((round(float(t), 3), i, tuple(mentions)))
    records.sort(key=lambda rec: (rec[0], rec[1]))
    return [Post(t, users[i], m) for t, i, m in records]

