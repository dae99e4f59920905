"""
Spotting an emerging topic from mention behaviour
=================================================

A synthetic population of users posts at a steady rate and mostly mentions
a small circle of friends.  Part way through, a new topic appears: people
post more, mention more accounts, and start naming accounts nobody has
mentioned before.  We score every post, aggregate the scores per minute
and let the change-point detector raise alarms.
"""

from linkanomaly import PipelineConfig, SyntheticScenario, generate_synthetic_stream, run_pipeline

# the default scenario spans eight days with the topic emerging on day six
scenario = SyntheticScenario(seed=0)
posts = generate_synthetic_stream(scenario)
print(f"{len(posts)} posts from {scenario.n_users} users")

# a post's score is large when its mentions are unusual for its author
config = PipelineConfig(reference_time=scenario.emergence_at, burst=False)
art = run_pipeline(posts, config)
before = art.scores[[p.time < scenario.emergence_at for p in art.posts]]
after = art.scores[[p.time >= scenario.emergence_at for p in art.posts]]
print(f"mean post score before {before.mean():.2f}, after {after.mean():.2f}")

# the aggregated series is a per-minute sum over a trailing window
series = art.series
print(f"{len(series)} one-minute windows")

# alarms fire where the change score crosses its adaptive threshold
times = art.changepoint_alarm_times
pre = times[times < scenario.emergence_at]
post = times[times >= scenario.emergence_at]
print(f"{pre.size} alarms before emergence, {post.size} after")
if post.size:
    delay = (post[0] - scenario.emergence_at) / 60.0
    print(f"first alarm {delay:.0f} minutes after the topic appeared")

# the strongest few alarms, with score and threshold at that moment
events = sorted(art.alarm_events, key=lambda e: e.score - e.threshold, reverse=True)[:5]
for e in events:
    print(f"  day {e.time / 86400:.3f}: score {e.score:.2f} vs threshold {e.threshold:.2f}")

summary = art.summary()["changepoint"]
print(f"status {summary['status']}, {summary['# of detections']} detections, "
      f"first at t = {summary['1st detection time']:.0f} s")
