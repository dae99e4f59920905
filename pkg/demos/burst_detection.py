"""
Bursts of anomalous posts
=========================

Instead of watching the aggregated score for a change, we can keep only
the minutes whose aggregated score is in the upper tail and ask whether
those surviving events arrive unusually fast.  A two-state model with a
slow and a fast arrival rate is decoded with the Viterbi algorithm and
every entry into the fast state is an alarm.

The default arrival rates are in events per second and are slow compared
with this stream, where even a strict filter keeps an event every few
minutes.  The decoder then flags many short runs before the topic appears,
so on this data the change-point detector is the more useful of the two.
"""

from linkanomaly import PipelineConfig, SyntheticScenario, generate_synthetic_stream, run_pipeline

scenario = SyntheticScenario(seed=0)
posts = generate_synthetic_stream(scenario)
t_star = scenario.emergence_at

for quantile in (0.9, 0.99, 0.999):
    cfg = PipelineConfig(changepoint=False, filter_quantile=quantile, reference_time=t_star)
    art = run_pipeline(posts, cfg)
    alarms = art.burst_alarm_times
    after = alarms[alarms >= t_star]
    print(f"quantile {quantile}: filter {art.burst_threshold:.2f}, "
          f"{len(art.burst_path.times) - 1} events kept, "
          f"{(alarms < t_star).sum()} alarms before t*, {after.size} after")
