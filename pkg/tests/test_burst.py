import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linkanomaly.burst import (
    BurstConfig,
    BurstPath,
    OnlineBurstDetector,
    burst_alarms,
    burst_viterbi,
    default_filter_threshold,
    filter_events,
    path_log_prob,
)
from oracles import burst_brute_force


def times_from_gaps(gaps, start=0.0):
    return np.r_[start, start + np.cumsum(gaps)]


def random_gaps(rng, n, cfg):
    state, out = 0, []
    for _ in range(n):
        if rng.random() < cfg.p_switch:
            state = 1 - state
        out.append(rng.exponential(1.0 / (cfg.lambda1 if state else cfg.lambda0)))
    return np.maximum(np.array(out), 1e-6)


def test_exhaustive_equivalence():
    rng = np.random.default_rng(0)
    cfg = BurstConfig()
    for _ in range(200):
        gaps = random_gaps(rng, int(rng.integers(1, 13)), cfg)
        path = burst_viterbi(times_from_gaps(gaps), cfg)
        best, seq = burst_brute_force(gaps, cfg.lambda0, cfg.lambda1, cfg.p_switch)
        assert abs(path.log_prob - best) <= 1e-9
        assert tuple(path.states.tolist()) == seq
        assert path_log_prob(gaps, path.states, cfg) == pytest.approx(best, abs=1e-9)


@pytest.mark.parametrize("gaps,expected", [
    ([1000.0] * 8, [0] * 8),
    ([10.0] * 8, [1] * 8),
    ([1000.0] * 5 + [10.0] * 5, [0] * 5 + [1] * 5),
])
def test_regime_examples(gaps, expected):
    path = burst_viterbi(times_from_gaps(gaps))
    assert path.states.tolist() == expected
    assert burst_brute_force(gaps, 0.001, 0.01, 0.3)[1] == tuple(expected)
    assert len(path.alarm_times) == (1 if 1 in expected else 0)


def test_single_transition_alarm_time():
    times = times_from_gaps([1000.0] * 5 + [10.0] * 5)
    path = burst_viterbi(times)
    assert path.alarm_times.tolist() == [times[6]]


def test_ties_go_to_non_burst():
    # equal emission likelihoods make both states equally good for a lone gap
    cfg = BurstConfig(lambda0=0.001, lambda1=0.01, p_switch=0.5)
    x = np.log(10.0) / (0.01 - 0.001)
    path = burst_viterbi([0.0, x], cfg)
    assert path.states.tolist() == [0]


@pytest.mark.parametrize("states,n_alarms", [([0, 0, 1, 1, 0, 1], 2), ([0, 0, 0], 0), ([1, 1, 1], 1)])
def test_alarm_counting(states, n_alarms):
    times = np.arange(len(states) + 1, dtype=float)
    alarms = burst_alarms(BurstPath(times, np.array(states, dtype=np.int8)))
    assert len(alarms) == n_alarms
    if states[0] == 1:
        assert alarms[0] == times[1]


def test_short_and_invalid_inputs():
    assert burst_viterbi([]).states.size == 0
    assert burst_viterbi([5.0]).states.size == 0
    assert burst_alarms(burst_viterbi([5.0])).size == 0
    with pytest.raises(ValueError):
        burst_viterbi([1.0, 1.0])
    with pytest.raises(ValueError):
        BurstConfig(lambda0=0.01, lambda1=0.001)
    with pytest.raises(ValueError):
        BurstConfig(p_switch=1.0)


@given(st.lists(st.floats(0.5, 5000.0), min_size=1, max_size=40), st.floats(0.01, 100.0))
@settings(max_examples=150, deadline=None)
def test_scale_coherence(gaps, c):
    cfg = BurstConfig()
    scaled = BurstConfig(cfg.lambda0 / c, cfg.lambda1 / c, cfg.p_switch)
    a = burst_viterbi(times_from_gaps(gaps), cfg).states
    b = burst_viterbi(times_from_gaps(np.array(gaps) * c), scaled).states
    assert a.tolist() == b.tolist()


def test_filter_examples():
    assert filter_events([0.1, 5.0, 0.2], 1.0).tolist() == [1.0]
    assert filter_events([0.0, 0.3, 0.0, 2.0], 0.0).tolist() == [1.0, 3.0]
    assert filter_events([1.0, 2.0], 1.5, tau=60.0, origin=120.0).tolist() == [180.0]
    with pytest.raises(ValueError):
        filter_events([1.0], np.inf)


def test_quantile_filter_passes_about_ten_percent():
    v = np.random.default_rng(1).exponential(size=20_000)
    thr = default_filter_threshold(v, 0.9)
    frac = filter_events(v, thr).size / v.size
    assert frac == pytest.approx(0.1, abs=0.005)
    assert default_filter_threshold(np.zeros(5)) == 0.0


@given(st.lists(st.floats(0, 10), max_size=100), st.floats(-1, 11), st.floats(-1, 11))
@settings(max_examples=150, deadline=None)
def test_filter_is_monotone(values, t1, t2):
    lo, hi = sorted((t1, t2))
    assert filter_events(values, hi).size <= filter_events(values, lo).size


def test_online_detector_matches_batch_on_short_streams():
    rng = np.random.default_rng(6)
    times = times_from_gaps(random_gaps(rng, 60, BurstConfig()))
    det = OnlineBurstDetector(suffix=1000)
    online = [det.push(t)[0] for t in times][1:]
    batch = burst_viterbi(times).states.tolist()
    # the newest state of each prefix equals the batch decode of that prefix
    for i in range(2, len(times) + 1):
        assert online[i - 2] == burst_viterbi(times[:i]).states[-1]
    assert online[-1] == batch[-1]
    with pytest.raises(ValueError):
        det.push(times[-1])
