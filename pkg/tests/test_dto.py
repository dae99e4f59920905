import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linkanomaly.dto import (
    DynamicThreshold,
    ThresholdHistogram,
    dto_alarm,
    dto_init,
    dto_run,
    dto_threshold,
    dto_update,
)


def test_init_is_uniform():
    h = dto_init(20)
    assert np.allclose(h.q, 0.05, rtol=0, atol=1e-15)
    h = dto_init(3, a=0.0, b=1.0)
    assert np.allclose(h.q, 1 / 3, rtol=0, atol=1e-15)
    assert [h.bin_index(v) for v in (-0.1, 0.0, 0.5, 1.0, 7.0)] == [0, 1, 1, 2, 2]


@pytest.mark.parametrize("kw", [dict(n_bins=2), dict(a=1.0, b=1.0), dict(a=2.0, b=1.0),
                                dict(rho=0.0), dict(rho=1.0), dict(r_h=0.0), dict(lambda_h=-1.0)])
def test_invalid_histograms(kw):
    with pytest.raises(ValueError):
        dto_init(**kw)


def test_threshold_examples():
    assert dto_threshold(dto_init(20, 0.0, 18.0, rho=0.05)) == 20.0
    assert dto_threshold(dto_init(20, 0.0, 18.0, rho=0.5)) == 11.0
    h = ThresholdHistogram(20, 0.0, 18.0, rho=0.3, lambda_h=0.0, q1=np.r_[1.0, np.zeros(19)])
    assert dto_threshold(h) == 0.0 + 1.0 * 2


def test_update_example():
    h = dto_init(20, a=0.0, b=18.0, r_h=0.005)
    dto_update(h, 1.5)  # third cell counting from 1 is [1, 2)
    expected = np.full(20, 0.04975)
    expected[2] = 0.05475
    np.testing.assert_allclose(h.q1, expected, rtol=1e-13)


def test_smoothing_formula_example():
    h = ThresholdHistogram(20, 0.0, 1.0, lambda_h=0.01, q1=np.r_[1.0, np.zeros(19)])
    assert h.q[0] == pytest.approx(1.01 / 1.2, rel=1e-14)
    np.testing.assert_allclose(h.q[1:], 0.01 / 1.2, rtol=1e-14)


def test_repeated_first_bin_updates_increase_its_mass_to_the_fixed_point():
    h = dto_init(20, a=0.0, b=1.0)
    prev = h.q[0]
    for _ in range(3000):
        dto_update(h, -5.0)
        assert h.q[0] > prev
        prev = h.q[0]
    q1_lim = np.r_[1.0, np.zeros(19)]
    limit = (1.0 + 0.01) / (q1_lim.sum() + 20 * 0.01)
    assert prev < limit and prev == pytest.approx(limit, rel=1e-4)


def test_alarm_rule():
    assert dto_alarm(5.0, 5.0)
    assert not dto_alarm(4.999, 5.0)
    assert not dto_alarm(-1.0, 0.0)


def test_q_stays_a_distribution():
    rng = np.random.default_rng(0)
    h = dto_init(20, a=0.0, b=10.0)
    for s in rng.normal(5, 4, size=100_000):
        h.update(s)
    assert abs(math.fsum(h.q) - 1.0) <= 1e-12
    assert np.all(h.q > 0)


@given(st.lists(st.floats(-50, 50), max_size=300), st.floats(0.001, 0.999), st.floats(0.001, 0.999))
@settings(max_examples=100, deadline=None)
def test_threshold_non_increasing_in_rho(scores, rho1, rho2):
    lo, hi = sorted((rho1, rho2))
    h = dto_init(20, a=-10.0, b=10.0)
    for s in scores:
        h.update(s)
    h_lo = ThresholdHistogram(20, -10.0, 10.0, rho=lo, q1=h.q1.copy())
    h_hi = ThresholdHistogram(20, -10.0, 10.0, rho=hi, q1=h.q1.copy())
    assert h_hi.threshold() <= h_lo.threshold()


def test_nan_is_rejected():
    with pytest.raises(ValueError):
        dto_init().update(math.nan)
    with pytest.raises(ValueError):
        DynamicThreshold(a=0.0, b=1.0).step(math.nan)


def test_alarm_uses_pre_update_histogram():
    dt = DynamicThreshold(a=0.0, b=18.0)
    eta, alarm = dt.step(25.0)
    assert (eta, alarm) == (20.0, True)
    # the score is learned after the comparison and moves the next threshold
    assert dt.step(0.0)[0] == 21.0


def test_calibration_from_warmup():
    scores = np.r_[np.linspace(0.0, 10.0, 100), [5.0, 30.0]]
    dt = DynamicThreshold(warmup=100, range_margin=1.0)
    out = [dt.step(s) for s in scores]
    assert all(o == (None, False) for o in out[:100])
    assert (dt.hist.a, dt.hist.b) == (0.0, 20.0)
    assert out[100][1] is False and out[101][1] is True

    flat = DynamicThreshold(warmup=3, range_margin=0.0)
    for _ in range(3):
        flat.step(2.0)
    assert flat.hist.a == 2.0 and flat.hist.b > 2.0


def test_dto_run_shapes():
    eta, alarm = dto_run(np.arange(10.0), warmup=4)
    assert np.isnan(eta[:4]).all() and np.isfinite(eta[4:]).all()
    assert alarm.dtype == bool and not alarm[:4].any()
    with pytest.raises(ValueError):
        DynamicThreshold(a=0.0)
    with pytest.raises(ValueError):
        DynamicThreshold(range_margin=-1.0)
