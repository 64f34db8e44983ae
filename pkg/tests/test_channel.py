import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from ohjb.channel import (ChannelParams, dbm_to_mw, link_distance, los_breakpoint,
                          los_decay, los_probability, mw_to_dbm, path_loss, sample_link,
                          transmission_delay, uplink_power)

P = ChannelParams()


def test_altitude_constants_at_30m():
    assert los_breakpoint(30.0) == 18.0
    assert los_decay(30.0) == pytest.approx(344.6668311793066, rel=1e-12)


def test_los_near_branch():
    h = 30.0
    assert los_probability(math.hypot(10.0, h), h) == 1.0
    assert los_probability(h, h) == 1.0


def test_los_far_limit():
    assert los_probability(1e6, 30.0) < 1e-4


def test_los_formula_far_branch():
    d_h, h = 150.0, 30.0
    d = math.hypot(d_h, h)
    expected = 18 / d_h + math.exp(-d_h / los_decay(h)) * (1 - 18 / d_h)
    assert los_probability(d, h) == pytest.approx(expected, rel=1e-12)


def test_los_rejects_distance_below_altitude():
    with pytest.raises(ValueError):
        los_probability(10.0, 30.0)


@given(st.floats(0, 5000), st.floats(22.5, 300))
def test_los_is_probability(d_h, h):
    p = los_probability(math.hypot(d_h, h), h)
    assert 0.0 <= p <= 1.0


def test_path_loss_reference():
    # independently evaluated at 40 digits
    assert path_loss(100.0, 30.0, 2.0, True) == pytest.approx(79.94347865855996, abs=1e-9)
    assert path_loss(100.0, 30.0, 2.0, True) == pytest.approx(79.94, abs=0.01)


def test_path_loss_unit_distance():
    assert path_loss(1.0, 30.0, 2.0, True) == pytest.approx(30.9 + 20 * math.log10(2.0))


@given(st.floats(30, 1e4), st.floats(22.5, 300))
def test_nlos_never_below_los(d, h):
    assert path_loss(d, h, 2.0, False) >= path_loss(d, h, 2.0, True)


def test_path_loss_increasing_in_distance():
    ds = np.linspace(30, 3000, 200)
    for los in (True, False):
        vals = [path_loss(d, 30.0, 2.0, los) for d in ds]
        assert np.all(np.diff(vals) > 0)


def test_path_loss_rejects_bad_inputs():
    for args in ((0.0, 30.0, 2.0), (100.0, 0.0, 2.0), (100.0, 30.0, -1.0)):
        with pytest.raises(ValueError):
            path_loss(*args, True)


def test_sample_link_extremes():
    d = link_distance([330.0, 100.0], [150.0, 100.0], 30.0)
    assert sample_link(d, P, 0.0).los
    assert not sample_link(d, P, 1.0 - 1e-12).los
    draw = sample_link(d, P, 0.999)
    assert draw.loss_db == path_loss(d, 30.0, 2.0, False)


@pytest.mark.parametrize("d_h", [50.0, 180.0, 400.0])
def test_sample_link_monte_carlo(d_h):
    rng = np.random.default_rng(int(d_h))
    d = math.hypot(d_h, 30.0)
    n = 100_000
    freq = np.mean([sample_link(d, P, u).los for u in rng.random(n)])
    assert freq == pytest.approx(los_probability(d, 30.0), abs=0.01)


def test_link_distance_is_slant_range():
    assert link_distance([150.0, 100.0], [150.0, 100.0], 30.0) == 30.0
    assert link_distance([190.0, 100.0], [150.0, 100.0], 30.0) == pytest.approx(50.0)


def test_dbm_roundtrip():
    for p in (-118.0, 0.0, 20.0, 26.0):
        assert mw_to_dbm(dbm_to_mw(p)) == pytest.approx(p)
    assert dbm_to_mw(30.0) == pytest.approx(1000.0)


def test_transmission_delay_reference():
    mp.mp.dps = 40
    snr = mp.power(10, mp.mpf(23 - 80) / 10) / (mp.power(10, mp.mpf("-11.8")) * 2e6)
    oracle = float(320 / (2e6 * mp.log(1 + snr, 2)))
    got = transmission_delay(320, 2e6, 23.0, 80.0, -118.0)
    assert got == pytest.approx(oracle, rel=1e-12)
    assert got == pytest.approx(0.0002271448508615109, rel=1e-12)


def test_transmission_delay_monotone():
    base = transmission_delay(320, 2e6, 23.0, 90.0, -118.0)
    assert transmission_delay(640, 2e6, 23.0, 90.0, -118.0) == pytest.approx(2 * base)
    assert transmission_delay(320, 2e6, 23.0, 91.0, -118.0) > base
    assert transmission_delay(320, 2e6, 26.0, 90.0, -118.0) < base


def test_transmission_delay_underflow_is_infinite():
    assert transmission_delay(320, 2e6, 20.0, 1e6, -118.0) == math.inf
    with pytest.raises(ValueError):
        transmission_delay(0, 2e6, 20.0, 80.0, -118.0)


def test_uplink_power_rule():
    assert uplink_power(0.1, 2.0, 0.5, P) == 23.0
    assert uplink_power(1.9, 2.0, 0.5, P) == 26.0
    assert uplink_power(0.0, 2.0, 2.5, P) == 26.0
    assert uplink_power(1.9, 2.0, 0.5, P, power_control=False) == 23.0


def test_channel_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(h=10.0)
    with pytest.raises(ValueError):
        ChannelParams(P_ul_o=30.0, P_ul_max=26.0)
