import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tdlemu.engine import EngineParams, TapSet, passthrough_taps, process_block
from tdlemu.oracles import brute_force_delay
from tdlemu.selfcheck import random_block
from tdlemu.verify import (MeasurementError, estimate_delay, measure_attenuation_db,
                           measure_power_dbfs, passthrough_check, rssi_to_power_dbm, to_complex)

from conftest import full_scale_tone


def test_impulse_alignment():
    ref = np.zeros(16)
    ref[0] = 1
    test = np.zeros(16)
    test[7] = 1
    est = estimate_delay(ref, test, 200e6)
    assert est.lag_samples == -7
    assert est.delay_s == pytest.approx(35e-9)
    assert est.peak_corr == pytest.approx(1.0)


def test_engine_max_tap_delay(params, rng):
    x = random_block(rng, 4096)
    y = process_block(x, TapSet(0, ((41, 32767),)), params)[0]
    est = estimate_delay(x, y, 200e6)
    assert est.delay_s == pytest.approx(205e-9, abs=1e-15)
    assert est.reliable


def test_independent_noise_unreliable(rng):
    a = random_block(rng, 4096)
    b = random_block(rng, 4096)
    est = estimate_delay(a, b, 1.0)
    assert est.peak_corr < 0.2 and not est.reliable


def test_zero_reference_errors():
    with pytest.raises(MeasurementError):
        estimate_delay(np.zeros(8), np.ones(8), 1.0)


def test_self_delay_zero(rng):
    x = random_block(rng, 300)
    est = estimate_delay(x, x, 1.0)
    assert est.lag_samples == 0 and est.peak_corr == pytest.approx(1.0)


@pytest.mark.parametrize("k", [0, 1, 5, 23, 41])
def test_matches_brute_force_oracle(params, rng, k):
    x = random_block(rng, 256)
    y = process_block(x, TapSet(2, ((k, 30000),)), params)[0]
    est = estimate_delay(x, y, 1.0)
    assert -est.lag_samples == brute_force_delay(to_complex(x), to_complex(y)) == k


def test_power_reference_tone():
    assert measure_power_dbfs(full_scale_tone(2000)) == pytest.approx(0.0, abs=0.01)
    half = full_scale_tone(2000, amplitude=16384.0)
    assert measure_power_dbfs(half) == pytest.approx(20 * math.log10(16384 / 32767), abs=0.02)
    assert measure_power_dbfs(np.zeros((10, 2))) == -math.inf
    with pytest.raises(MeasurementError):
        measure_power_dbfs(np.zeros((0, 2)))


def test_attenuation(rng):
    x = random_block(rng, 2000).astype(np.int64) // 2 * 2
    assert measure_attenuation_db(x, x) == 0.0
    assert measure_attenuation_db(x, x // 2) == pytest.approx(6.02, abs=0.01)
    with pytest.raises(MeasurementError):
        measure_attenuation_db(np.zeros((5, 2)), x[:5])


def test_rssi():
    assert rssi_to_power_dbm(-20, 73) == -93
    assert rssi_to_power_dbm(0) == -73
    assert rssi_to_power_dbm(-41.5, 0) == -41.5


@given(st.floats(-200, 200), st.floats(-100, 100))
def test_rssi_linear(rssi, k):
    assert rssi_to_power_dbm(rssi + k) - rssi_to_power_dbm(rssi) == pytest.approx(k, abs=1e-9)


def test_passthrough_check(params, rng):
    x = random_block(rng, 2048)
    rep = passthrough_check(x, process_block(x, passthrough_taps(params), params)[0])
    assert rep.passed and rep.measured_delay_s == 0 and rep.measured_atten_db == 0
    assert "pass=true" in rep.to_text()

    delayed = process_block(x, TapSet(0, ((1, 32767),)), params)[0]
    rep = passthrough_check(x, delayed)
    assert not rep.passed and rep.measured_delay_s == 1

    half = process_block(x, TapSet(1, ((0, 32767),)), params)[0]
    rep = passthrough_check(x, half)
    assert not rep.passed and rep.measured_atten_db == pytest.approx(6.02, abs=0.01)
    assert rep.to_csv().splitlines()[0].startswith("measured_delay_s,measured_atten_db")

    with pytest.raises(MeasurementError):
        passthrough_check(x, x[:-1])
