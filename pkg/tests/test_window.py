import math

import pytest

from octrack.kalman import step as kalman_step
from octrack.signal_model import BoundaryObservation, LayerId
from octrack.window import (
    WindowConfig,
    WindowState,
    effective_observation,
    init_track,
    kdh_step,
    push,
)

EPI = LayerId.EPITHELIUM


def fill(values, cfg=WindowConfig()):
    s = WindowState()
    for v in values:
        s = push(s, v, cfg)
    return s


def test_push_first():
    s = push(WindowState(), 5.0)
    assert s.buffer == (5.0,) and s.count == 1


def test_push_evicts_oldest():
    s = fill(range(100))
    s2 = push(s, 100.0)
    assert len(s2.buffer) == 100
    assert s2.buffer[0] == 1.0 and s2.buffer[-1] == 100.0
    assert s2.count == 101


def test_push_dropout_unchanged():
    s = fill([1.0, 2.0])
    assert push(s, BoundaryObservation.dropout(EPI, 3)) is s


def test_push_rejects_nonfinite():
    with pytest.raises(ValueError):
        push(WindowState(), math.nan)


def test_warmup_passthrough():
    s = fill([400.0] * 29 + [412.5])
    assert s.count == 30
    assert effective_observation(s, 412.5) == 412.5


def test_transition_gap_passthrough():
    # counts 51..99 have no second full window yet
    s = fill([10.0] * 60 + [99.0])
    assert effective_observation(s, 99.0) == 99.0


def test_equal_windows():
    s = fill([200.0] * 100)
    assert effective_observation(s, 200.0) == 200.0


def test_weighted_halves():
    # brute force: 0.7 * mean(newer 50) + 0.3 * mean(older 50)
    values = [10.0] * 50 + [20.0] * 50
    s = fill(values)
    older, newer = values[:50], values[50:]
    expected = 0.7 * (sum(newer) / 50) + 0.3 * (sum(older) / 50)
    assert effective_observation(s, 20.0) == expected
    assert expected == pytest.approx(17.0, abs=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        WindowConfig(recent_weight=0.6, prior_weight=0.3)
    with pytest.raises(ValueError):
        WindowConfig(window_len=0)
    assert WindowConfig.from_config({"window_len": "10"}).window_len == 10


def run(pipeline, zs):
    t = init_track(zs[0])
    out = []
    for k, z in enumerate(zs):
        obs = BoundaryObservation(EPI, k, z)
        if pipeline == "kdh":
            t, est = kdh_step(t, obs)
        else:
            ks, est = kalman_step(t.kalman, obs)
            t = t._replace(kalman=ks)
        out.append(est)
    return out


def test_kdh_constant_stream():
    est = run("kdh", [42.0] * 300)
    assert all(e == 42.0 for e in est)


def test_kdh_spike_deflection_smaller_than_kalman():
    zs = [100.0] * 200 + [300.0] + [100.0] * 20
    kdh = run("kdh", zs)
    raw = run("kalman", zs)
    assert abs(kdh[200] - 100.0) < abs(raw[200] - 100.0)
    assert abs(kdh[200] - 100.0) > 0


def test_kdh_dropout_holds_estimate():
    t = init_track(50.0)
    for k in range(10):
        t, est = kdh_step(t, BoundaryObservation(EPI, k, 50.0 + k))
    before = t.window
    t2, est2 = kdh_step(t, BoundaryObservation.dropout(EPI, 10))
    assert est2 == est
    assert t2.window is before
