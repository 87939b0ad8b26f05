import math

import numpy as np
import pytest

from etdopt import (
    NonMonotoneTimeError,
    TriggerConfig,
    TriggerState,
    measurement_error,
    trigger_function,
    update_trigger,
    zeno_report,
)


def test_config_requires_positive_parameters():
    TriggerConfig(3.0, 0.9)
    for m, a in [(0.0, 0.9), (-1.0, 0.9), (3.0, 0.0), (3.0, -0.1)]:
        with pytest.raises(ValueError):
            TriggerConfig(m, a)


def test_threshold_decays_exponentially():
    cfg = TriggerConfig(3.0, 0.9)
    assert cfg.threshold(0.0) == pytest.approx(3.0)
    assert cfg.threshold(2.0) == pytest.approx(3.0 * math.exp(-1.8))
    assert cfg.threshold(10.0) < cfg.threshold(1.0)


def test_measurement_error_zero_after_broadcast():
    state = TriggerState.initial(np.array([0.7]))
    assert np.array_equal(measurement_error(state, [0.7]), [0.0])
    assert measurement_error(state, [0.2]) == pytest.approx([0.5])


def test_trigger_function_values():
    cfg = TriggerConfig(3.0, 0.9)
    assert trigger_function(np.array([2.0]), cfg, 0.0) == pytest.approx(-1.0)
    assert trigger_function(np.zeros(1), cfg, 0.0) == pytest.approx(-3.0)
    # threshold is tiny by t = 20, any finite error fires
    assert trigger_function(np.array([0.1]), cfg, 20.0) > 0


def test_update_without_event_returns_same_object():
    cfg = TriggerConfig(3.0, 0.9)
    state = TriggerState.initial(np.array([0.0]))
    fired, after = update_trigger(state, [0.5], cfg, 0.1)
    assert not fired
    assert after is state
    assert after.event_times == [0.0]


def test_update_fires_and_resets():
    cfg = TriggerConfig(0.5, 1.0)
    state = TriggerState.initial(np.array([0.0]))
    fired, after = update_trigger(state, [1.0], cfg, 1.0)
    assert fired
    assert after is not state
    assert np.array_equal(after.x_tilde, [1.0])
    assert after.event_times == [0.0, 1.0]
    assert after.last_event_time == 1.0
    # error is reset, so re-checking at the same instant cannot fire again
    fired2, after2 = update_trigger(after, [1.0], cfg, 1.0)
    assert not fired2
    assert after2 is after


def test_update_rejects_time_reversal():
    cfg = TriggerConfig(0.5, 1.0)
    state = TriggerState.initial(np.array([0.0]), t0=2.0)
    with pytest.raises(NonMonotoneTimeError):
        update_trigger(state, [0.0], cfg, 1.0)


def test_exact_threshold_does_not_fire():
    # the event condition is strict: G > 0
    cfg = TriggerConfig(1.0, 1.0)
    state = TriggerState.initial(np.array([0.0]))
    fired, _ = update_trigger(state, [-cfg.threshold(0.5)], cfg, 0.5)
    assert not fired


def test_zeno_report_empty_log():
    rep = zeno_report([[]], horizon=6.0)
    assert rep.event_counts == [0]
    assert rep.min_gaps == [6.0]
    assert not rep.any_suspicious
    assert rep.total_events == 0


def test_zeno_report_gaps():
    rep = zeno_report([[0.0, 1.0, 2.5, 2.6]], horizon=6.0, dt=1e-4)
    assert rep.event_counts == [4]
    assert rep.min_gaps[0] == pytest.approx(0.1)
    assert rep.zeno_suspicious == [False]


def test_zeno_report_flags_grid_rate_firing():
    dt = 1e-3
    fast = [i * dt for i in range(60)]
    slow = [0.0, 0.5, 1.2, 2.0]
    rep = zeno_report([fast, slow], horizon=6.0, dt=dt, q_estimate=12.5)
    assert rep.zeno_suspicious == [True, False]
    assert rep.any_suspicious
    assert rep.q_estimate == 12.5
    assert rep.total_events == 64


def test_zeno_report_short_dt_run_not_flagged():
    dt = 1e-3
    burst = [0.0, dt, 2 * dt, 3 * dt, 1.0, 2.0]
    rep = zeno_report([burst], horizon=6.0, dt=dt)
    assert rep.zeno_suspicious == [False]
