import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etdopt import (
    ControllerState,
    GainConfig,
    QuadraticTrackingObjective,
    Sinusoid,
    TargetSignal,
    TimeVaryingObjective,
    auxiliary_state,
    build_topology,
    control_input,
    integral_rate,
    neighbor_sign_sum,
    ring_edges,
    sign_vec,
    smoothed_sign_vec,
)


class AnisotropicObjective(TimeVaryingObjective):
    """Fixed non-identity diagonal Hessian for matrix-product checks."""

    dim = 2
    declared_lambda_min = 2.0
    declared_fbar = 0.0

    def evaluate(self, x, t):
        return float(x[0] ** 2 + 1.5 * x[1] ** 2)

    def gradient(self, x, t):
        return np.array([2.0 * x[0], 3.0 * x[1]])

    def hessian(self, x, t):
        return np.diag([2.0, 3.0])


def test_gains_must_be_positive():
    GainConfig(5.0, 1.0, 15.0)
    for bad in [(0, 1, 1), (1, -2, 1), (1, 1, 0)]:
        with pytest.raises(ValueError):
            GainConfig(*bad)


def test_gain_condition():
    assert GainConfig(5.0, 1.0, 15.0).satisfies_gain_condition(1.0, 1.2)
    assert not GainConfig(5.0, 1.0, 1.0).satisfies_gain_condition(1.0, 1.2)
    assert not GainConfig(5.0, 1.0, 1.2).satisfies_gain_condition(1.0, 1.2)


def test_controller_state_starts_at_zero():
    st0 = ControllerState.initial(3)
    assert np.array_equal(st0.z, np.zeros(3))


def test_sign_vec():
    assert np.array_equal(sign_vec([1.5, 0.0, -2.0]), [1.0, 0.0, -1.0])
    assert np.array_equal(sign_vec(np.zeros(4)), np.zeros(4))
    assert np.array_equal(sign_vec([-1e-12]), [-1.0])


def test_smoothed_sign_vec():
    v = np.array([3.0, 4.0])
    out = smoothed_sign_vec(v, 0.1)
    assert np.linalg.norm(out) == pytest.approx(1.0)
    inside = smoothed_sign_vec(np.array([0.01]), 0.1)
    assert inside == pytest.approx([0.1])
    assert np.array_equal(smoothed_sign_vec(np.zeros(2), 0.1), np.zeros(2))


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=4), st.floats(1e-3, 1.0))
def test_smoothed_sign_never_exceeds_unit_norm(vals, delta):
    out = smoothed_sign_vec(np.array(vals), delta)
    assert np.linalg.norm(out) <= 1.0 + 1e-12


def test_neighbor_sign_sum_examples():
    topo = build_topology(6, ring_edges(6))
    equal = [np.array([0.4])] * 6
    assert np.array_equal(neighbor_sign_sum(1, equal, topo), [0.0])

    ladder = [np.array([float(v)]) for v in range(1, 7)]
    assert np.array_equal(neighbor_sign_sum(1, ladder, topo), [-2.0])

    star = build_topology(4, [(1, 2), (1, 3), (1, 4)])
    states = [np.array([2.0]), np.array([1.0]), np.array([0.5]), np.array([-1.0])]
    assert np.array_equal(neighbor_sign_sum(1, states, star), [3.0])


def test_neighbor_sign_sum_ignores_non_neighbors():
    topo = build_topology(4, [(1, 2), (2, 3), (3, 4)])
    states = [np.array([1.0]), np.array([2.0]), np.array([5.0]), np.array([9.0])]
    before = neighbor_sign_sum(1, states, topo)
    states[2] = np.array([-100.0])  # agent 3 is not a neighbor of agent 1
    states[3] = np.array([100.0])
    assert np.array_equal(before, neighbor_sign_sum(1, states, topo))


def test_auxiliary_state():
    obj4 = QuadraticTrackingObjective(TargetSignal(0.0, 0.0, (Sinusoid(0.1, 2.0, "cos"),)))
    gains = GainConfig(5.0, 1.0, 15.0)
    s = auxiliary_state(obj4, np.array([0.0]), np.zeros(1), 0.0, gains)
    assert s == pytest.approx([-0.1])

    obj = QuadraticTrackingObjective(TargetSignal(0.0, 1.0))
    s = auxiliary_state(obj, obj.target(2.5), np.zeros(1), 2.5, gains)
    assert s == pytest.approx([0.0])

    s = auxiliary_state(obj, np.array([0.0]), np.array([3.0]), 0.0, GainConfig(1, 2, 1))
    assert s == pytest.approx([6.0])


def test_integral_rate():
    obj = QuadraticTrackingObjective(TargetSignal(0.0, 1.0))
    assert integral_rate(obj, np.array([0.3]), 1.0, np.zeros(1)) == pytest.approx([0.0])
    assert integral_rate(obj, np.array([0.3]), 1.0, np.array([-2.0])) == pytest.approx([-2.0])
    out = integral_rate(AnisotropicObjective(), np.zeros(2), 0.0, np.array([1.0, -1.0]))
    assert out == pytest.approx([2.0, -3.0])


def test_control_input_examples():
    gains = GainConfig(5.0, 1.0, 15.0)
    obj = QuadraticTrackingObjective(TargetSignal(0.0, 1.0))
    u = control_input(obj, np.array([0.0]), np.zeros(1), np.zeros(1), 0.0, gains)
    assert u == pytest.approx([0.0])

    u = control_input(obj, np.array([0.0]), np.array([0.2]), np.array([-2.0]), 0.0, gains)
    assert u == pytest.approx([-14.0])

    two_d = QuadraticTrackingObjective((TargetSignal(), TargetSignal()))
    s = np.array([0.3, 0.0])
    u = control_input(two_d, np.zeros(2), s, np.zeros(2), 0.0, gains)
    assert u == pytest.approx(-gains.k1 * s - gains.k3 * np.array([1.0, 0.0]))


def test_control_input_norm_bound():
    # ||u|| <= k1 ||s|| + k2 |N_i| sqrt(n) + k3 sqrt(n)
    rng = np.random.default_rng(11)
    gains = GainConfig(5.0, 1.0, 15.0)
    topo = build_topology(6, ring_edges(6))
    obj = QuadraticTrackingObjective((TargetSignal(0.0, 1.0), TargetSignal(0.2, 0.3)))
    n = obj.dim
    for _ in range(50):
        broadcasts = [rng.uniform(-4, 4, size=n) for _ in range(6)]
        x = rng.uniform(-4, 4, size=n)
        z = rng.uniform(-2, 2, size=n)
        t = float(rng.uniform(0, 6))
        ss = neighbor_sign_sum(1, broadcasts, topo)
        s = auxiliary_state(obj, x, z, t, gains)
        u = control_input(obj, x, s, ss, t, gains)
        bound = (
            gains.k1 * np.linalg.norm(s)
            + gains.k2 * 2 * np.sqrt(n)
            + gains.k3 * np.sqrt(n)
        )
        assert np.linalg.norm(u) <= bound + 1e-9


def test_smoothed_variant_close_to_exact_away_from_origin():
    gains = GainConfig(5.0, 1.0, 15.0)
    obj = QuadraticTrackingObjective(TargetSignal(0.0, 1.0))
    s = np.array([0.5])
    exact = control_input(obj, np.zeros(1), s, np.zeros(1), 0.0, gains, delta=None)
    smoothed = control_input(obj, np.zeros(1), s, np.zeros(1), 0.0, gains, delta=0.01)
    assert exact == pytest.approx(smoothed)
