"""Plant dynamics: frozen constants, tick arithmetic, and motion invariants."""
import math

import pytest
from hypothesis import given, strategies as st

from drivetune.control import ControlAction
from drivetune.plant import PlantParams, VehicleState, default_params, step

# Golden value from an independent scalar Euler integration of the speed
# equation (tests/oracles/terminal_speed.py reproduces it).
TERMINAL_SPEED_100_TICKS = 13.809523966736059


def test_default_params_frozen_constants():
    p = default_params()
    assert p.dt == 0.05
    assert p.top_speed == 30.0
    assert p.accel_gain == 4.0
    assert p.brake_gain == 8.0
    assert p.drag_coeff == 0.0015
    assert p.rolling_resist == 0.1
    assert p.steer_gain == 0.8
    assert p.lane_half_width == 1.75


def test_default_params_satisfy_invariants():
    # Construction re-validates; simply building must not raise.
    default_params()


@pytest.mark.parametrize("field,value", [
    ("dt", 0.0),
    ("accel_gain", -1.0),
    ("brake_gain", 0.0),
    ("top_speed", 0.0),
    ("drag_coeff", -0.1),
    ("rolling_resist", -0.1),
])
def test_bad_params_rejected(field, value):
    kwargs = {field: value}
    with pytest.raises(ValueError, match=field):
        PlantParams(**kwargs)


def test_standstill_stays_at_rest():
    # Rolling resistance cannot produce negative speed.
    state = VehicleState(speed=0.0)
    nxt = step(state, ControlAction(), default_params())
    assert nxt.speed == 0.0


def test_single_brake_tick_exact():
    params = PlantParams(dt=0.05, brake_gain=8.0, drag_coeff=0.0, rolling_resist=0.0)
    state = VehicleState(speed=10.0)
    nxt = step(state, ControlAction(throttle=0.0, brake=1.0), params)
    assert nxt.speed == pytest.approx(9.6, abs=1e-12)


def test_terminal_speed_golden():
    params = default_params()
    state = VehicleState(speed=5.0)
    action = ControlAction(throttle=0.75)
    for _ in range(100):
        state = step(state, action, params)
    assert state.speed == pytest.approx(TERMINAL_SPEED_100_TICKS, abs=1e-12)


def test_non_finite_input_names_field():
    params = default_params()
    with pytest.raises(ValueError, match="state.speed"):
        step(VehicleState(speed=float("nan")), ControlAction(), params)
    with pytest.raises(ValueError, match="state.heading_error"):
        step(VehicleState(heading_error=float("inf")), ControlAction(), params)


def test_step_is_pure():
    params = default_params()
    state = VehicleState(speed=3.0, arc_position=12.0, lateral_offset=0.2)
    action = ControlAction(throttle=0.4, steer=0.1)
    a = step(state, action, params)
    b = step(state, action, params)
    assert a == b


_states = st.builds(
    VehicleState,
    time=st.just(0.0),
    arc_position=st.floats(0, 500),
    lateral_offset=st.floats(-5, 5),
    speed=st.floats(0, 30),
    heading_error=st.floats(-1.5, 1.5),
)
_actions = st.builds(
    ControlAction,
    throttle=st.floats(0, 1),
    brake=st.just(0.0),
    steer=st.floats(-1, 1),
)


@given(state=_states, action=_actions)
def test_speed_never_negative(state, action):
    nxt = step(state, action, default_params())
    assert nxt.speed >= 0.0


@given(state=_states, low=st.floats(0, 1), high=st.floats(0, 1))
def test_monotone_throttle_response(state, low, high):
    low, high = min(low, high), max(low, high)
    params = default_params()
    a = step(state, ControlAction(throttle=low), params)
    b = step(state, ControlAction(throttle=high), params)
    assert b.speed >= a.speed


@given(state=_states, brake=st.floats(0, 1))
def test_no_throttle_never_speeds_up(state, brake):
    nxt = step(state, ControlAction(throttle=0.0, brake=brake), default_params())
    assert nxt.speed <= state.speed
