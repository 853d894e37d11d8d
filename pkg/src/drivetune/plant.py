"""Point-mass longitudinal vehicle dynamics.

The plant advances a vehicle along a route centerline under
throttle/brake/steer commands at a fixed 20 Hz tick.  It is deliberately
the simplest model on which retuning the speed controller produces
measurably different rise time and overshoot: saturating traction,
quadratic drag, constant rolling resistance, and a kinematic
lateral-offset/heading pair instead of a full bicycle model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .control import ControlAction


@dataclass(frozen=True, slots=True)
class PlantParams:
    """Physical constants of the reference plant."""

    dt: float = 0.05              # seconds per tick
    accel_gain: float = 4.0       # m/s^2 per unit throttle at standstill
    brake_gain: float = 8.0       # m/s^2 per unit brake
    drag_coeff: float = 0.0015    # 1/m
    rolling_resist: float = 0.1   # m/s^2
    top_speed: float = 30.0       # m/s
    steer_gain: float = 0.8       # rad/s per unit steer
    lane_half_width: float = 1.75  # meters

    def __post_init__(self) -> None:
        if not (self.dt > 0):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        for name in ("accel_gain", "brake_gain", "top_speed"):
            if not (getattr(self, name) > 0):
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("drag_coeff", "rolling_resist"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")


@dataclass(frozen=True, slots=True)
class VehicleState:
    """Pose, speed, and last-applied actuation along a route."""

    time: float = 0.0
    arc_position: float = 0.0   # meters along the centerline
    lateral_offset: float = 0.0  # meters, left positive
    speed: float = 0.0          # m/s, never negative
    heading_error: float = 0.0  # radians relative to the centerline tangent
    last_throttle: float = 0.0
    last_brake: float = 0.0
    last_steer: float = 0.0


def default_params() -> PlantParams:
    """The frozen reference plant used across the workbench."""
    return PlantParams()


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} is not finite: {value!r}")


def step(state: VehicleState, action: ControlAction, params: PlantParams) -> VehicleState:
    """Advance the vehicle one tick.

    Pure function: identical inputs give bit-identical outputs.  Speed is
    clamped at zero (no reverse gear), so rolling resistance and braking
    can never drive the vehicle backwards.
    """
    for name in ("time", "arc_position", "lateral_offset", "speed", "heading_error"):
        _require_finite(f"state.{name}", getattr(state, name))
    for name in ("throttle", "brake", "steer"):
        _require_finite(f"action.{name}", getattr(action, name))

    dt = params.dt
    accel = (
        params.accel_gain * action.throttle * (1.0 - state.speed / params.top_speed)
        - params.brake_gain * action.brake
        - params.drag_coeff * state.speed * state.speed
        - params.rolling_resist
    )
    speed = max(0.0, state.speed + dt * accel)
    arc = state.arc_position + dt * speed * math.cos(state.heading_error)
    lateral = state.lateral_offset + dt * speed * math.sin(state.heading_error)
    heading = state.heading_error + dt * params.steer_gain * action.steer
    return VehicleState(
        time=state.time + dt,
        arc_position=arc,
        lateral_offset=lateral,
        speed=speed,
        heading_error=heading,
        last_throttle=action.throttle,
        last_brake=action.brake,
        last_steer=action.steer,
    )
