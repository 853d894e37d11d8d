"""Longitudinal PID speed controller and the fixed lateral law.

The five tunable longitudinal parameters are the proportional, integral,
and derivative gains plus a throttle clamp and a brake trigger ratio.
Two published parameterizations ship as presets: ``tcp-original`` and
``tcp-tuned``.

Realization choices that the gain values depend on:

* the integral term is the mean of a bounded sliding window of the last
  W speed errors (W = 20 by default), so it cannot wind up;
* the derivative acts on the per-tick error difference without dividing
  by dt (dt is constant, the derivative gain absorbs the scale);
* braking is bang-bang: full brake whenever the reference speed falls
  below ``brake_speed`` times the measured speed, so a larger ratio
  starts braking earlier.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

DEFAULT_PID_WINDOW = 20

LATERAL_HEADING_GAIN = 0.8
LATERAL_OFFSET_GAIN = 0.2


@dataclass(frozen=True, slots=True)
class GainSet:
    """The five tunable longitudinal control parameters."""

    kp: float
    ki: float
    kd: float
    max_throttle: float
    brake_speed: float

    def __post_init__(self) -> None:
        for name in ("kp", "ki", "kd"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not (0.0 < self.max_throttle <= 1.0):
            raise ValueError(f"max_throttle must be in (0, 1], got {self.max_throttle}")
        if not (0.0 < self.brake_speed < 1.0):
            raise ValueError(f"brake_speed must be in (0, 1), got {self.brake_speed}")


#: Named gain presets: the original controller and the retuned one.
PRESETS: dict[str, GainSet] = {
    "tcp-original": GainSet(kp=5.0, ki=0.5, kd=1.0, max_throttle=0.75, brake_speed=0.4),
    "tcp-tuned": GainSet(kp=11.0, ki=0.1, kd=1.0, max_throttle=0.8, brake_speed=0.45),
}


def resolve_gains(spec: "GainSet | str") -> GainSet:
    """Accept a GainSet or a preset name."""
    if isinstance(spec, GainSet):
        return spec
    try:
        return PRESETS[spec]
    except KeyError:
        raise KeyError(f"unknown gain preset {spec!r}; known presets: {sorted(PRESETS)}") from None


@dataclass(frozen=True, slots=True)
class ControlAction:
    """One actuation command.  Throttle and brake are mutually exclusive."""

    throttle: float = 0.0
    brake: float = 0.0
    steer: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.throttle <= 1.0):
            raise ValueError(f"throttle must be in [0, 1], got {self.throttle}")
        if not (0.0 <= self.brake <= 1.0):
            raise ValueError(f"brake must be in [0, 1], got {self.brake}")
        if not (-1.0 <= self.steer <= 1.0):
            raise ValueError(f"steer must be in [-1, 1], got {self.steer}")
        if self.throttle * self.brake != 0.0:
            raise ValueError(
                f"throttle and brake are mutually exclusive, got {self.throttle} / {self.brake}"
            )


@dataclass(frozen=True, slots=True)
class PidState:
    """Sliding error window and previous error, passed by value."""

    errors: tuple[float, ...] = ()
    prev_error: float = 0.0
    window: int = DEFAULT_PID_WINDOW

    @property
    def window_len(self) -> int:
        return len(self.errors)


def reset(pid: PidState) -> PidState:
    """Empty window, zero previous error; idempotent."""
    return PidState(errors=(), prev_error=0.0, window=pid.window)


def longitudinal_step(
    gains: GainSet, pid: PidState, v_ref: float, v: float
) -> tuple[ControlAction, PidState]:
    """One controller tick: speed reference and measured speed in,
    throttle/brake command and updated state out.

    The returned action carries steer = 0; the caller combines it with
    the lateral law's output.
    """
    if not math.isfinite(v_ref):
        raise ValueError(f"v_ref is not finite: {v_ref!r}")
    if not math.isfinite(v):
        raise ValueError(f"v is not finite: {v!r}")

    error = v_ref - v
    window = (pid.errors + (error,))[-pid.window:]
    integral = sum(window) / len(window)
    u = gains.kp * error + gains.ki * integral + gains.kd * (error - pid.prev_error)

    throttle = min(max(u, 0.0), gains.max_throttle)
    brake = 1.0 if v_ref < gains.brake_speed * v else 0.0
    if brake:
        throttle = 0.0

    return (
        ControlAction(throttle=throttle, brake=brake, steer=0.0),
        PidState(errors=window, prev_error=error, window=pid.window),
    )


def lateral_step(heading_error: float, lateral_offset: float) -> float:
    """Fixed proportional steering law; gains are not tunable here."""
    if not math.isfinite(heading_error):
        raise ValueError(f"heading_error is not finite: {heading_error!r}")
    if not math.isfinite(lateral_offset):
        raise ValueError(f"lateral_offset is not finite: {lateral_offset!r}")
    steer = -LATERAL_HEADING_GAIN * heading_error - LATERAL_OFFSET_GAIN * lateral_offset
    return min(1.0, max(-1.0, steer))
