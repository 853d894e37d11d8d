"""Situation-based blending of the two action sources.

The vehicle is considered to be turning ("control specialized") when more
than half of the steering magnitudes over the recent horizon exceed 0.1;
otherwise it is cruising ("trajectory specialized").  A weight
``alpha`` in [0, 0.5] combines the two candidate actions:

* control specialized:    a = alpha * a_ctl  + (1 - alpha) * a_traj
* trajectory specialized: a = alpha * a_traj + (1 - alpha) * a_ctl

The equations are applied exactly in this printed form.  At the default
alpha = 0.5 the two regimes coincide.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

from .control import ControlAction

log = logging.getLogger(__name__)

DEFAULT_HORIZON = 40          # ticks of steering history (2 s at 20 Hz)
TURNING_STEER_THRESHOLD = 0.1


class Situation(enum.Enum):
    CONTROL_SPECIALIZED = "control_specialized"
    TRAJECTORY_SPECIALIZED = "trajectory_specialized"


@dataclass(frozen=True, slots=True)
class FusionWeight:
    alpha: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha <= 0.5):
            raise ValueError(f"alpha must be in [0, 0.5], got {self.alpha}")


@dataclass(frozen=True, slots=True)
class SituationWindow:
    """Bounded history of executed steering magnitudes."""

    magnitudes: tuple[float, ...] = ()
    horizon: int = DEFAULT_HORIZON

    def __post_init__(self) -> None:
        if self.horizon <= 0:
            raise ValueError(f"horizon must be > 0, got {self.horizon}")
        if len(self.magnitudes) > self.horizon:
            raise ValueError("window longer than its horizon")
        for m in self.magnitudes:
            if not (0.0 <= m <= 1.0):
                raise ValueError(f"steering magnitude out of [0, 1]: {m}")

    def push(self, magnitude: float) -> "SituationWindow":
        return SituationWindow(
            magnitudes=(self.magnitudes + (magnitude,))[-self.horizon:],
            horizon=self.horizon,
        )


def detect_situation(window: SituationWindow) -> Situation:
    """Strictly more than half of the entries above the threshold means
    the vehicle is turning."""
    n = len(window.magnitudes)
    if n == 0:
        # Degenerate start-of-route case; cruising is the safe default.
        log.debug("empty steering window, defaulting to trajectory specialized")
        return Situation.TRAJECTORY_SPECIALIZED
    above = sum(1 for m in window.magnitudes if m > TURNING_STEER_THRESHOLD)
    if 2 * above > n:
        return Situation.CONTROL_SPECIALIZED
    return Situation.TRAJECTORY_SPECIALIZED


def fuse(
    situation: Situation,
    a_traj: ControlAction,
    a_ctl: ControlAction,
    weight: FusionWeight = FusionWeight(),
) -> ControlAction:
    """Blend the two actions componentwise, then restore throttle/brake
    exclusivity by zeroing the smaller of the two."""
    alpha = weight.alpha
    if situation is Situation.CONTROL_SPECIALIZED:
        w_ctl, w_traj = alpha, 1.0 - alpha
    else:
        w_traj, w_ctl = alpha, 1.0 - alpha

    throttle = w_ctl * a_ctl.throttle + w_traj * a_traj.throttle
    brake = w_ctl * a_ctl.brake + w_traj * a_traj.brake
    steer = w_ctl * a_ctl.steer + w_traj * a_traj.steer

    if throttle >= brake:
        brake = 0.0
    else:
        throttle = 0.0

    return ControlAction(throttle=throttle, brake=brake, steer=min(1.0, max(-1.0, steer)))
