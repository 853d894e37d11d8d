"""Deterministic scenario suite: routes, weather, scripted actors, and
the scripted reference sources that stand in for learned planners.

Sixteen scenarios (4 routes x 4 weather conditions, labeled S0..S15) are
generated from a single 64-bit seed.  Two routes have the short-town
character (tight turns, low limits), two the larger-city character
(longer, faster).  Weather degrades observation only: speed-measurement
noise, waypoint jitter, and actor-detection delay all grow with a scalar
severity; the physics never change.

Each crash archetype is embedded in at least one route:

* a bicycle that cuts across the lane when the ego approaches,
* a vehicle crossing the junction while the ego turns,
* a lane-deviation disturbance zone (bad reference heading in rain),
* a static roadside board that reads as an in-lane obstacle in heavy
  rain and stalls the vehicle in front of it.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, replace
from typing import Optional

from .control import ControlAction
from .noise import (
    CH_ACTOR_LAYOUT,
    CH_HEADING_MEAS,
    CH_LATERAL_MEAS,
    CH_SPEED_MEAS,
    CH_WAYPOINT,
    NoiseStream,
)
from .plant import VehicleState

EGO_RADIUS = 0.9               # collision footprint of the ego vehicle, m

# Reference-speed shaping around actors and control zones.
ACTOR_GAP_MIN = 10.0           # m; at or below this gap the reference speed is 0
ACTOR_GAP_FULL = 30.0          # m; at or above this gap the actor is ignored
SIGN_STOP_OFFSET = -0.6        # m; v_ref reaches 0 this far past a stop line (inside the zone)
LIGHT_STOP_OFFSET = 1.0        # m; v_ref reaches 0 this far before a red light
ZONE_GAP_FULL = 25.0           # m; start of the approach ramp to a control zone
LEAD_LATERAL_BAND = 1.2        # m; perceived |lateral| within which an actor blocks
STATIC_PULL_AT_SEV1 = 1.5      # m; roadside clutter reads this much closer in rain
STOP_RELEASE_SPEED = 0.05      # m/s; full stop threshold that satisfies a stop sign

# Observation degradation at severity 1 (scales linearly with severity).
SPEED_NOISE_AT_SEV1 = 0.3      # m/s
JITTER_AT_SEV1 = 0.5           # m
DETECTION_DELAY_AT_SEV1 = 8    # ticks
HEADING_NOISE_FRACTION = 0.25  # heading sigma = fraction * jitter sigma (rad)

# Scripted stand-in for the reactive control branch.
CTL_SPEED_GAIN = 0.3
CTL_MAX_THROTTLE = 0.7
CTL_BRAKE_RATIO = 0.35
CTL_HEADING_GAIN = 0.7
CTL_LATERAL_GAIN = 0.15

WAYPOINT_SPACING = 2.0
NUM_WAYPOINTS = 4


# ---------------------------------------------------------------------------
# Weather


@dataclass(frozen=True, slots=True)
class WeatherProfile:
    """Observation-degradation profile; severity drives every effect."""

    name: str
    severity: float
    speed_noise_sigma: float
    waypoint_jitter_sigma: float
    detection_delay_ticks: int

    @classmethod
    def from_severity(cls, name: str, severity: float) -> "WeatherProfile":
        return cls(
            name=name,
            severity=severity,
            speed_noise_sigma=SPEED_NOISE_AT_SEV1 * severity,
            waypoint_jitter_sigma=JITTER_AT_SEV1 * severity,
            detection_delay_ticks=round(DETECTION_DELAY_AT_SEV1 * severity),
        )


WEATHERS: tuple[WeatherProfile, ...] = (
    WeatherProfile.from_severity("ClearNoon", 0.0),
    WeatherProfile.from_severity("CloudySunset", 0.25),
    WeatherProfile.from_severity("SoftRainDawn", 0.5),
    WeatherProfile.from_severity("HardRainNight", 1.0),
)


# ---------------------------------------------------------------------------
# Routes


@dataclass(frozen=True, slots=True)
class ControlZone:
    """A traffic light or stop sign spanning an arc interval.

    ``schedule`` is (period_s, green_fraction, offset_s) for lights and
    None for stop signs.  The light is red when
    ((t + offset) mod period) >= green_fraction * period.
    """

    kind: str                   # 'traffic_light' | 'stop_sign'
    start_arc: float
    end_arc: float
    schedule: Optional[tuple[float, float, float]] = None

    def is_red(self, t: float) -> bool:
        if self.kind != "traffic_light" or self.schedule is None:
            return False
        period, green_fraction, offset = self.schedule
        return ((t + offset) % period) >= green_fraction * period


@dataclass(frozen=True, slots=True)
class DisturbanceZone:
    """Arc interval where the reference heading carries a severity-scaled
    bias, the scripted stand-in for a bad trajectory pushing the vehicle
    off its lane."""

    start_arc: float
    end_arc: float
    heading_bias: float         # rad at severity 1


@dataclass(frozen=True, slots=True)
class Route:
    route_id: str
    points: tuple[tuple[float, float], ...]
    cum_arcs: tuple[float, ...]
    length: float
    speed_limits: tuple[tuple[float, float], ...]   # (from_arc, limit m/s)
    control_zones: tuple[ControlZone, ...]
    disturbances: tuple[DisturbanceZone, ...]
    time_budget: float                              # seconds

    def point_at(self, arc: float) -> tuple[float, float]:
        """Interpolate the centerline at an arc position (clamped)."""
        if arc <= 0.0:
            return self.points[0]
        if arc >= self.length:
            return self.points[-1]
        i = bisect.bisect_right(self.cum_arcs, arc) - 1
        a0, a1 = self.cum_arcs[i], self.cum_arcs[i + 1]
        f = (arc - a0) / (a1 - a0)
        (x0, y0), (x1, y1) = self.points[i], self.points[i + 1]
        return (x0 + f * (x1 - x0), y0 + f * (y1 - y0))

    def speed_limit_at(self, arc: float) -> float:
        limit = self.speed_limits[0][1]
        for from_arc, value in self.speed_limits:
            if arc >= from_arc:
                limit = value
        return limit


def _trace_polyline(segments: list[tuple], step: float = 2.0) -> tuple[tuple[float, float], ...]:
    """Walk straight/arc segments and emit points every ``step`` meters."""
    x, y, heading = 0.0, 0.0, 0.0
    points = [(x, y)]
    for seg in segments:
        if seg[0] == "straight":
            length = seg[1]
            n = max(1, round(length / step))
            for _ in range(n):
                x += (length / n) * math.cos(heading)
                y += (length / n) * math.sin(heading)
                points.append((x, y))
        elif seg[0] == "arc":
            radius, angle = seg[1], seg[2]
            length = abs(radius * angle)
            n = max(2, round(length / step))
            for _ in range(n):
                heading += angle / n
                x += (length / n) * math.cos(heading)
                y += (length / n) * math.sin(heading)
                points.append((x, y))
        else:
            raise ValueError(f"unknown segment kind {seg[0]!r}")
    return tuple(points)


def _route(route_id, segments, speed_limits, zones, disturbances, time_budget) -> Route:
    points = _trace_polyline(segments)
    cum = [0.0]
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        cum.append(cum[-1] + math.hypot(x1 - x0, y1 - y0))
    return Route(
        route_id=route_id,
        points=points,
        cum_arcs=tuple(cum),
        length=cum[-1],
        speed_limits=tuple(speed_limits),
        control_zones=tuple(zones),
        disturbances=tuple(disturbances),
        time_budget=time_budget,
    )


def build_routes() -> tuple[Route, ...]:
    """The four fixed routes: two short-town, two larger-city."""
    return (
        _route(
            "teckle-junction",
            [("straight", 100.0), ("arc", 15.0, math.pi / 2), ("straight", 56.5)],
            [(0.0, 8.0), (85.0, 5.0), (125.0, 8.0)],
            [ControlZone("stop_sign", 95.0, 97.0)],
            [DisturbanceZone(76.0, 90.0, 0.5)],
            time_budget=60.0,
        ),
        _route(
            "copperline-t",
            [("straight", 70.0), ("arc", 12.0, -math.pi / 2), ("straight", 71.0)],
            [(0.0, 8.0), (60.0, 5.0), (100.0, 8.0)],
            [ControlZone("traffic_light", 68.0, 70.0, (24.0, 0.6, 5.0))],
            [],
            time_budget=55.0,
        ),
        _route(
            "harborfield-drive",
            [("straight", 150.0), ("arc", 120.0, math.pi / 9), ("straight", 148.0)],
            [(0.0, 11.0), (310.0, 7.0)],
            [ControlZone("stop_sign", 160.0, 162.0)],
            [DisturbanceZone(138.0, 152.0, 0.5)],
            time_budget=260.0,
        ),
        _route(
            "granton-loop",
            [("straight", 130.0), ("arc", 80.0, -math.pi / 6), ("straight", 148.0)],
            [(0.0, 11.0), (140.0, 6.0), (200.0, 11.0)],
            [ControlZone("traffic_light", 138.0, 140.0, (30.0, 0.6, 8.0))],
            [DisturbanceZone(118.0, 132.0, 0.55)],
            time_budget=80.0,
        ),
    )


# ---------------------------------------------------------------------------
# Actors


@dataclass(frozen=True, slots=True)
class ActorScript:
    """One scripted traffic participant.

    Motion is frozen until the ego passes ``trigger_arc``; afterwards the
    actor translates at (arc_speed, lateral_speed) until its lateral
    position reaches ``lateral_stop``.  Walkers use trigger_arc = -inf
    (moving from the first tick), static props use +inf (never moving).
    """

    kind: str                   # 'pedestrian' | 'bicycle' | 'vehicle' | 'static_obstacle'
    arc: float                  # initial arc position, m
    lateral: float              # initial lateral offset, m
    radius: float               # footprint radius, m
    trigger_arc: float = math.inf
    arc_speed: float = 0.0      # m/s once moving
    lateral_speed: float = 0.0  # m/s once moving
    lateral_stop: float = 0.0   # final lateral offset for crossers

    def __post_init__(self) -> None:
        if self.radius < 0:
            raise ValueError(f"actor radius must be >= 0, got {self.radius}")


@dataclass(frozen=True, slots=True)
class ActorPose:
    index: int
    kind: str
    arc: float
    lateral: float
    radius: float


@dataclass(frozen=True, slots=True)
class Scenario:
    scenario_id: str            # 'S0'..'S15'
    index: int
    route: Route
    weather: WeatherProfile
    actors: tuple[ActorScript, ...]
    seed: int
    time_budget: float

    def __post_init__(self) -> None:
        if self.time_budget <= 0:
            raise ValueError(f"time_budget must be > 0, got {self.time_budget}")


def build_suite(seed: int) -> list[Scenario]:
    """All 16 scenarios, fully determined by the seed.

    Scenario index = 4 * route + weather.  Archetype actors keep their
    route, but their exact trigger and spawn positions are drawn from the
    seed per scenario, as is the roadside filler traffic.
    """
    routes = build_routes()
    suite: list[Scenario] = []
    for r, route in enumerate(routes):
        for w, weather in enumerate(WEATHERS):
            index = 4 * r + w
            draw = NoiseStream(seed, scenario_index=index, repetition=0)
            u = lambda slot: draw.uniform(0, CH_ACTOR_LAYOUT, slot)  # noqa: E731
            actors: list[ActorScript] = []
            if route.route_id == "teckle-junction":
                cross_arc = 138.0 + 6.0 * u(0)
                actors.append(ActorScript(
                    kind="bicycle", arc=cross_arc, lateral=-2.6, radius=0.4,
                    trigger_arc=cross_arc - (11.0 + 2.0 * u(1)),
                    lateral_speed=3.0, lateral_stop=3.0,
                ))
                actors.append(ActorScript(
                    kind="vehicle", arc=30.0 + 30.0 * u(2), lateral=2.9, radius=0.9,
                ))
            elif route.route_id == "copperline-t":
                cross_arc = 74.0 + 4.0 * u(0)
                actors.append(ActorScript(
                    kind="vehicle", arc=cross_arc, lateral=3.2, radius=0.9,
                    trigger_arc=cross_arc - (13.0 + 2.0 * u(1)),
                    lateral_speed=-2.5, lateral_stop=-3.2,
                ))
                actors.append(ActorScript(
                    kind="pedestrian", arc=20.0 + 20.0 * u(2), lateral=-3.0, radius=0.3,
                    trigger_arc=-math.inf, arc_speed=1.2,
                ))
            elif route.route_id == "harborfield-drive":
                board_arc = 205.0 + 10.0 * u(0)
                actors.append(ActorScript(
                    kind="static_obstacle", arc=board_arc, lateral=2.2, radius=0.8,
                ))
                actors.append(ActorScript(
                    kind="vehicle", arc=60.0 + 40.0 * u(1), lateral=-3.4, radius=0.9,
                ))
                actors.append(ActorScript(
                    kind="pedestrian", arc=100.0 + 60.0 * u(2), lateral=3.0, radius=0.3,
                    trigger_arc=-math.inf, arc_speed=1.0,
                ))
            else:  # granton-loop
                actors.append(ActorScript(
                    kind="bicycle", arc=50.0 + 40.0 * u(0), lateral=3.1, radius=0.4,
                    trigger_arc=-math.inf, arc_speed=2.0,
                ))
                actors.append(ActorScript(
                    kind="vehicle", arc=260.0 + 30.0 * u(1), lateral=-3.0, radius=0.9,
                ))
            suite.append(Scenario(
                scenario_id=f"S{index}",
                index=index,
                route=route,
                weather=weather,
                actors=tuple(actors),
                seed=seed,
                time_budget=route.time_budget,
            ))
    return suite


def actor_step(
    scenario: Scenario,
    tick: int,
    trigger_ticks: tuple[Optional[int], ...],
    dt: float,
) -> tuple[ActorPose, ...]:
    """Actor poses at a tick, given when each actor's trigger fired.

    Pure in all its inputs; the harness owns the trigger bookkeeping
    because triggers depend on the ego's gain-dependent progress.
    """
    poses = []
    for i, actor in enumerate(scenario.actors):
        trig = trigger_ticks[i] if i < len(trigger_ticks) else None
        if actor.trigger_arc == -math.inf:
            trig = 0
        if trig is None or tick < trig:
            elapsed = 0.0
        else:
            elapsed = (tick - trig) * dt
        arc = actor.arc + actor.arc_speed * elapsed
        lateral = actor.lateral + actor.lateral_speed * elapsed
        if actor.lateral_speed > 0:
            lateral = min(lateral, actor.lateral_stop)
        elif actor.lateral_speed < 0:
            lateral = max(lateral, actor.lateral_stop)
        arc = min(arc, scenario.route.length)
        poses.append(ActorPose(index=i, kind=actor.kind, arc=arc, lateral=lateral,
                               radius=actor.radius))
    return tuple(poses)


# ---------------------------------------------------------------------------
# Scripted reference sources


@dataclass(frozen=True, slots=True)
class NavState:
    """Which stop-sign zones the vehicle has already satisfied."""

    satisfied_zones: frozenset[int] = frozenset()


@dataclass(frozen=True, slots=True)
class RefBundle:
    """Everything the controller layer consumes on one tick."""

    waypoints: tuple[tuple[float, float], ...]
    v_ref: float
    ctl_action: ControlAction
    speed_meas: float
    lateral_meas: float
    heading_meas: float


def _perceived_lateral(pose: ActorPose, severity: float) -> float:
    """Static props read closer to the lane center in bad weather."""
    if pose.kind != "static_obstacle":
        return pose.lateral
    pull = STATIC_PULL_AT_SEV1 * severity
    if pose.lateral >= 0:
        return max(pose.lateral - pull, 0.0)
    return min(pose.lateral + pull, 0.0)


def _zone_ramp(gap: float, limit: float, stop_offset: float) -> float:
    """Reference speed while approaching a stop line ``gap`` meters ahead.

    The ramp reaches zero at ``gap == stop_offset``: just past the line
    for stop signs (the vehicle must halt inside the zone), just before
    it for red lights (crossing the line is the infraction).
    """
    f = (gap - stop_offset) / (ZONE_GAP_FULL - stop_offset)
    return limit * min(1.0, max(0.0, f))


def _actor_ramp(gap: float, limit: float) -> float:
    f = (gap - ACTOR_GAP_MIN) / (ACTOR_GAP_FULL - ACTOR_GAP_MIN)
    return limit * min(1.0, max(0.0, f))


def reference_source(
    scenario: Scenario,
    ego: VehicleState,
    tick: int,
    nav: NavState,
    trigger_ticks: tuple[Optional[int], ...],
    noise: NoiseStream,
    dt: float,
) -> tuple[RefBundle, NavState]:
    """Scripted planner: waypoints, speed reference, and the reactive
    branch's candidate action.

    Perception is degraded by the scenario's weather: measurements carry
    noise, waypoints jitter, and actors (and light states) are seen
    ``detection_delay_ticks`` late.
    """
    route = scenario.route
    weather = scenario.weather
    sev = weather.severity

    speed_meas = ego.speed
    lateral_meas = ego.lateral_offset
    heading_meas = ego.heading_error
    if weather.speed_noise_sigma > 0:
        speed_meas = max(0.0, ego.speed + noise.normal(tick, CH_SPEED_MEAS) * weather.speed_noise_sigma)
    if weather.waypoint_jitter_sigma > 0:
        lateral_meas = ego.lateral_offset + noise.normal(tick, CH_LATERAL_MEAS) * weather.waypoint_jitter_sigma
        heading_meas = ego.heading_error + (
            noise.normal(tick, CH_HEADING_MEAS) * weather.waypoint_jitter_sigma * HEADING_NOISE_FRACTION
        )
    for dz in route.disturbances:
        if dz.start_arc <= ego.arc_position <= dz.end_arc:
            heading_meas += dz.heading_bias * sev

    # Stop-sign bookkeeping uses the true state: either the car halted
    # inside the zone or it did not.
    satisfied = nav.satisfied_zones
    for zi, zone in enumerate(route.control_zones):
        if zone.kind != "stop_sign" or zi in satisfied:
            continue
        if zone.start_arc <= ego.arc_position <= zone.end_arc:
            if ego.speed < STOP_RELEASE_SPEED:
                satisfied = satisfied | {zi}
    new_nav = NavState(satisfied_zones=satisfied) if satisfied is not nav.satisfied_zones else nav

    if ego.arc_position >= route.length:
        ctl = ControlAction(0.0, 1.0 if speed_meas > 0 else 0.0, 0.0)
        return RefBundle((), 0.0, ctl, speed_meas, lateral_meas, heading_meas), new_nav

    waypoints = []
    for j in range(1, NUM_WAYPOINTS + 1):
        x, y = route.point_at(ego.arc_position + j * WAYPOINT_SPACING)
        if weather.waypoint_jitter_sigma > 0:
            x += noise.normal(tick, CH_WAYPOINT, 2 * j) * weather.waypoint_jitter_sigma
            y += noise.normal(tick, CH_WAYPOINT, 2 * j + 1) * weather.waypoint_jitter_sigma
        waypoints.append((x, y))

    v_ref = route.speed_limit_at(ego.arc_position)
    limit = v_ref

    # Control zones: red lights and unsatisfied stop signs pull the
    # reference down along an approach ramp.  Light states are perceived
    # with the weather's detection delay.
    perceived_t = max(0.0, (tick - weather.detection_delay_ticks) * dt)
    for zi, zone in enumerate(route.control_zones):
        if zone.kind == "stop_sign":
            constrain = zi not in satisfied
            stop_offset = SIGN_STOP_OFFSET
        else:
            constrain = zone.is_red(perceived_t)
            stop_offset = LIGHT_STOP_OFFSET
        if not constrain or ego.arc_position > zone.end_arc:
            continue
        gap = zone.start_arc - ego.arc_position
        if gap > ZONE_GAP_FULL:
            continue
        v_ref = min(v_ref, _zone_ramp(gap, limit, stop_offset))

    # Actors ahead, seen with detection delay and weather perception pull.
    delayed_tick = max(0, tick - weather.detection_delay_ticks)
    for pose in actor_step(scenario, delayed_tick, trigger_ticks, dt):
        if pose.arc <= ego.arc_position:
            continue
        if abs(_perceived_lateral(pose, sev)) > LEAD_LATERAL_BAND:
            continue
        gap = pose.arc - ego.arc_position
        if gap < ACTOR_GAP_FULL:
            v_ref = min(v_ref, _actor_ramp(gap, limit))

    v_ref = max(0.0, v_ref)

    # Reactive branch: proportional speed and heading rule with its own
    # fixed brake ratio.
    brake = 1.0 if v_ref < CTL_BRAKE_RATIO * speed_meas else 0.0
    throttle = 0.0 if brake else min(CTL_MAX_THROTTLE, max(0.0, CTL_SPEED_GAIN * (v_ref - speed_meas)))
    steer = min(1.0, max(-1.0, -CTL_HEADING_GAIN * heading_meas - CTL_LATERAL_GAIN * lateral_meas))
    ctl = ControlAction(throttle=throttle, brake=brake, steer=steer)

    return RefBundle(tuple(waypoints), v_ref, ctl, speed_meas, lateral_meas, heading_meas), new_nav


__all__ = [
    "ActorPose",
    "ActorScript",
    "ControlZone",
    "DisturbanceZone",
    "EGO_RADIUS",
    "NavState",
    "RefBundle",
    "Route",
    "Scenario",
    "WEATHERS",
    "WeatherProfile",
    "actor_step",
    "build_routes",
    "build_suite",
    "reference_source",
]
