"""Leaderboard-style scoring: infractions, shutdowns, completion, and the
driving-score arithmetic.

Per run, the driving score is the route-completion percentage (0..100)
multiplied by the product of the penalty coefficients of every
infraction (1.0 for a clean run).  Globally, the driving score is the
mean penalty product times the mean completion, matching the published
score table; infraction counts per kilometre are reported alongside as a
diagnostic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .scenario import EGO_RADIUS, Scenario
from .trace import TickRecord

# Multiplicative penalty per infraction kind.
PENALTY_COEFFICIENTS: dict[str, float] = {
    "collision_pedestrian": 0.5,
    "collision_vehicle": 0.6,
    "collision_static": 0.65,
    "red_light": 0.7,
    "stop_sign": 0.8,
}
# off_road is special-cased: it contributes (1 - off_road_fraction) once.

INFRACTION_KINDS = frozenset(PENALTY_COEFFICIENTS) | {"off_road"}
SHUTDOWN_KINDS = frozenset({"route_deviation", "agent_blocked", "simulation_timeout", "route_timeout"})

ROUTE_DEVIATION_LIMIT = 30.0   # m off the planned route
AGENT_BLOCKED_SECONDS = 180.0  # continuous standstill
BLOCKED_SPEED = 0.1            # m/s; below this the vehicle counts as stopped
STOP_SIGN_SPEED = 0.1          # m/s; min zone speed above this is a violation

# Collision class per scripted actor kind; bicycles count as vehicles.
COLLISION_CLASS = {
    "pedestrian": "collision_pedestrian",
    "bicycle": "collision_vehicle",
    "vehicle": "collision_vehicle",
    "static_obstacle": "collision_static",
}


@dataclass(frozen=True, slots=True)
class InfractionEvent:
    kind: str
    time: float
    arc_position: float
    detail: str = ""
    off_road_fraction: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind not in INFRACTION_KINDS:
            raise ValueError(f"unknown infraction kind {self.kind!r}")


@dataclass(frozen=True, slots=True)
class ShutdownEvent:
    kind: str
    time: float

    def __post_init__(self) -> None:
        if self.kind not in SHUTDOWN_KINDS:
            raise ValueError(f"unknown shutdown kind {self.kind!r}")


@dataclass(frozen=True, slots=True)
class RunResult:
    scenario_id: str
    repetition: int
    completion: float              # percent, 0..100
    penalty: float                 # product of coefficients, 0..1
    infractions: tuple[InfractionEvent, ...] = ()
    shutdown: Optional[ShutdownEvent] = None
    km_driven: float = 0.0
    trace_path: Optional[str] = None

    def __post_init__(self) -> None:
        if not (0.0 <= self.completion <= 100.0):
            raise ValueError(f"completion must be in [0, 100], got {self.completion}")
        if self.km_driven < 0:
            raise ValueError(f"km_driven must be >= 0, got {self.km_driven}")


@dataclass(frozen=True, slots=True)
class ScoreCard:
    scenario_scores: dict[str, float]
    global_completion: float
    global_infraction_score: float
    global_driving_score: float
    infractions_per_km: float
    run_count: int


def penalty_score(infractions: Sequence[InfractionEvent], completion: float) -> float:
    """Product of the penalty coefficients of all events; 1.0 when clean.

    ``completion`` is kept in the signature for rubric symmetry and
    validated, but the off-road factor uses the event's own off-road
    fraction.
    """
    if not (0.0 <= completion <= 100.0):
        raise ValueError(f"completion must be in [0, 100], got {completion}")
    product = 1.0
    off_road_applied = False
    for event in infractions:
        if event.kind == "off_road":
            if off_road_applied:
                continue
            fraction = event.off_road_fraction or 0.0
            product *= max(0.0, 1.0 - fraction)
            off_road_applied = True
        else:
            try:
                product *= PENALTY_COEFFICIENTS[event.kind]
            except KeyError:
                raise ValueError(f"unknown infraction kind {event.kind!r}") from None
    return product


def driving_score(run: RunResult) -> float:
    """Completion (0..100) times penalty product (0..1)."""
    return run.completion * run.penalty


def route_completion(trace: Sequence[TickRecord], route, lane_half_width: float = 1.75) -> float:
    """Percentage of the route covered while inside the lane."""
    best = 0.0
    for row in trace:
        if abs(row.lateral) <= lane_half_width and row.arc > best:
            best = row.arc
    return min(100.0, max(0.0, 100.0 * best / route.length))


class InfractionMonitor:
    """Streaming infraction detection over tick records.

    Used identically by the live simulation loop and by replay, so a
    persisted trace always rescores to its recorded value.
    """

    def __init__(self, scenario: Scenario, lane_half_width: float = 1.75):
        self.scenario = scenario
        self.lane_half_width = lane_half_width
        self.events: list[InfractionEvent] = []
        self._touching: set[int] = set()
        self._zone_state: dict[int, dict] = {}
        self._off_road_len = 0.0
        self._off_road_since: Optional[float] = None
        self._prev: Optional[TickRecord] = None

    def update(self, row: TickRecord) -> list[InfractionEvent]:
        new: list[InfractionEvent] = []
        prev = self._prev

        # Collisions: a new overlap episode per actor index.
        touching_now: set[int] = set()
        for i, (kind, arc, lateral, radius) in enumerate(row.actors):
            d2 = (row.arc - arc) ** 2 + (row.lateral - lateral) ** 2
            reach = EGO_RADIUS + radius
            if d2 <= reach * reach:
                touching_now.add(i)
                if i not in self._touching:
                    new.append(InfractionEvent(
                        kind=COLLISION_CLASS[kind], time=row.time, arc_position=row.arc,
                        detail=f"contact with {kind} #{i}",
                    ))
        self._touching = touching_now

        # Control zones.
        for zi, zone in enumerate(self.scenario.route.control_zones):
            state = self._zone_state.setdefault(zi, {"inside": False, "min_speed": math.inf})
            if zone.kind == "traffic_light" and prev is not None:
                if prev.arc < zone.start_arc <= row.arc and zone.is_red(row.time):
                    new.append(InfractionEvent(
                        kind="red_light", time=row.time, arc_position=row.arc,
                        detail=f"crossed {zone.start_arc:.1f} m line on red",
                    ))
            if zone.kind == "stop_sign":
                inside = zone.start_arc <= row.arc <= zone.end_arc
                if inside:
                    state["inside"] = True
                    state["min_speed"] = min(state["min_speed"], row.speed)
                elif state["inside"]:
                    if state["min_speed"] > STOP_SIGN_SPEED:
                        new.append(InfractionEvent(
                            kind="stop_sign", time=row.time, arc_position=row.arc,
                            detail=f"zone minimum speed {state['min_speed']:.2f} m/s",
                        ))
                    state["inside"] = False
                    state["min_speed"] = math.inf

        # Off-road arc accumulation.
        if prev is not None and abs(row.lateral) > self.lane_half_width:
            self._off_road_len += max(0.0, row.arc - prev.arc)
            if self._off_road_since is None:
                self._off_road_since = row.time

        self._prev = row
        self.events.extend(new)
        return new

    def finalize(self) -> list[InfractionEvent]:
        events = list(self.events)
        if self._off_road_len > 0.0:
            fraction = self._off_road_len / self.scenario.route.length
            events.append(InfractionEvent(
                kind="off_road", time=self._off_road_since or 0.0,
                arc_position=0.0,
                detail=f"{self._off_road_len:.1f} m outside the lane",
                off_road_fraction=fraction,
            ))
        return events


class ShutdownMonitor:
    """Streaming shutdown detection; at most one shutdown ends a run."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.event: Optional[ShutdownEvent] = None
        self._blocked_since: Optional[float] = None

    def update(self, row: TickRecord) -> Optional[ShutdownEvent]:
        if self.event is not None:
            return self.event
        if abs(row.lateral) > ROUTE_DEVIATION_LIMIT:
            self.event = ShutdownEvent("route_deviation", row.time)
            return self.event
        if row.speed < BLOCKED_SPEED:
            if self._blocked_since is None:
                self._blocked_since = row.time
            elif row.time - self._blocked_since >= AGENT_BLOCKED_SECONDS:
                self.event = ShutdownEvent("agent_blocked", row.time)
                return self.event
        else:
            self._blocked_since = None
        if row.time > self.scenario.time_budget:
            self.event = ShutdownEvent("route_timeout", row.time)
            return self.event
        return None


def detect_infractions(trace: Sequence[TickRecord], scenario: Scenario,
                       lane_half_width: float = 1.75) -> list[InfractionEvent]:
    """Rubric events over a finalized trace."""
    _check_trace(trace)
    monitor = InfractionMonitor(scenario, lane_half_width)
    for row in trace:
        monitor.update(row)
    return monitor.finalize()


def detect_shutdown(trace: Sequence[TickRecord], scenario: Scenario) -> Optional[ShutdownEvent]:
    _check_trace(trace)
    monitor = ShutdownMonitor(scenario)
    for row in trace:
        if monitor.update(row) is not None:
            break
    return monitor.event


def _check_trace(trace: Sequence[TickRecord]) -> None:
    prev = None
    for row in trace:
        if prev is not None and row.tick != prev.tick + 1:
            raise ValueError(f"trace ticks not contiguous at tick {row.tick}")
        prev = row


def score_trace(trace: Sequence[TickRecord], scenario: Scenario,
                repetition: int = 0, trace_path: Optional[str] = None,
                lane_half_width: float = 1.75) -> RunResult:
    """Full scoring pipeline over a trace: completion, infractions,
    shutdown, penalty."""
    infractions = detect_infractions(trace, scenario, lane_half_width)
    shutdown = detect_shutdown(trace, scenario)
    completion = route_completion(trace, scenario.route, lane_half_width)
    km = max((row.arc for row in trace), default=0.0) / 1000.0
    return RunResult(
        scenario_id=scenario.scenario_id,
        repetition=repetition,
        completion=completion,
        penalty=penalty_score(infractions, completion),
        infractions=tuple(infractions),
        shutdown=shutdown,
        km_driven=km,
        trace_path=trace_path,
    )


def aggregate(runs: Sequence[RunResult]) -> ScoreCard:
    """Suite aggregation: mean score per scenario, then global completion
    times global penalty."""
    if not runs:
        raise ValueError("cannot aggregate an empty run list")
    by_scenario: dict[str, list[RunResult]] = {}
    for run in runs:
        by_scenario.setdefault(run.scenario_id, []).append(run)
    scenario_scores = {
        sid: sum(driving_score(r) for r in group) / len(group)
        for sid, group in sorted(by_scenario.items())
    }
    global_completion = sum(r.completion for r in runs) / len(runs)
    global_infraction = sum(r.penalty for r in runs) / len(runs)
    total_km = sum(r.km_driven for r in runs)
    total_events = sum(len(r.infractions) for r in runs)
    return ScoreCard(
        scenario_scores=scenario_scores,
        global_completion=global_completion,
        global_infraction_score=global_infraction,
        global_driving_score=global_infraction * global_completion,
        infractions_per_km=(total_events / total_km) if total_km > 0 else 0.0,
        run_count=len(runs),
    )
