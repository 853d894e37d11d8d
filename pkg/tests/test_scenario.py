"""Suite generation, actor scripts, weather effects, and the scripted
reference sources."""
import math

import pytest

from drivetune.control import PRESETS
from drivetune.noise import CH_WAYPOINT, NoiseStream
from drivetune.plant import VehicleState
from drivetune.scenario import (
    WEATHERS,
    ActorScript,
    NavState,
    Scenario,
    WeatherProfile,
    actor_step,
    build_routes,
    build_suite,
    reference_source,
)

DT = 0.05

# Frozen layout fixtures: the lead bicycle on the first route moves with
# the suite seed.
BIKE_FIXTURES = {
    7: {"arc": 141.48077750262394, "trigger": 129.48726548350282},
    8: {"arc": 138.0809790008738, "trigger": 127.03101183190135},
}


def test_suite_has_sixteen_scenarios_with_stable_ids():
    suite = build_suite(7)
    assert len(suite) == 16
    assert [s.scenario_id for s in suite] == [f"S{i}" for i in range(16)]
    routes = {s.route.route_id for s in suite}
    weathers = {s.weather.name for s in suite}
    assert len(routes) == 4
    assert weathers == {"ClearNoon", "CloudySunset", "SoftRainDawn", "HardRainNight"}


def test_suite_is_deterministic():
    assert build_suite(7) == build_suite(7)


def test_seed_moves_actor_positions():
    for seed, fixture in BIKE_FIXTURES.items():
        bike = build_suite(seed)[0].actors[0]
        assert bike.kind == "bicycle"
        assert bike.arc == pytest.approx(fixture["arc"], abs=1e-9)
        assert bike.trigger_arc == pytest.approx(fixture["trigger"], abs=1e-9)
    assert BIKE_FIXTURES[7]["trigger"] != BIKE_FIXTURES[8]["trigger"]


def test_every_archetype_is_embedded():
    suite = build_suite(7)
    kinds = {a.kind for s in suite for a in s.actors}
    assert {"bicycle", "vehicle", "pedestrian", "static_obstacle"} <= kinds
    crossers = [a for s in suite for a in s.actors
                if a.lateral_speed != 0 and math.isfinite(a.trigger_arc)]
    assert crossers, "at least one triggered crossing actor"
    boards = [a for s in suite for a in s.actors if a.kind == "static_obstacle"]
    assert boards, "static blockage archetype present"
    disturbed = [s for s in suite if s.route.disturbances]
    assert disturbed, "lane-deviation disturbance archetype present"


def test_weather_severity_ordering():
    severities = [w.severity for w in WEATHERS]
    assert severities == sorted(severities)
    assert [w.name for w in WEATHERS] == [
        "ClearNoon", "CloudySunset", "SoftRainDawn", "HardRainNight",
    ]
    for weaker, stronger in zip(WEATHERS, WEATHERS[1:]):
        assert weaker.waypoint_jitter_sigma <= stronger.waypoint_jitter_sigma
        assert weaker.speed_noise_sigma <= stronger.speed_noise_sigma
        assert weaker.detection_delay_ticks <= stronger.detection_delay_ticks


def test_route_lengths_match_polyline_arcs():
    for route in build_routes():
        arc = sum(
            math.hypot(x1 - x0, y1 - y0)
            for (x0, y0), (x1, y1) in zip(route.points, route.points[1:])
        )
        assert route.length == pytest.approx(arc, abs=1e-9)
        assert all(limit > 0 for _, limit in route.speed_limits)


def _scenario(index: int, seed: int = 7) -> Scenario:
    return build_suite(seed)[index]


def test_actor_step_before_and_after_trigger():
    scenario = _scenario(0)  # first route carries the crossing bicycle
    bike_idx = next(i for i, a in enumerate(scenario.actors) if a.kind == "bicycle")
    untriggered = tuple(None for _ in scenario.actors)
    before = actor_step(scenario, 100, untriggered, DT)
    assert before[bike_idx].lateral == scenario.actors[bike_idx].lateral

    triggered = tuple(0 if i == bike_idx else None for i in range(len(scenario.actors)))
    after = actor_step(scenario, 20, triggered, DT)  # one second of crossing
    moved = after[bike_idx].lateral - scenario.actors[bike_idx].lateral
    assert moved == pytest.approx(3.0 * 1.0, abs=1e-9)


def test_crosser_stops_at_its_far_side():
    scenario = _scenario(0)
    bike_idx = next(i for i, a in enumerate(scenario.actors) if a.kind == "bicycle")
    triggered = tuple(0 if i == bike_idx else None for i in range(len(scenario.actors)))
    late = actor_step(scenario, 2000, triggered, DT)
    assert late[bike_idx].lateral == scenario.actors[bike_idx].lateral_stop


def test_static_obstacle_never_moves():
    scenario = _scenario(11)  # hard-rain city route with the roadside board
    board_idx = next(i for i, a in enumerate(scenario.actors) if a.kind == "static_obstacle")
    poses = [
        actor_step(scenario, t, tuple(None for _ in scenario.actors), DT)[board_idx]
        for t in (0, 50, 5000)
    ]
    assert len({(p.arc, p.lateral) for p in poses}) == 1


def test_actor_step_deterministic():
    scenario = _scenario(3)
    trig = tuple(5 for _ in scenario.actors)
    assert actor_step(scenario, 77, trig, DT) == actor_step(scenario, 77, trig, DT)


def _reference(scenario, ego, tick=0, nav=NavState(), rep=0):
    noise = NoiseStream(scenario.seed, scenario.index, rep)
    triggers = tuple(None for _ in scenario.actors)
    return reference_source(scenario, ego, tick, nav, triggers, noise, DT)


def test_clear_weather_waypoints_on_centerline():
    scenario = _scenario(0)  # ClearNoon: severity 0, no jitter
    ego = VehicleState(arc_position=10.0, speed=5.0)
    bundle, _ = _reference(scenario, ego)
    assert len(bundle.waypoints) == 4
    for j, (x, y) in enumerate(bundle.waypoints, start=1):
        cx, cy = scenario.route.point_at(10.0 + 2.0 * j)
        assert (x, y) == (cx, cy)
    assert bundle.speed_meas == ego.speed
    assert bundle.lateral_meas == ego.lateral_offset


def test_waypoints_within_lane_before_jitter():
    # In severity-0 weather there is no jitter, so every waypoint must sit
    # exactly on the centerline, well inside the lane bound.
    suite = build_suite(7)
    for scenario in suite:
        if scenario.weather.severity != 0.0:
            continue
        for arc in (0.0, 50.0, 120.0):
            bundle, _ = _reference(scenario, VehicleState(arc_position=arc, speed=3.0))
            for j, (x, y) in enumerate(bundle.waypoints, start=1):
                cx, cy = scenario.route.point_at(arc + 2.0 * j)
                assert math.hypot(x - cx, y - cy) <= 1.75


def test_beyond_route_end_is_empty_reference():
    scenario = _scenario(0)
    ego = VehicleState(arc_position=scenario.route.length + 1.0, speed=2.0)
    bundle, _ = _reference(scenario, ego)
    assert bundle.waypoints == ()
    assert bundle.v_ref == 0.0


def test_stopped_lead_vehicle_zeroes_reference():
    scenario = _scenario(0)
    # Synthetic scenario variant: a stalled vehicle 10 m ahead, in lane.
    stalled = Scenario(
        scenario_id="SX", index=99, route=scenario.route, weather=WEATHERS[0],
        actors=(ActorScript(kind="vehicle", arc=30.0, lateral=0.0, radius=0.9),),
        seed=7, time_budget=60.0,
    )
    ego = VehicleState(arc_position=20.0, speed=8.0)
    bundle, _ = _reference(stalled, ego)
    assert bundle.v_ref == 0.0
    # Same actor 40 m out is beyond the gap window: reference untouched.
    far = Scenario(
        scenario_id="SY", index=98, route=scenario.route, weather=WEATHERS[0],
        actors=(ActorScript(kind="vehicle", arc=60.0, lateral=0.0, radius=0.9),),
        seed=7, time_budget=60.0,
    )
    bundle, _ = _reference(far, ego)
    assert bundle.v_ref == scenario.route.speed_limit_at(20.0)


def test_hard_rain_jitter_sigma_empirical():
    scenario = _scenario(3)  # HardRainNight on the first route
    sigma = scenario.weather.waypoint_jitter_sigma
    assert sigma == 0.5
    noise = NoiseStream(scenario.seed, scenario.index, 0)
    ego = VehicleState(arc_position=10.0, speed=5.0)
    cx, cy = scenario.route.point_at(12.0)
    deviations = []
    nav = NavState()
    triggers = tuple(None for _ in scenario.actors)
    for tick in range(10_000):
        bundle, nav = reference_source(scenario, ego, tick, nav, triggers, noise, DT)
        x, y = bundle.waypoints[0]
        deviations.append(x - cx)
    mean = sum(deviations) / len(deviations)
    var = sum((d - mean) ** 2 for d in deviations) / len(deviations)
    assert math.sqrt(var) == pytest.approx(sigma, rel=0.05)


def test_perception_pull_blocks_only_in_hard_rain():
    """The roadside board reads as an in-lane obstacle only at severity 1."""
    suite = build_suite(7)
    by_weather = {s.weather.name: s for s in suite if s.route.route_id == "harborfield-drive"}
    for name, scenario in by_weather.items():
        board = next(a for a in scenario.actors if a.kind == "static_obstacle")
        ego = VehicleState(arc_position=board.arc - 15.0, speed=8.0)
        bundle, _ = _reference(scenario, ego, tick=500)
        limit = scenario.route.speed_limit_at(ego.arc_position)
        if name == "HardRainNight":
            assert bundle.v_ref < limit * 0.5
        else:
            assert bundle.v_ref == limit


def test_severity_values_frozen():
    assert [w.severity for w in WEATHERS] == [0.0, 0.25, 0.5, 1.0]
