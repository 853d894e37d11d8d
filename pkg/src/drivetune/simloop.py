"""The closed simulation loop wiring scenario, controller, fusion, plant,
and the scoring monitors.

Tick order is fixed: actor triggers and poses, then the scripted
references, situation detection, the PID and reactive branch actions,
fusion, the plant step, and finally infraction/shutdown detection on the
new state.  A run ends at route completion, at a shutdown event, or at
the tick-budget safety cap (reported as a route timeout).
"""
from __future__ import annotations

from dataclasses import replace
from typing import Callable, Optional

from . import control, fusion, plant, scoring
from .config import SimConfig
from .control import GainSet
from .noise import NoiseStream
from .scenario import NavState, Scenario, actor_step, reference_source
from .trace import TickRecord, actor_tuples


def simulate_run(
    scenario: Scenario,
    gains: GainSet,
    config: SimConfig,
    repetition: int = 0,
    on_tick: Optional[Callable[[TickRecord], bool]] = None,
) -> tuple[scoring.RunResult, list[TickRecord]]:
    """Run one scenario to its end and score it.

    ``on_tick`` receives every record as it is produced; returning False
    aborts the run (used by the interactive service to apply gain edits
    at a tick boundary).  The returned result is always the score of the
    returned trace.
    """
    params = config.plant
    dt = params.dt
    noise = NoiseStream(scenario.seed, scenario.index, repetition)

    state = plant.VehicleState()
    pid = control.PidState(window=config.pid_window)
    window = fusion.SituationWindow(horizon=config.steering_horizon)
    nav = NavState()
    weight = fusion.FusionWeight(config.alpha)
    triggers: list[Optional[int]] = [None] * len(scenario.actors)

    infraction_monitor = scoring.InfractionMonitor(scenario, params.lane_half_width)
    shutdown_monitor = scoring.ShutdownMonitor(scenario)

    rows: list[TickRecord] = [TickRecord(
        tick=0, time=0.0, arc=0.0, lateral=0.0, speed=0.0, heading=0.0,
        v_ref=0.0, speed_meas=0.0, lateral_meas=0.0, heading_meas=0.0,
        waypoints=(), traj_throttle=0.0, traj_brake=0.0, traj_steer=0.0,
        ctl_throttle=0.0, ctl_brake=0.0, ctl_steer=0.0,
        throttle=0.0, brake=0.0, steer=0.0,
        situation=fusion.Situation.TRAJECTORY_SPECIALIZED.value,
        actors=actor_tuples(actor_step(scenario, 0, tuple(triggers), dt)),
        events=(),
    )]

    aborted = False
    for tick in range(config.tick_budget_cap):
        for i, actor in enumerate(scenario.actors):
            if triggers[i] is None and state.arc_position >= actor.trigger_arc:
                triggers[i] = tick
        trigger_view = tuple(triggers)

        bundle, nav = reference_source(scenario, state, tick, nav, trigger_view, noise, dt)
        situation = fusion.detect_situation(window)
        long_action, pid = control.longitudinal_step(gains, pid, bundle.v_ref, bundle.speed_meas)
        steer = control.lateral_step(bundle.heading_meas, bundle.lateral_meas)
        a_traj = replace(long_action, steer=steer)
        fused = fusion.fuse(situation, a_traj, bundle.ctl_action, weight)
        state = plant.step(state, fused, params)
        window = window.push(abs(fused.steer))

        row = TickRecord(
            tick=tick + 1,
            time=state.time,
            arc=state.arc_position,
            lateral=state.lateral_offset,
            speed=state.speed,
            heading=state.heading_error,
            v_ref=bundle.v_ref,
            speed_meas=bundle.speed_meas,
            lateral_meas=bundle.lateral_meas,
            heading_meas=bundle.heading_meas,
            waypoints=bundle.waypoints,
            traj_throttle=a_traj.throttle,
            traj_brake=a_traj.brake,
            traj_steer=a_traj.steer,
            ctl_throttle=bundle.ctl_action.throttle,
            ctl_brake=bundle.ctl_action.brake,
            ctl_steer=bundle.ctl_action.steer,
            throttle=fused.throttle,
            brake=fused.brake,
            steer=fused.steer,
            situation=situation.value,
            actors=actor_tuples(actor_step(scenario, tick + 1, trigger_view, dt)),
            events=(),
        )
        new_events = infraction_monitor.update(row)
        shutdown = shutdown_monitor.update(row)
        event_names = tuple(e.kind for e in new_events) + ((shutdown.kind,) if shutdown else ())
        if event_names:
            row = replace(row, events=event_names)
        rows.append(row)

        if on_tick is not None and not on_tick(row):
            aborted = True
            break
        if shutdown is not None:
            break
        if state.arc_position >= scenario.route.length:
            break
    else:
        # Safety cap exhausted; report it as a route timeout.
        shutdown_monitor.event = scoring.ShutdownEvent("route_timeout", rows[-1].time)

    completion = scoring.route_completion(rows, scenario.route, params.lane_half_width)
    infractions = infraction_monitor.finalize()
    result = scoring.RunResult(
        scenario_id=scenario.scenario_id,
        repetition=repetition,
        completion=completion,
        penalty=scoring.penalty_score(infractions, completion),
        infractions=tuple(infractions),
        shutdown=shutdown_monitor.event if not aborted else None,
        km_driven=max(row.arc for row in rows) / 1000.0,
    )
    return result, rows
