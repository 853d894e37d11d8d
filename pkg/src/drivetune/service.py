"""Local HTTP service backing the tuning dashboard.

Versioned JSON wire format (documented in docs/FORMATS.md):

* telemetry ticks stream at a decimated rate via a cursor-polling
  endpoint (``?after=<seq>``), full-rate traces stay on disk;
* gain submissions restart the session's scenario at the next tick
  boundary and echo the acknowledged gains back;
* sessions are isolated, capped, and expire as a simulation timeout
  when the client heartbeat gap exceeds the configured limit.
"""
from __future__ import annotations

import dataclasses
import itertools
import threading
import time
from contextlib import asynccontextmanager
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import HTMLResponse
from pydantic import BaseModel, Field

from .config import SimConfig
from .control import PRESETS, GainSet
from .runner import run_suite, scorecard_dict
from .scenario import Scenario, build_suite
from .scoring import driving_score
from .simloop import simulate_run
from .trace import TickRecord
from .tuner import DEFAULT_BOUNDS

WIRE_VERSION = 1
MAX_SESSIONS = 4
TELEMETRY_RING = 600  # last 60 s at 10 Hz


class GainPayload(BaseModel):
    kp: float = Field(ge=0)
    ki: float = Field(ge=0)
    kd: float = Field(ge=0)
    max_throttle: float = Field(gt=0, le=1)
    brake_speed: float = Field(gt=0, lt=1)

    def to_gains(self) -> GainSet:
        return GainSet(**self.model_dump())


class SessionRequest(BaseModel):
    scenario_id: str
    preset: Optional[str] = None
    gains: Optional[GainPayload] = None
    seed: Optional[int] = None


class Session:
    def __init__(self, session_id: str, scenario: Scenario, gains: GainSet, config: SimConfig):
        self.session_id = session_id
        self.scenario = scenario
        self.config = config
        self.lock = threading.Lock()
        self.gains = gains
        self.stop = threading.Event()
        self.restart = threading.Event()
        self.telemetry: list[dict] = []
        self.seq = 0
        self.run_id = 0
        self.latest_result: Optional[dict] = None
        self.last_heartbeat = time.monotonic()
        self.closed_reason: Optional[str] = None
        self.thread = threading.Thread(target=self._worker, daemon=True)

    def start(self) -> None:
        self.thread.start()

    def close(self, reason: str) -> None:
        with self.lock:
            if self.closed_reason is None:
                self.closed_reason = reason
        self.stop.set()

    def touch(self) -> None:
        self.last_heartbeat = time.monotonic()

    def submit_gains(self, gains: GainSet) -> None:
        with self.lock:
            self.gains = gains
        self.restart.set()

    # -- worker ---------------------------------------------------------

    def _worker(self) -> None:
        dt = self.config.plant.dt
        decimate = max(1, round((1.0 / dt) / self.config.telemetry_hz))
        pace = (dt / self.config.realtime_factor) if self.config.realtime_factor > 0 else 0.0

        while not self.stop.is_set():
            with self.lock:
                gains = self.gains
                run_id = self.run_id

            def on_tick(row: TickRecord) -> bool:
                if pace:
                    time.sleep(pace)
                if row.tick % decimate == 0:
                    self._push(row, run_id)
                return not (self.stop.is_set() or self.restart.is_set())

            result, _ = simulate_run(self.scenario, gains, self.config, repetition=0,
                                     on_tick=on_tick)
            if self.restart.is_set():
                self.restart.clear()
                with self.lock:
                    self.run_id += 1
                    self.telemetry.clear()
                continue
            if self.stop.is_set():
                break
            with self.lock:
                self.latest_result = {
                    "scenario": result.scenario_id,
                    "completion": result.completion,
                    "penalty": result.penalty,
                    "driving_score": driving_score(result),
                    "infractions": [e.kind for e in result.infractions],
                    "shutdown": result.shutdown.kind if result.shutdown else None,
                    "run_id": run_id,
                }
                self.run_id += 1
            # Loop the scenario so live plots keep flowing.

    def _push(self, row: TickRecord, run_id: int) -> None:
        with self.lock:
            self.seq += 1
            self.telemetry.append({
                "v": WIRE_VERSION,
                "seq": self.seq,
                "run_id": run_id,
                "t": row.time,
                "speed": row.speed,
                "v_ref": row.v_ref,
                "throttle": row.throttle,
                "brake": row.brake,
                "steer": row.steer,
                "situation": row.situation,
                "arc": row.arc,
                "lateral": row.lateral,
            })
            if len(self.telemetry) > TELEMETRY_RING:
                del self.telemetry[: len(self.telemetry) - TELEMETRY_RING]

    # -- views ----------------------------------------------------------

    def describe(self) -> dict:
        with self.lock:
            return {
                "session_id": self.session_id,
                "scenario_id": self.scenario.scenario_id,
                "gains": dataclasses.asdict(self.gains),
                "status": "closed" if self.closed_reason else "running",
                "closed_reason": self.closed_reason,
                "latest_result": self.latest_result,
                "seq": self.seq,
            }

    def telemetry_after(self, after: int) -> dict:
        with self.lock:
            ticks = [t for t in self.telemetry if t["seq"] > after]
            return {
                "v": WIRE_VERSION,
                "ticks": ticks,
                "latest_result": self.latest_result,
                "status": "closed" if self.closed_reason else "running",
                "closed_reason": self.closed_reason,
            }


def create_app(config: SimConfig) -> FastAPI:
    sessions: dict[str, Session] = {}
    sessions_lock = threading.Lock()
    session_counter = itertools.count(1)
    suite_cache: dict[tuple, dict] = {}
    stop_reaper = threading.Event()

    def _reaper() -> None:
        while not stop_reaper.wait(min(1.0, config.heartbeat_timeout / 4 or 1.0)):
            now = time.monotonic()
            with sessions_lock:
                active = list(sessions.values())
            for session in active:
                if session.closed_reason is None and \
                        now - session.last_heartbeat > config.heartbeat_timeout:
                    session.close("simulation_timeout")

    @asynccontextmanager
    async def _lifespan(_: FastAPI):
        reaper = threading.Thread(target=_reaper, daemon=True)
        reaper.start()
        try:
            yield
        finally:
            stop_reaper.set()
            with sessions_lock:
                for session in sessions.values():
                    session.close("service_shutdown")

    app = FastAPI(title="drivetune service", version="1", lifespan=_lifespan)

    def _get_session(session_id: str, touch: bool = False) -> Session:
        """Look a session up; only commands and explicit heartbeats count
        as client liveness, passive reads do not extend a session."""
        with sessions_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"no such session {session_id!r}")
        if touch:
            session.touch()
        return session

    def _resolve_payload_gains(req: SessionRequest) -> GainSet:
        if req.preset is not None and req.gains is not None:
            raise HTTPException(status_code=422, detail="give either preset or gains, not both")
        if req.preset is not None:
            if req.preset not in PRESETS:
                raise HTTPException(status_code=422,
                                    detail=f"unknown preset {req.preset!r}; known: {sorted(PRESETS)}")
            return PRESETS[req.preset]
        if req.gains is not None:
            return req.gains.to_gains()
        return PRESETS["tcp-original"]

    @app.get("/api/v1/presets")
    def presets() -> dict:
        return {
            "v": WIRE_VERSION,
            "presets": {name: dataclasses.asdict(g) for name, g in PRESETS.items()},
            "bounds": {k: list(v) for k, v in DEFAULT_BOUNDS.items()},
        }

    @app.get("/api/v1/scenarios")
    def scenarios(seed: Optional[int] = None) -> dict:
        suite = build_suite(seed if seed is not None else config.suite_seed)
        return {
            "v": WIRE_VERSION,
            "suite_seed": suite[0].seed,
            "scenarios": [
                {
                    "id": s.scenario_id,
                    "route": s.route.route_id,
                    "weather": s.weather.name,
                    "length": s.route.length,
                    "time_budget": s.time_budget,
                }
                for s in suite
            ],
        }

    @app.post("/api/v1/sessions", status_code=201)
    def create_session(req: SessionRequest) -> dict:
        gains = _resolve_payload_gains(req)
        seed = req.seed if req.seed is not None else config.suite_seed
        suite = build_suite(seed)
        scenario = next((s for s in suite if s.scenario_id == req.scenario_id), None)
        if scenario is None:
            raise HTTPException(status_code=422,
                                detail=f"unknown scenario {req.scenario_id!r}")
        with sessions_lock:
            open_count = sum(1 for s in sessions.values() if s.closed_reason is None)
            if open_count >= MAX_SESSIONS:
                raise HTTPException(status_code=409,
                                    detail=f"session cap of {MAX_SESSIONS} reached; close one first")
            session_id = f"session-{next(session_counter)}"
            session = Session(session_id, scenario, gains, config)
            sessions[session_id] = session
        session.start()
        return {"v": WIRE_VERSION, "session_id": session_id,
                "gains": dataclasses.asdict(gains), "scenario_id": scenario.scenario_id}

    @app.get("/api/v1/sessions/{session_id}")
    def session_info(session_id: str) -> dict:
        return _get_session(session_id).describe()

    @app.post("/api/v1/sessions/{session_id}/gains")
    def set_gains(session_id: str, payload: GainPayload) -> dict:
        session = _get_session(session_id, touch=True)
        if session.closed_reason is not None:
            raise HTTPException(status_code=409, detail="session is closed")
        try:
            gains = payload.to_gains()
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        session.submit_gains(gains)
        return {"v": WIRE_VERSION, "gains": dataclasses.asdict(gains)}

    @app.get("/api/v1/sessions/{session_id}/telemetry")
    def telemetry(session_id: str, after: int = 0) -> dict:
        return _get_session(session_id).telemetry_after(after)

    @app.post("/api/v1/sessions/{session_id}/heartbeat")
    def heartbeat(session_id: str) -> dict:
        _get_session(session_id, touch=True)
        return {"v": WIRE_VERSION, "ok": True}

    @app.delete("/api/v1/sessions/{session_id}")
    def close_session(session_id: str) -> dict:
        session = _get_session(session_id, touch=True)
        session.close("client_closed")
        return {"v": WIRE_VERSION, "ok": True}

    def _suite_card(gains_name: str, seed: int) -> dict:
        if gains_name in PRESETS:
            gains = PRESETS[gains_name]
        else:
            try:
                parts = [float(p) for p in gains_name.split(",")]
                gains = GainSet(*parts)
            except (ValueError, TypeError) as exc:
                raise HTTPException(status_code=422,
                                    detail=f"bad gains {gains_name!r}: {exc}") from exc
        key = (gains, seed, config.repetitions)
        if key not in suite_cache:
            suite = build_suite(seed)
            card, _ = run_suite(suite, gains, config)
            suite_cache[key] = scorecard_dict(card, gains_name, seed)
        return suite_cache[key]

    @app.get("/api/v1/suite")
    def suite_scorecard(gains: str = "tcp-original", seed: Optional[int] = None) -> dict:
        return _suite_card(gains, seed if seed is not None else config.suite_seed)

    @app.get("/api/v1/compare")
    def compare(a: str, b: str, seed: Optional[int] = None) -> dict:
        seed = seed if seed is not None else config.suite_seed
        card_a = _suite_card(a, seed)
        card_b = _suite_card(b, seed)
        return {"v": WIRE_VERSION, "a": card_a, "b": card_b}

    @app.get("/", response_class=HTMLResponse)
    def index() -> str:
        from pathlib import Path

        for candidate in (
            Path(__file__).resolve().parents[2] / "frontend" / "dist" / "index.html",
            Path("frontend/dist/index.html"),
        ):
            if candidate.exists():
                return candidate.read_text(encoding="utf-8")
        return "<html><body><h1>drivetune service</h1><p>dashboard not built; see frontend/README.md</p></body></html>"

    @app.get("/dashboard.js")
    def dashboard_js():
        from pathlib import Path

        from fastapi.responses import FileResponse

        for candidate in (
            Path(__file__).resolve().parents[2] / "frontend" / "dist" / "dashboard.js",
            Path("frontend/dist/dashboard.js"),
        ):
            if candidate.exists():
                return FileResponse(candidate, media_type="text/javascript")
        raise HTTPException(status_code=404, detail="dashboard not built")

    return app
