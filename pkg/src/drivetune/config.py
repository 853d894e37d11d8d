"""Run configuration: one JSON-serializable object that every entry point
(CLI, service, tuner) shares.  CLI flags mirror every field; the
DRIVETUNE_OUT environment variable overrides the output directory.
"""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .control import DEFAULT_PID_WINDOW, GainSet
from .fusion import DEFAULT_HORIZON
from .plant import PlantParams, default_params

OUTPUT_ENV_VAR = "DRIVETUNE_OUT"


class ConfigError(Exception):
    """Invalid configuration; the CLI maps this to exit code 1."""


@dataclass(frozen=True)
class SimConfig:
    plant: PlantParams = field(default_factory=default_params)
    alpha: float = 0.5                      # fusion weight
    steering_horizon: int = DEFAULT_HORIZON  # ticks of steering history
    pid_window: int = DEFAULT_PID_WINDOW
    suite_seed: int = 7
    repetitions: int = 3
    out_dir: str = "out"
    tick_budget_cap: int = 20000            # hard safety cap per run
    workers: int = 1
    heartbeat_timeout: float = 60.0         # seconds; service session expiry
    telemetry_hz: float = 10.0
    realtime_factor: float = 1.0            # speed multiple for live sessions; 0 = free running

    def __post_init__(self) -> None:
        if self.tick_budget_cap <= 0:
            raise ConfigError(f"tick_budget_cap must be > 0, got {self.tick_budget_cap}")
        if self.repetitions <= 0:
            raise ConfigError(f"repetitions must be > 0, got {self.repetitions}")
        if not (0.0 <= self.alpha <= 0.5):
            raise ConfigError(f"alpha must be in [0, 0.5], got {self.alpha}")
        if self.steering_horizon <= 0 or self.pid_window <= 0:
            raise ConfigError("steering_horizon and pid_window must be > 0")
        if self.workers <= 0:
            raise ConfigError(f"workers must be > 0, got {self.workers}")

    def resolved_out_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_ENV_VAR, self.out_dir))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["plant"] = dataclasses.asdict(self.plant)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        data = dict(data)
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "plant" in data and isinstance(data["plant"], dict):
            try:
                data["plant"] = PlantParams(**data["plant"])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad plant params: {exc}") from exc
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> SimConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return SimConfig.from_dict(data)


def save_config(config: SimConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def gains_to_dict(gains: GainSet) -> dict:
    return dataclasses.asdict(gains)
