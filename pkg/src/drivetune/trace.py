"""Per-tick trace records and the checksummed line-delimited file format.

A trace file is:

* line 1: header JSON object (format name, version, scenario, gains, ...)
* lines 2..n: one JSON object per tick record
* last line: {"sha256": <hex digest of every preceding byte>}

Everything is written with sorted keys and compact separators so equal
runs produce byte-identical files.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional

TRACE_FORMAT = "drivetune-trace"
TRACE_VERSION = 1


class TraceError(Exception):
    """Malformed or tampered trace file."""


@dataclass(frozen=True, slots=True)
class TickRecord:
    """One tick of a run: state after the step plus everything that
    produced it."""

    tick: int
    time: float
    arc: float
    lateral: float
    speed: float
    heading: float
    v_ref: float
    speed_meas: float
    lateral_meas: float
    heading_meas: float
    waypoints: tuple[tuple[float, float], ...]
    traj_throttle: float
    traj_brake: float
    traj_steer: float
    ctl_throttle: float
    ctl_brake: float
    ctl_steer: float
    throttle: float
    brake: float
    steer: float
    situation: str
    actors: tuple[tuple[str, float, float, float], ...]  # (kind, arc, lateral, radius)
    events: tuple[str, ...]


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def record_to_json(record: TickRecord) -> str:
    return _dumps(asdict(record))


def record_from_json(line: str) -> TickRecord:
    d = json.loads(line)
    d["waypoints"] = tuple(tuple(p) for p in d["waypoints"])
    d["actors"] = tuple(tuple(a) for a in d["actors"])
    d["events"] = tuple(d["events"])
    return TickRecord(**d)


def write_trace(path: Path, header: dict, records: Iterable[TickRecord]) -> None:
    header = dict(header)
    header["format"] = TRACE_FORMAT
    header["version"] = TRACE_VERSION
    digest = hashlib.sha256()
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for line in (_dumps(header), *map(record_to_json, records)):
            data = line + "\n"
            digest.update(data.encode("utf-8"))
            fh.write(data)
        fh.write(_dumps({"sha256": digest.hexdigest()}) + "\n")


def read_trace(path: Path, verify: bool = True) -> tuple[dict, list[TickRecord]]:
    """Load a trace file; raises TraceError on a bad checksum or shape."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    if len(lines) < 2:
        raise TraceError(f"{path}: too short to be a trace file")
    try:
        footer = json.loads(lines[-1])
    except json.JSONDecodeError as exc:
        raise TraceError(f"{path}: unreadable footer: {exc}") from exc
    if "sha256" not in footer:
        raise TraceError(f"{path}: missing checksum footer")
    if verify:
        digest = hashlib.sha256()
        for line in lines[:-1]:
            digest.update(line.encode("utf-8"))
        if digest.hexdigest() != footer["sha256"]:
            raise TraceError(f"{path}: checksum mismatch, file was modified")
    header = json.loads(lines[0])
    if header.get("format") != TRACE_FORMAT:
        raise TraceError(f"{path}: not a {TRACE_FORMAT} file")
    records = [record_from_json(line) for line in lines[1:-1]]
    return header, records


def actor_tuples(poses) -> tuple[tuple[str, float, float, float], ...]:
    """Compact actor-pose representation stored on each record."""
    return tuple((p.kind, p.arc, p.lateral, p.radius) for p in poses)
