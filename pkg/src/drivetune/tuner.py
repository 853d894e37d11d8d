"""Derivative-free gain search over the frozen scenario suite.

The objective is the global driving score, so every evaluation is a full
deterministic suite run: identical inputs always score identically, and
improvements are attributable to the gains alone.  Two searchers ship:
exhaustive grid search and coordinate descent, the latter being the
one-knob-at-a-time procedure a human tuner follows.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from .config import SimConfig
from .control import GainSet
from .scenario import Scenario
from .scoring import RunResult, ShutdownEvent, aggregate
from .simloop import simulate_run

PARAM_ORDER = ("kp", "ki", "kd", "max_throttle", "brake_speed")

DEFAULT_BOUNDS: dict[str, tuple[float, float]] = {
    "kp": (1.0, 20.0),
    "ki": (0.0, 2.0),
    "kd": (0.0, 5.0),
    "max_throttle": (0.5, 1.0),
    "brake_speed": (0.3, 0.6),
}

DEFAULT_STEPS: dict[str, float] = {
    "kp": 1.0,
    "ki": 0.1,
    "kd": 0.5,
    "max_throttle": 0.05,
    "brake_speed": 0.05,
}


@dataclass(frozen=True)
class SearchSpace:
    """Box bounds and per-parameter probe steps."""

    bounds: dict[str, tuple[float, float]] = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    steps: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_STEPS))

    def __post_init__(self) -> None:
        for name in PARAM_ORDER:
            if name not in self.bounds or name not in self.steps:
                raise ValueError(f"search space is missing parameter {name!r}")
            lo, hi = self.bounds[name]
            if not (lo < hi):
                raise ValueError(f"empty bounds for {name}: ({lo}, {hi})")
            if not (self.steps[name] > 0):
                raise ValueError(f"step for {name} must be > 0")

    def contains(self, gains: GainSet) -> bool:
        return all(
            self.bounds[name][0] <= getattr(gains, name) <= self.bounds[name][1]
            for name in PARAM_ORDER
        )

    def clamp(self, name: str, value: float) -> float:
        lo, hi = self.bounds[name]
        return min(hi, max(lo, value))


@dataclass(frozen=True)
class Evaluation:
    gains: GainSet
    score: float
    suite_seed: int


@dataclass(frozen=True)
class TuneReport:
    best_gains: GainSet
    best_score: float
    log: tuple[Evaluation, ...]
    iterations: int
    wall_time: float
    accepted_scores: tuple[float, ...] = ()
    accepted_gains: tuple[GainSet, ...] = ()


def _gains_key(gains: GainSet) -> tuple[float, ...]:
    return tuple(getattr(gains, name) for name in PARAM_ORDER)


def evaluate(
    gains: GainSet,
    suite: Sequence[Scenario],
    repetitions: int = 3,
    config: Optional[SimConfig] = None,
) -> float:
    """Mean driving score of the gains over the whole suite.

    A failed run never aborts the evaluation; it scores as a
    simulation-timeout shutdown with zero completion.
    """
    config = config or SimConfig()
    runs: list[RunResult] = []
    for scenario in suite:
        for rep in range(repetitions):
            try:
                result, _ = simulate_run(scenario, gains, config, repetition=rep)
            except Exception:
                result = RunResult(
                    scenario_id=scenario.scenario_id,
                    repetition=rep,
                    completion=0.0,
                    penalty=1.0,
                    shutdown=ShutdownEvent("simulation_timeout", 0.0),
                )
            runs.append(result)
    return aggregate(runs).global_driving_score


class _Evaluator:
    """Caches evaluations so re-probed points cost nothing and the log
    holds each distinct gain set once."""

    def __init__(self, suite, repetitions, config, seed, seed_log=None):
        self.suite = suite
        self.repetitions = repetitions
        self.config = config
        self.seed = seed
        self.cache: dict[tuple[float, ...], float] = {}
        self.log: list[Evaluation] = []
        if seed_log:
            for ev in seed_log:
                self.cache[_gains_key(ev.gains)] = ev.score
                self.log.append(ev)

    def __call__(self, gains: GainSet) -> float:
        key = _gains_key(gains)
        if key in self.cache:
            return self.cache[key]
        score = evaluate(gains, self.suite, self.repetitions, self.config)
        self.cache[key] = score
        self.log.append(Evaluation(gains=gains, score=score, suite_seed=self.seed))
        return score


def grid_search(
    space: SearchSpace,
    suite: Sequence[Scenario],
    base: GainSet,
    axes: Optional[dict[str, Sequence[float]]] = None,
    repetitions: int = 3,
    config: Optional[SimConfig] = None,
    budget: int = 512,
    resume_log: Optional[Sequence[Evaluation]] = None,
) -> TuneReport:
    """Exhaustive evaluation of a gain grid.

    ``axes`` maps parameter names to the values to sweep; parameters not
    listed stay at ``base``.  Ties in score are broken by lexicographic
    parameter order, so reruns always return the same winner.
    """
    if axes is None:
        axes = {name: [getattr(base, name)] for name in PARAM_ORDER}
    for name in axes:
        if name not in PARAM_ORDER:
            raise ValueError(f"unknown gain parameter {name!r}")
    grid_axes = []
    for name in PARAM_ORDER:
        values = tuple(sorted(set(axes.get(name, [getattr(base, name)]))))
        lo, hi = space.bounds[name]
        for v in values:
            if not (lo <= v <= hi):
                raise ValueError(f"{name}={v} outside bounds ({lo}, {hi})")
        grid_axes.append(values)

    size = 1
    for values in grid_axes:
        size *= len(values)
    if size > budget:
        raise ValueError(f"grid size {size} exceeds the evaluation budget {budget}")

    suite_seed = suite[0].seed if suite else 0
    run = _Evaluator(suite, repetitions, config, suite_seed, resume_log)

    points: list[GainSet] = []

    def _build(i: int, current: dict) -> None:
        if i == len(PARAM_ORDER):
            points.append(GainSet(**current))
            return
        name = PARAM_ORDER[i]
        for v in grid_axes[i]:
            current[name] = v
            _build(i + 1, current)

    _build(0, {})

    started = time.perf_counter()
    best_gains, best_score = None, -float("inf")
    for gains in points:
        score = run(gains)
        # Strict improvement only: the first point of a tie (lexicographic
        # construction order) stays the winner.
        if score > best_score:
            best_gains, best_score = gains, score
    wall = time.perf_counter() - started

    assert best_gains is not None
    return TuneReport(
        best_gains=best_gains,
        best_score=best_score,
        log=tuple(run.log),
        iterations=len(points),
        wall_time=wall,
    )


def coordinate_descent(
    space: SearchSpace,
    suite: Sequence[Scenario],
    start: GainSet,
    max_rounds: int = 10,
    repetitions: int = 3,
    config: Optional[SimConfig] = None,
    resume_log: Optional[Sequence[Evaluation]] = None,
) -> TuneReport:
    """One-parameter-at-a-time improvement search.

    Cycles the parameters in a fixed order; for each, probes one step up
    and one step down and accepts only strict improvement (ties keep the
    incumbent).  Stops after a full round without any acceptance or
    after ``max_rounds``.  The final score can never be below the
    starting score.
    """
    if not space.contains(start):
        raise ValueError(f"start point {start} is outside the search space bounds")

    suite_seed = suite[0].seed if suite else 0
    run = _Evaluator(suite, repetitions, config, suite_seed, resume_log)

    started = time.perf_counter()
    current = start
    current_score = run(current)
    accepted_scores = [current_score]
    accepted_gains = [current]

    rounds = 0
    for _ in range(max_rounds):
        rounds += 1
        improved = False
        for name in PARAM_ORDER:
            value = getattr(current, name)
            step = space.steps[name]
            best_probe, best_probe_score = None, current_score
            for direction in (+1.0, -1.0):
                probe_value = space.clamp(name, value + direction * step)
                if probe_value == value:
                    continue
                probe = replace(current, **{name: probe_value})
                score = run(probe)
                if score > best_probe_score:
                    best_probe, best_probe_score = probe, score
            if best_probe is not None:
                current, current_score = best_probe, best_probe_score
                accepted_scores.append(current_score)
                accepted_gains.append(current)
                improved = True
        if not improved:
            break
    wall = time.perf_counter() - started

    return TuneReport(
        best_gains=current,
        best_score=current_score,
        log=tuple(run.log),
        iterations=rounds,
        wall_time=wall,
        accepted_scores=tuple(accepted_scores),
        accepted_gains=tuple(accepted_gains),
    )


# ---------------------------------------------------------------------------
# Persistence: line-delimited evaluation log plus a summary record.


def save_report(report: TuneReport, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for ev in report.log:
            fh.write(json.dumps({
                "kind": "evaluation",
                "gains": _gains_dict(ev.gains),
                "score": ev.score,
                "suite_seed": ev.suite_seed,
            }, sort_keys=True) + "\n")
        fh.write(json.dumps({
            "kind": "summary",
            "best_gains": _gains_dict(report.best_gains),
            "best_score": report.best_score,
            "iterations": report.iterations,
            "wall_time": report.wall_time,
            "accepted_scores": list(report.accepted_scores),
        }, sort_keys=True) + "\n")


def load_log(path: Path) -> list[Evaluation]:
    """Read the evaluations back from a report file for resuming."""
    evaluations = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            entry = json.loads(line)
            if entry.get("kind") == "evaluation":
                evaluations.append(Evaluation(
                    gains=GainSet(**entry["gains"]),
                    score=entry["score"],
                    suite_seed=entry["suite_seed"],
                ))
    return evaluations


def _gains_dict(gains: GainSet) -> dict:
    return {name: getattr(gains, name) for name in PARAM_ORDER}
