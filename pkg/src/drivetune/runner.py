"""Suite execution and result persistence.

Runs are independent and deterministic, so they can execute on a process
pool; results are merged by (scenario, repetition) and the merge is
order-insensitive.  Scorecards, per-scenario chart data, and traces are
written with canonical JSON so byte-identical inputs give byte-identical
files.
"""
from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from .config import SimConfig
from .control import GainSet
from .scenario import Scenario, build_suite
from .scoring import RunResult, ScoreCard, aggregate, driving_score, score_trace
from .simloop import simulate_run
from .trace import TickRecord, write_trace


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def trace_filename(scenario_id: str, repetition: int) -> str:
    return f"{scenario_id}_rep{repetition}.trace.jsonl"


def _run_one(args) -> tuple[RunResult, list[TickRecord]]:
    scenario, gains, config, repetition = args
    return simulate_run(scenario, gains, config, repetition=repetition)


def run_suite(
    suite: Sequence[Scenario],
    gains: GainSet,
    config: SimConfig,
    out_dir: Optional[Path] = None,
    label: str = "gains",
) -> tuple[ScoreCard, list[RunResult]]:
    """Run every scenario x repetition; optionally persist traces and
    scorecard files under ``out_dir``."""
    jobs = [
        (scenario, gains, config, rep)
        for scenario in suite
        for rep in range(config.repetitions)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_run_one, jobs))
    else:
        outcomes = [_run_one(job) for job in jobs]

    results: list[RunResult] = []
    for (scenario, _, _, rep), (result, rows) in zip(jobs, outcomes):
        if out_dir is not None:
            name = trace_filename(scenario.scenario_id, rep)
            write_trace(out_dir / name, {
                "scenario": scenario.scenario_id,
                "suite_seed": scenario.seed,
                "repetition": rep,
                "gains": dataclasses.asdict(gains),
                "label": label,
            }, rows)
            # Stored relative to the scorecard directory so equal configs
            # give byte-identical output trees wherever they are written.
            result = dataclasses.replace(result, trace_path=name)
        results.append(result)

    results.sort(key=lambda r: (_scenario_number(r.scenario_id), r.repetition))
    card = aggregate(results)
    if out_dir is not None:
        write_scorecard(card, results, out_dir, label=label, seed=suite[0].seed if suite else 0)
    return card, results


def _scenario_number(scenario_id: str) -> int:
    return int(scenario_id.lstrip("S"))


def scorecard_dict(card: ScoreCard, label: str, seed: int) -> dict:
    return {
        "format": "drivetune-scorecard",
        "version": 1,
        "label": label,
        "suite_seed": seed,
        "scenario_scores": card.scenario_scores,
        "global_completion": card.global_completion,
        "global_infraction_score": card.global_infraction_score,
        "global_driving_score": card.global_driving_score,
        "infractions_per_km": card.infractions_per_km,
        "run_count": card.run_count,
    }


def write_scorecard(card: ScoreCard, results: Sequence[RunResult],
                    out_dir: Path, label: str, seed: int) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "scorecard.json", "w", encoding="utf-8") as fh:
        fh.write(_dumps(scorecard_dict(card, label, seed)) + "\n")

    # Line-delimited per-run records.
    with open(out_dir / "runs.jsonl", "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(_dumps({
                "scenario": r.scenario_id,
                "repetition": r.repetition,
                "completion": r.completion,
                "penalty": r.penalty,
                "driving_score": driving_score(r),
                "infractions": [e.kind for e in r.infractions],
                "shutdown": r.shutdown.kind if r.shutdown else None,
                "km_driven": r.km_driven,
                "trace": r.trace_path,
            }) + "\n")

    # Per-scenario chart data: one row per scenario, mean driving score.
    with open(out_dir / "scores_by_scenario.csv", "w", encoding="utf-8") as fh:
        fh.write("scenario,driving_score\n")
        for sid, score in sorted(card.scenario_scores.items(), key=lambda kv: _scenario_number(kv[0])):
            fh.write(f"{sid},{score!r}\n")

    with open(out_dir / "scorecard.txt", "w", encoding="utf-8") as fh:
        fh.write(format_scorecard(card, label))


def format_scorecard(card: ScoreCard, label: str = "gains") -> str:
    lines = [
        f"Scorecard for {label} ({card.run_count} runs)",
        f"{'scenario':<10} {'driving score':>14}",
    ]
    for sid, score in sorted(card.scenario_scores.items(), key=lambda kv: _scenario_number(kv[0])):
        lines.append(f"{sid:<10} {score:>14.2f}")
    lines += [
        "-" * 25,
        f"global route completion   {card.global_completion:.2f}",
        f"global infraction score   {card.global_infraction_score:.4f}",
        f"global driving score      {card.global_driving_score:.2f}",
        f"infractions per km        {card.infractions_per_km:.3f}",
    ]
    return "\n".join(lines) + "\n"


def format_comparison(card_a: ScoreCard, card_b: ScoreCard,
                      label_a: str, label_b: str) -> str:
    lines = [
        f"{'scenario':<10} {label_a:>14} {label_b:>14} {'delta':>10}",
    ]
    for sid in sorted(card_a.scenario_scores, key=_scenario_number):
        a = card_a.scenario_scores[sid]
        b = card_b.scenario_scores.get(sid, float("nan"))
        lines.append(f"{sid:<10} {a:>14.2f} {b:>14.2f} {b - a:>+10.2f}")
    lines += [
        "-" * 51,
        f"{'global':<10} {card_a.global_driving_score:>14.2f} "
        f"{card_b.global_driving_score:>14.2f} "
        f"{card_b.global_driving_score - card_a.global_driving_score:>+10.2f}",
    ]
    return "\n".join(lines) + "\n"


def replay_trace(path: Path, suite_seed: Optional[int] = None) -> tuple[RunResult, dict]:
    """Re-score a persisted trace with the scoring pipeline.

    The scenario is rebuilt from the header's suite seed and scenario id,
    so a replayed score is comparable bit for bit with the recorded one.
    """
    from .trace import read_trace

    header, rows = read_trace(path, verify=True)
    seed = suite_seed if suite_seed is not None else header["suite_seed"]
    suite = build_suite(seed)
    scenario = next(s for s in suite if s.scenario_id == header["scenario"])
    result = score_trace(rows, scenario, repetition=header.get("repetition", 0),
                         trace_path=str(path))
    return result, header
