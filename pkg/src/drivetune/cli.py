"""Command-line interface.

Subcommands: run, suite, tune, compare, replay, serve.  Exit codes:
0 success, 1 configuration error, 2 internal failure (including trace
checksum mismatches on replay).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .config import ConfigError, SimConfig, load_config
from .control import PRESETS, GainSet, resolve_gains
from .runner import (
    format_comparison,
    format_scorecard,
    replay_trace,
    run_suite,
    scorecard_dict,
    trace_filename,
)
from .scenario import build_suite
from .scoring import driving_score
from .simloop import simulate_run
from .trace import TraceError, write_trace
from .tuner import (
    SearchSpace,
    coordinate_descent,
    grid_search,
    load_log,
    save_report,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INTERNAL = 2


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file (flags override it)")
    parser.add_argument("--seed", type=int, help="suite seed")
    parser.add_argument("--repetitions", type=int, help="repetitions per scenario")
    parser.add_argument("--alpha", type=float, help="fusion weight in [0, 0.5]")
    parser.add_argument("--pid-window", type=int, dest="pid_window", help="PID error window length")
    parser.add_argument("--steering-horizon", type=int, dest="steering_horizon",
                        help="steering history length for situation detection")
    parser.add_argument("--workers", type=int, help="parallel run workers")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--tick-cap", type=int, dest="tick_budget_cap",
                        help="hard per-run tick cap")


def _build_config(args: argparse.Namespace) -> SimConfig:
    config = load_config(args.config) if args.config else SimConfig()
    overrides = {}
    mapping = {
        "seed": "suite_seed",
        "repetitions": "repetitions",
        "alpha": "alpha",
        "pid_window": "pid_window",
        "steering_horizon": "steering_horizon",
        "workers": "workers",
        "out": "out_dir",
        "tick_budget_cap": "tick_budget_cap",
    }
    for arg_name, field_name in mapping.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            overrides[field_name] = value
    if overrides:
        config = dataclasses.replace(config, **overrides)
        config.__post_init__()
    return config


def _parse_gains(text: str) -> GainSet:
    """A preset name or five comma-separated values kp,ki,kd,max_throttle,brake_speed."""
    if text in PRESETS:
        return PRESETS[text]
    parts = text.split(",")
    if len(parts) != 5:
        raise ConfigError(
            f"gains must be a preset ({', '.join(sorted(PRESETS))}) or "
            f"kp,ki,kd,max_throttle,brake_speed; got {text!r}"
        )
    try:
        kp, ki, kd, mt, bs = (float(p) for p in parts)
        return GainSet(kp=kp, ki=ki, kd=kd, max_throttle=mt, brake_speed=bs)
    except ValueError as exc:
        raise ConfigError(f"bad gains {text!r}: {exc}") from exc


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="drivetune",
        description="Deterministic longitudinal-driving workbench.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario")
    p_run.add_argument("scenario", help="scenario id, e.g. S3")
    p_run.add_argument("--gains", default="tcp-original")
    p_run.add_argument("--rep", type=int, default=0)
    _add_common(p_run)

    p_suite = sub.add_parser("suite", help="run all 16 scenarios and write a scorecard")
    p_suite.add_argument("--gains", default="tcp-original")
    _add_common(p_suite)

    p_tune = sub.add_parser("tune", help="search for better gains")
    p_tune.add_argument("--method", choices=("grid", "descent"), default="descent")
    p_tune.add_argument("--start", default="tcp-original", help="starting gains (descent)")
    p_tune.add_argument("--axes", help="JSON grid axes, e.g. '{\"kp\": [5, 8, 11]}'")
    p_tune.add_argument("--max-rounds", type=int, default=5, dest="max_rounds")
    p_tune.add_argument("--budget", type=int, default=512)
    p_tune.add_argument("--resume", help="resume from a previous tune log")
    _add_common(p_tune)

    p_cmp = sub.add_parser("compare", help="run the suite for two gain sets")
    p_cmp.add_argument("gains_a")
    p_cmp.add_argument("gains_b")
    _add_common(p_cmp)

    p_replay = sub.add_parser("replay", help="re-score a persisted trace")
    p_replay.add_argument("trace", help="trace file path")
    _add_common(p_replay)

    p_serve = sub.add_parser("serve", help="start the dashboard service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8099)
    _add_common(p_serve)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; map to the config-error code.
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG

    try:
        config = _build_config(args)
        handler = {
            "run": _cmd_run,
            "suite": _cmd_suite,
            "tune": _cmd_tune,
            "compare": _cmd_compare,
            "replay": _cmd_replay,
            "serve": _cmd_serve,
        }[args.command]
        return handler(args, config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TraceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def _find_scenario(config: SimConfig, scenario_id: str):
    suite = build_suite(config.suite_seed)
    for scenario in suite:
        if scenario.scenario_id == scenario_id:
            return scenario
    raise ConfigError(f"unknown scenario {scenario_id!r}; expected S0..S{len(suite) - 1}")


def _cmd_run(args, config: SimConfig) -> int:
    gains = _parse_gains(args.gains)
    scenario = _find_scenario(config, args.scenario)
    result, rows = simulate_run(scenario, gains, config, repetition=args.rep)
    out = config.resolved_out_dir()
    path = out / trace_filename(scenario.scenario_id, args.rep)
    write_trace(path, {
        "scenario": scenario.scenario_id,
        "suite_seed": scenario.seed,
        "repetition": args.rep,
        "gains": dataclasses.asdict(gains),
        "label": args.gains,
    }, rows)
    print(f"{scenario.scenario_id} completion={result.completion:.2f} "
          f"penalty={result.penalty:.4f} driving_score={driving_score(result):.2f}")
    if result.shutdown:
        print(f"shutdown: {result.shutdown.kind} at t={result.shutdown.time:.2f} s")
    for event in result.infractions:
        print(f"infraction: {event.kind} at t={event.time:.2f} s ({event.detail})")
    print(f"trace written to {path}")
    return EXIT_OK


def _cmd_suite(args, config: SimConfig) -> int:
    gains = _parse_gains(args.gains)
    suite = build_suite(config.suite_seed)
    out = config.resolved_out_dir()
    card, _ = run_suite(suite, gains, config, out_dir=out, label=args.gains)
    print(format_scorecard(card, args.gains), end="")
    print(f"files written to {out}")
    return EXIT_OK


def _cmd_tune(args, config: SimConfig) -> int:
    suite = build_suite(config.suite_seed)
    space = SearchSpace()
    resume = load_log(Path(args.resume)) if args.resume else None
    if args.method == "grid":
        axes = None
        if args.axes:
            try:
                raw = json.loads(args.axes)
                axes = {k: [float(v) for v in vs] for k, vs in raw.items()}
            except (json.JSONDecodeError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad --axes: {exc}") from exc
        base = _parse_gains(args.start)
        try:
            report = grid_search(space, suite, base, axes=axes,
                                 repetitions=config.repetitions, config=config,
                                 budget=args.budget, resume_log=resume)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    else:
        start = _parse_gains(args.start)
        try:
            report = coordinate_descent(space, suite, start, max_rounds=args.max_rounds,
                                        repetitions=config.repetitions, config=config,
                                        resume_log=resume)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    out = config.resolved_out_dir()
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "tune_report.jsonl"
    save_report(report, report_path)
    g = report.best_gains
    print(f"best score {report.best_score:.3f} after {len(report.log)} evaluations")
    print(f"best gains kp={g.kp} ki={g.ki} kd={g.kd} "
          f"max_throttle={g.max_throttle} brake_speed={g.brake_speed}")
    print(f"log written to {report_path}")
    return EXIT_OK


def _cmd_compare(args, config: SimConfig) -> int:
    gains_a = _parse_gains(args.gains_a)
    gains_b = _parse_gains(args.gains_b)
    suite = build_suite(config.suite_seed)
    out = config.resolved_out_dir()
    card_a, _ = run_suite(suite, gains_a, config, out_dir=out / "A", label=args.gains_a)
    card_b, _ = run_suite(suite, gains_b, config, out_dir=out / "B", label=args.gains_b)
    table = format_comparison(card_a, card_b, args.gains_a, args.gains_b)
    print(table, end="")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "compare.json", "w", encoding="utf-8") as fh:
        json.dump({
            "a": scorecard_dict(card_a, args.gains_a, config.suite_seed),
            "b": scorecard_dict(card_b, args.gains_b, config.suite_seed),
        }, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
    with open(out / "compare.txt", "w", encoding="utf-8") as fh:
        fh.write(table)
    return EXIT_OK


def _cmd_replay(args, config: SimConfig) -> int:
    result, header = replay_trace(Path(args.trace))
    print(f"{result.scenario_id} rep {result.repetition}: "
          f"completion={result.completion:.2f} penalty={result.penalty:.4f} "
          f"driving_score={driving_score(result):.2f}")
    if result.shutdown:
        print(f"shutdown: {result.shutdown.kind} at t={result.shutdown.time:.2f} s")
    return EXIT_OK


def _cmd_serve(args, config: SimConfig) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(config)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
