"""Command-line front end: simulate -> detect -> train -> run -> evaluate ->
analyze, handing results between stages as files.

Every subcommand is a pure function of its input files, flags and seed, and
writes a run manifest next to its outputs for provenance. Exit codes:
0 success, 2 input error, 3 validation error, 4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import sys
from pathlib import Path

from . import analysis, classify, controller, detection, evaluate, simulate
from .activity import read_inputs, simulate_inputs, write_inputs
from .config import Config, load_config
from .errors import (InvariantError, ModelFormatError, ParseError,
                     ValidationError)

EXIT_INPUT_ERROR = 2
EXIT_VALIDATION_ERROR = 3
EXIT_INVARIANT_ERROR = 4


def _timestamp() -> str:
    """ISO timestamp; honors SOURCE_DATE_EPOCH for reproducible reruns."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        moment = datetime.datetime.fromtimestamp(int(epoch), datetime.timezone.utc)
    else:
        moment = datetime.datetime.now(datetime.timezone.utc)
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


def _write_manifest(out_dir: Path, subcommand: str, args, inputs: dict,
                    outputs: list[str]) -> None:
    manifest = {
        "subcommand": subcommand,
        "config": str(args.config) if args.config else None,
        "seed": getattr(args, "seed", None),
        "inputs": inputs,
        "outputs": outputs,
        "timestamp": _timestamp(),
    }
    path = out_dir / f"manifest_{subcommand}.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def _write_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        if not rows:
            fh.write("")
            return
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def _load_config(args) -> Config:
    return load_config(args.config) if args.config else Config()


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    config = _load_config(args)
    plan = simulate.load_plan(args.plan)
    script = simulate.load_script(args.script)
    trace, truth = simulate.generate_trace(
        plan, script, config, noise_sigma=args.noise_sigma, seed=args.seed,
        duration=args.duration)
    out = _out_dir(args)
    simulate.write_trace(trace, out / "trace.csv")
    simulate.write_ground_truth(truth, out / "truth.csv")
    away = simulate.away_intervals(plan, script, trace.duration)
    inputs = simulate_inputs(trace.duration, away, p=args.input_p, seed=args.seed)
    write_inputs(inputs, out / "inputs.csv")
    _write_manifest(out, "simulate", args,
                    {"plan": str(args.plan), "script": str(args.script),
                     "noise_sigma": args.noise_sigma},
                    ["trace.csv", "truth.csv", "inputs.csv"])
    return 0


def cmd_detect(args) -> int:
    config = _load_config(args)
    trace = simulate.read_trace(args.trace, config.sample_rate_hz)
    detector = detection.MovementDetector(config, args.bootstrap)
    result = detector.run(trace)
    out = _out_dir(args)
    rows = [{"t1": f"{w.t1:.6f}", "t2": f"{w.t2:.6f}",
             "duration": f"{w.duration:.6f}"} for w in result.windows]
    _write_csv(out / "windows.csv", rows)
    outputs = ["windows.csv"]
    if args.debug_csv:
        detection.write_debug_csv(result, out / "md_debug.csv")
        outputs.append("md_debug.csv")
    _write_manifest(out, "detect", args, {"trace": str(args.trace)}, outputs)
    return 0


def _collect_samples(trace, config, args):
    detector = detection.MovementDetector(config, args.bootstrap)
    result = detector.run(trace)
    kept = [w for w in result.windows if w.duration >= config.t_delta]
    if args.truth:
        truth = simulate.read_ground_truth(args.truth)
        samples, _ = evaluate.labeled_samples(trace, kept, truth, config)
        return samples
    inputs = read_inputs(args.inputs)
    from .activity import IdleTracker

    tracker = IdleTracker(sorted(inputs.inputs))
    events = inputs.merged()
    samples = []
    cursor = 0
    for window in kept:
        query_t = window.t1 + config.t_delta
        while cursor < len(events) and events[cursor][0] <= query_t:
            tracker.record(*events[cursor])
            cursor += 1
        if window.t1 + config.t_delta > trace.duration:
            continue
        label = classify.auto_label(window, tracker, config.t_delta)
        if label is None:
            continue
        sample = classify.extract_features(trace, window.t1, config.t_delta, config)
        sample.label = label
        samples.append(sample)
    return samples


def cmd_train(args) -> int:
    if bool(args.truth) == bool(args.inputs):
        raise ValidationError("pass exactly one of --truth or --inputs")
    config = _load_config(args)
    trace = simulate.read_trace(args.trace, config.sample_rate_hz)
    samples = _collect_samples(trace, config, args)
    model = classify.train(samples, seed=args.seed)
    out = _out_dir(args)
    classify.save_model(model, out / "model.json")
    classify.write_samples(samples, out / "samples.csv")
    _write_manifest(out, "train", args,
                    {"trace": str(args.trace), "truth": str(args.truth or ""),
                     "inputs": str(args.inputs or ""),
                     "training_accuracy": model.training_accuracy_},
                    ["model.json", "samples.csv"])
    return 0


def cmd_run(args) -> int:
    config = _load_config(args)
    trace = simulate.read_trace(args.trace, config.sample_rate_hz)
    model = classify.load_model(args.model)
    inputs = read_inputs(args.inputs)
    plan = simulate.load_plan(args.plan)
    workstations = [w for w, _, _ in plan.workstations]
    detector = detection.MovementDetector(config, args.bootstrap)
    result = detector.run(trace)
    log = controller.run_controller(trace, result, inputs, model, config,
                                    workstations)
    out = _out_dir(args)
    controller.write_actions(log, out / "actions.csv")
    _write_manifest(out, "run", args,
                    {"trace": str(args.trace), "model": str(args.model),
                     "inputs": str(args.inputs), "plan": str(args.plan)},
                    ["actions.csv"])
    return 0


def cmd_evaluate(args) -> int:
    config = _load_config(args)
    trace = simulate.read_trace(args.trace, config.sample_rate_hz)
    truth = simulate.read_ground_truth(args.truth)
    out = _out_dir(args)
    outputs: list[str] = []
    summary: dict = {"mode": args.mode, "seed": args.seed,
                     "config": vars_config(config)}

    if args.mode == "md":
        rows = evaluate.md_sensor_table(trace, truth, config,
                                        bootstrap_s=args.bootstrap)
        _write_csv(out / "md_table.csv", rows)
        detector = detection.MovementDetector(config, args.bootstrap)
        result = detector.run(trace)
        sweep = evaluate.sweep_t_delta(result.windows, truth, config,
                                       trace.duration)
        _write_csv(out / "f_measure_sweep.csv", sweep)
        outputs += ["md_table.csv", "f_measure_sweep.csv"]
        summary["md_table"] = rows
    elif args.mode == "re":
        detector = detection.MovementDetector(config, args.bootstrap)
        result = detector.run(trace)
        kept = [w for w in result.windows if w.duration >= config.t_delta]
        samples, _ = evaluate.labeled_samples(trace, kept, truth, config)
        rows = evaluate.learning_curve(samples, seed=args.seed)
        _write_csv(out / "learning_curve.csv", rows)
        outputs.append("learning_curve.csv")
        summary["n_samples"] = len(samples)
    elif args.mode == "security":
        result = evaluate.security_run(trace, truth, config, folds=args.folds,
                                       seed=args.seed,
                                       bootstrap_s=args.bootstrap)
        rows = [{"departure_t": f"{o.departure_t:.6f}",
                 "workstation": o.workstation, "case": o.case,
                 "deauth_t": f"{o.deauth_t:.6f}"} for o in result.outcomes]
        _write_csv(out / "outcomes.csv", rows)
        _write_csv(out / "deauth_curve.csv",
                   evaluate.deauth_curve(result.outcomes))
        outputs += ["outcomes.csv", "deauth_curve.csv"]
        summary["accuracy"] = result.accuracy
        summary["cases"] = {case: sum(1 for o in result.outcomes if o.case == case)
                            for case in ("A", "B", "C")}
        if args.script:
            script = simulate.load_script(args.script)
            exits = evaluate.script_exits(script)
            summary["attack_opportunities"] = {
                adv: evaluate.attack_opportunities(result.outcomes, exits, adv)
                for adv in (evaluate.INSIDER, evaluate.COWORKER)}
            baseline = evaluate.timeout_outcomes(truth, config)
            summary["attack_opportunities_timeout"] = {
                adv: evaluate.attack_opportunities(baseline, exits, adv)
                for adv in (evaluate.INSIDER, evaluate.COWORKER)}
    elif args.mode == "usability":
        plan, script = _require_plan_script(args)
        report = evaluate.usability_sim(trace, truth, plan, script, config,
                                        runs=args.runs, seed=args.seed,
                                        bootstrap_s=args.bootstrap)
        rows = [{"runs": report.runs,
                 "screensavers_mean": report.screensavers_mean,
                 "screensavers_std": report.screensavers_std,
                 "deauths_mean": report.deauths_mean,
                 "deauths_std": report.deauths_std,
                 "cost_s": report.cost_s}]
        _write_csv(out / "usability.csv", rows)
        outputs.append("usability.csv")
        summary["cost_s"] = report.cost_s
    elif args.mode == "compare":
        plan, script = _require_plan_script(args)
        security = evaluate.security_run(trace, truth, config,
                                         folds=args.folds, seed=args.seed,
                                         bootstrap_s=args.bootstrap)
        usability = evaluate.usability_sim(trace, truth, plan, script, config,
                                           runs=args.runs, seed=args.seed,
                                           bootstrap_s=args.bootstrap)
        baseline = evaluate.timeout_outcomes(truth, config)
        rows = [
            {"approach": "timeout", "vulnerable_time_s":
                evaluate.vulnerable_time(baseline), "cost_s": 0.0},
            {"approach": "pipeline", "vulnerable_time_s":
                evaluate.vulnerable_time(security.outcomes),
             "cost_s": usability.cost_s},
        ]
        _write_csv(out / "compare.csv", rows)
        outputs.append("compare.csv")
        summary["compare"] = rows
    else:
        raise ValidationError(f"unknown evaluate mode {args.mode!r}")

    (out / "summary.json").write_text(
        json.dumps(summary, indent=1, sort_keys=True) + "\n")
    outputs.append("summary.json")
    _write_manifest(out, "evaluate", args,
                    {"trace": str(args.trace), "truth": str(args.truth),
                     "mode": args.mode}, outputs)
    return 0


def _require_plan_script(args):
    if not args.plan or not args.script:
        raise ValidationError(f"mode {args.mode!r} needs --plan and --script")
    return simulate.load_plan(args.plan), simulate.load_script(args.script)


def cmd_analyze(args) -> int:
    config = _load_config(args)
    trace = simulate.read_trace(args.trace, config.sample_rate_hz)
    truth = simulate.read_ground_truth(args.truth)
    plan = simulate.load_plan(args.plan)
    detector = detection.MovementDetector(config, args.bootstrap)
    result = detector.run(trace)
    kept = [w for w in result.windows if w.duration >= config.t_delta]
    samples, _ = evaluate.labeled_samples(trace, kept, truth, config)
    if not samples:
        raise ValidationError("no labeled samples; nothing to analyze")
    import numpy as np

    X = np.stack([s.features for s in samples])
    y = np.array([s.label for s in samples])
    names = classify.feature_names(trace.streams)
    out = _out_dir(args)

    matrix, kept_names, dropped = analysis.correlation_matrix(X, names)
    with open(out / "correlation.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature"] + kept_names)
        for i, name in enumerate(kept_names):
            writer.writerow([name] + [repr(v) for v in matrix[i].tolist()])

    table = analysis.rank_features(X, y, names)
    _write_csv(out / "rmi_ranking.csv", table)
    surviving = analysis.filter_features(X, names, y)
    importance = analysis.stream_importance(table, surviving, plan)
    _write_csv(out / "stream_importance.csv", importance)
    _write_manifest(out, "analyze", args,
                    {"trace": str(args.trace), "truth": str(args.truth),
                     "plan": str(args.plan), "dropped_features": dropped},
                    ["correlation.csv", "rmi_ranking.csv",
                     "stream_importance.csv"])
    return 0


def vars_config(config: Config) -> dict:
    import dataclasses

    return dataclasses.asdict(config)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfdeauth",
        description="Presence-aware workstation deauthentication pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="structured-text config file")
        p.add_argument("--seed", type=int, default=0, help="RNG seed")
        p.add_argument("--out-dir", required=True, help="output directory")
        p.add_argument("--bootstrap", type=float, default=120.0,
                       help="movement-free seconds used to learn the profile")

    p = sub.add_parser("simulate", help="generate a synthetic trace")
    common(p)
    p.add_argument("--plan", required=True, help="floor-plan file")
    p.add_argument("--script", required=True, help="movement-script file")
    p.add_argument("--noise-sigma", type=float, default=0.5,
                   help="per-reading Gaussian noise, dB")
    p.add_argument("--duration", type=float, default=None,
                   help="trace length, seconds (default: last event + 30)")
    p.add_argument("--input-p", type=float, default=0.78,
                   help="per-interval input probability for inputs.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="emit variation windows for a trace")
    common(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--debug-csv", action="store_true",
                   help="also write per-tick t,s_t,ub,decision")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("train", help="fit the workstation classifier")
    common(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--truth", help="label samples from ground truth")
    p.add_argument("--inputs", help="label samples from idle times")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("run", help="replay the controller over a trace")
    common(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--inputs", required=True)
    p.add_argument("--plan", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("evaluate", help="score the pipeline")
    common(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--mode", required=True,
                   choices=["md", "re", "security", "usability", "compare"])
    p.add_argument("--plan", help="floor plan (usability/compare)")
    p.add_argument("--script", help="movement script (security/usability/compare)")
    p.add_argument("--runs", type=int, default=100,
                   help="input redraws for usability/compare")
    p.add_argument("--folds", type=int, default=5,
                   help="cross-validation folds for security/compare")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="feature correlations and RMI ranking")
    common(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--plan", required=True)
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (ValidationError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION_ERROR
    except InvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT_ERROR


if __name__ == "__main__":
    sys.exit(main())
