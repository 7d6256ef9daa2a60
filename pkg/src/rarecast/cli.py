"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 training divergence.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import io, pipeline
from .errors import DataError, DivergenceError
from .evaluation import MetricsReport, select_q_from_training, split_by_failures, sweep_threshold
from .inference import DecisionConfig, SmoothingConfig, predict_trace
from .model import build_design
from .synth import PLACEMENTS, SynthConfig, generate
from .timeseries import FailureLog, correlation_screen
from .trainer import WEIGHTING_MODES, TrainConfig

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3
MINUTES_PER_DAY = 1440


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _candidates(text: str) -> list[int]:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",") if v.strip()]


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _add_data_args(p, failures_required=True):
    p.add_argument("--sensors", required=True, type=Path, help="sensor CSV (timestamp,<sensors...>)")
    p.add_argument(
        "--failures", required=failures_required, type=Path, help="failure CSV (start,end)"
    )
    p.add_argument("--fill", choices=io.FILL_POLICIES, default="error", help="missing-cell policy")


def _add_horizon_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--delta-t", type=int, default=None, help="horizon in steps (default 60)")
    g.add_argument("--delta-t-days", type=float, default=None, help="horizon in days")
    p.add_argument("--add-gc", action="store_true", help="append elapsed-time and failure-count columns")


def _add_fit_args(p):
    p.add_argument("--weighting", choices=WEIGHTING_MODES, default="adaptive")
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--max-epochs", type=int, default=5000)
    p.add_argument("--tolerance", type=float, default=1e-7)
    p.add_argument("--adaptive-every", type=int, default=10, help="epochs between weight updates")
    p.add_argument("--weight-cap", type=float, default=100.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--smooth-l", type=int, default=10)
    p.add_argument("--threshold", type=float, default=0.9)
    p.add_argument("--raw", action="store_true", help="threshold raw instead of smoothed probabilities")
    p.add_argument("--train-frac", type=float, default=0.8)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rarecast", description="Rare failure prediction with weighted autologistic regression")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic sensor/failure dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=int, default=10080, help="steps (minutes)")
    p.add_argument("--failures", type=int, default=30)
    p.add_argument("--sensor-count", type=int, default=1)
    p.add_argument("--failure-duration", type=int, default=5)
    p.add_argument("--precursor-window", type=int, default=60)
    p.add_argument("--precursor-strength", type=float, default=3.0)
    p.add_argument("--precursor-onset", type=float, default=1.0)
    p.add_argument("--noise-std", type=float, default=1.0)
    p.add_argument("--ar", type=float, default=0.9)
    p.add_argument("--placement", choices=PLACEMENTS, default="uniform")
    p.add_argument("--out-dir", type=Path, required=True)

    p = sub.add_parser("train", help="fit a model on the training half and save it")
    _add_data_args(p)
    _add_horizon_args(p)
    p.add_argument("--q", type=int, default=10, help="memory depth in steps")
    _add_fit_args(p)
    p.add_argument("--model-out", type=Path, required=True)
    p.add_argument("--report-out", type=Path, help="write the held-out test report here")

    p = sub.add_parser("predict", help="write per-step probabilities and decisions")
    p.add_argument("--model", type=Path, required=True)
    _add_data_args(p, failures_required=False)
    p.add_argument("--trace-out", type=Path, required=True)

    p = sub.add_parser("evaluate", help="score a saved model")
    p.add_argument("--model", type=Path, required=True)
    _add_data_args(p)
    p.add_argument("--split", choices=("test", "train", "all"), default="test")
    p.add_argument("--report-out", type=Path)
    p.add_argument("--trace-out", type=Path)

    p = sub.add_parser("select-q", help="choose the memory depth by validation F1")
    _add_data_args(p)
    _add_horizon_args(p)
    p.add_argument("--candidates", type=_candidates, default=_candidates("0..30"))
    p.add_argument("--patience", type=int, default=3)
    _add_fit_args(p)

    p = sub.add_parser("sweep-threshold", help="metrics across decision thresholds")
    p.add_argument("--model", type=Path, required=True)
    _add_data_args(p)
    p.add_argument("--thresholds", type=_floats, default=_floats("0.5,0.7,0.9"))
    p.add_argument("--split", choices=("test", "train", "all"), default="test")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("correlate", help="pairwise sensor correlation screen")
    p.add_argument("--sensors", required=True, type=Path)
    p.add_argument("--failures", type=Path, help="needed only with --add-gc")
    p.add_argument("--fill", choices=io.FILL_POLICIES, default="error")
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--add-gc", action="store_true")
    return parser


def _horizon(args, granularity: float) -> int:
    if args.delta_t_days is not None:
        steps = round(args.delta_t_days * MINUTES_PER_DAY / granularity)
    else:
        steps = 60 if args.delta_t is None else args.delta_t
    if steps < 1:
        raise UsageError("the horizon must be at least one step")
    return steps


def _load(args):
    sensors, axis = io.read_sensor_csv(args.sensors, args.fill)
    failures = io.load_failures(args.failures, axis) if args.failures else FailureLog(())
    return sensors, failures, axis


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        weighting_mode=args.weighting,
        learning_rate=args.lr,
        max_epochs=args.max_epochs,
        tolerance=args.tolerance,
        adaptive_update_every=args.adaptive_every,
        weight_cap=args.weight_cap,
        seed=args.seed,
    )


def _emit(text: str, path: Path | None):
    sys.stdout.write(text)
    if path is not None:
        path.write_text(text)


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        seed=args.seed,
        duration_steps=args.duration,
        sensor_count=args.sensor_count,
        failure_count=args.failures,
        failure_duration_steps=args.failure_duration,
        precursor_window_steps=args.precursor_window,
        precursor_strength=args.precursor_strength,
        precursor_onset=args.precursor_onset,
        noise_std=args.noise_std,
        ar_coefficient=args.ar,
        placement=args.placement,
    )
    sensors, failures = generate(cfg)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    io.write_sensor_csv(args.out_dir / "sensors.csv", sensors)
    io.write_failure_csv(args.out_dir / "failures.csv", failures)
    print(f"wrote {len(sensors[0])} steps, {len(sensors)} sensor(s), {len(failures)} failures to {args.out_dir}")
    return EXIT_OK


def cmd_train(args) -> int:
    sensors, failures, axis = _load(args)
    dt = _horizon(args, axis.granularity_minutes)
    dataset = pipeline.prepare_dataset(sensors, failures, dt, args.add_gc)
    outcome = pipeline.train_model(
        dataset,
        args.q,
        _train_config(args),
        SmoothingConfig(args.smooth_l),
        DecisionConfig(args.threshold),
        args.train_frac,
        add_gc=args.add_gc,
        use_raw=args.raw,
    )
    io.save_model(args.model_out, outcome.model)
    res, split = outcome.fit, outcome.split
    print(
        f"trained on {split.train_failure_count} failures ({split.train.step_count} steps), "
        f"tested on {split.test_failure_count} ({split.test.step_count} steps)"
    )
    print(
        f"epochs: {res.epochs_run}  converged: {res.converged}  "
        f"weights: w0={io.fmt(res.final_weights.w0)} w1={io.fmt(res.final_weights.w1)}"
    )
    header = {"split": "test", "delta_t_steps": dt, "q_steps": args.q}
    _emit(io.format_report(outcome.report, header), args.report_out)
    print(f"model saved to {args.model_out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = io.load_model(args.model)
    sensors, failures, _ = _load(args)
    dataset = pipeline.model_dataset(model, sensors, failures)
    pipeline._check_features(model, dataset)
    design = build_design(dataset, model.params.lag)
    trace = predict_trace(model.params, design, model.smoothing, model.decision, model.use_raw)
    io.write_trace(args.trace_out, trace)
    print(f"{len(trace.decisions)} predictions, {len(trace.alarm_episodes)} alarm episode(s) -> {args.trace_out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = io.load_model(args.model)
    sensors, failures, _ = _load(args)
    dataset = pipeline.model_dataset(model, sensors, failures)
    report, trace, half = pipeline.evaluate_model(model, dataset, args.split)
    header = {"split": args.split, "delta_t_steps": model.params.delta_t_steps, "q_steps": model.params.q}
    _emit(io.format_report(report, header), args.report_out)
    if args.trace_out is not None:
        io.write_trace(args.trace_out, trace, half.step_offset)
    return EXIT_OK


def cmd_select_q(args) -> int:
    sensors, failures, axis = _load(args)
    dt = _horizon(args, axis.granularity_minutes)
    dataset = pipeline.prepare_dataset(sensors, failures, dt, args.add_gc)
    train = split_by_failures(dataset, train_fraction=args.train_frac).train
    result = select_q_from_training(
        train,
        args.candidates,
        _train_config(args),
        SmoothingConfig(args.smooth_l),
        DecisionConfig(args.threshold),
        patience=args.patience,
    )
    print("q,f1")
    for q, f1 in result.candidate_scores:
        print(f"{q},{io.fmt(f1)}")
    print(f"chosen_q: {result.chosen_q}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    model = io.load_model(args.model)
    sensors, failures, _ = _load(args)
    dataset = pipeline.model_dataset(model, sensors, failures)
    _, trace, half = pipeline.evaluate_model(model, dataset, args.split)
    design = build_design(half, model.params.lag)
    rows = sweep_threshold(trace.smoothed_probs, design.target, args.thresholds)
    cols = ["threshold", *MetricsReport.FIELDS, "tp", "fp", "tn", "fn"]
    lines = [",".join(cols)]
    for thr, rep in rows:
        vals = [io.fmt(thr)] + [io.fmt(getattr(rep, f)) for f in MetricsReport.FIELDS]
        lines.append(",".join(vals + [str(v) for v in rep.confusion]))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_correlate(args) -> int:
    sensors, failures, _ = _load(args)
    dataset = pipeline.prepare_dataset(sensors, failures, 1, args.add_gc)
    report = correlation_screen(dataset, args.threshold)
    names = report.sensor_names
    print("," + ",".join(names))
    for name, row in zip(names, report.matrix):
        print(name + "," + ",".join(io.fmt(v) for v in row))
    for i, j, r in report.flagged_pairs:
        print(f"flagged: {names[i]} ~ {names[j]} r={io.fmt(r)}")
    for i, j in report.degenerate:
        print(f"degenerate: {names[i]} ~ {names[j]} (zero variance)")
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "select-q": cmd_select_q,
    "sweep-threshold": cmd_sweep,
    "correlate": cmd_correlate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"rarecast: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"rarecast: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (DataError, OSError) as exc:
        print(f"rarecast: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
