"""End-to-end helpers shared by the CLI and library users.

``train_model`` splits a labeled dataset by failures, fits on the training half
and packages everything needed to reproduce predictions; ``evaluate_model``
replays the same split and scores the chosen half.
"""

from __future__ import annotations

from dataclasses import dataclass

from .evaluation import EvalSplit, MetricsReport, compute_metrics, split_by_failures
from .inference import DecisionConfig, PredictionTrace, SmoothingConfig, predict_trace
from .io import SavedModel
from .model import DesignMatrix, LagConfig, ModelParams, build_design
from .errors import DegenerateClassError, DimensionError
from .timeseries import AlignedDataset, FailureLog, SensorSeries, align_and_label, augment_g_c
from .trainer import FitResult, TrainConfig, fit


def prepare_dataset(
    sensors: list[SensorSeries], failures: FailureLog, delta_t_steps: int, add_gc: bool = False
) -> AlignedDataset:
    dataset = align_and_label(sensors, failures, delta_t_steps)
    return augment_g_c(dataset, failures) if add_gc else dataset


@dataclass
class TrainOutcome:
    model: SavedModel
    fit: FitResult
    split: EvalSplit
    report: MetricsReport
    trace: PredictionTrace


def train_model(
    dataset: AlignedDataset,
    q_steps: int,
    config: TrainConfig = TrainConfig(),
    smoothing: SmoothingConfig = SmoothingConfig(),
    decision: DecisionConfig = DecisionConfig(),
    train_fraction: float = 0.8,
    add_gc: bool = False,
    use_raw: bool = False,
) -> TrainOutcome:
    positives = int(dataset.lambda_target.sum())
    if positives in (0, dataset.step_count):
        raise DegenerateClassError(
            f"every step has target {int(positives > 0)} at delta_t={dataset.delta_t_steps}; "
            "both classes are needed to train (check the failure log)"
        )
    lag = LagConfig(q_steps)
    split = split_by_failures(dataset, train_fraction=train_fraction)
    result = fit(build_design(split.train, lag), config)
    params = ModelParams(
        result.params.a,
        result.params.b,
        result.params.c,
        lag,
        dataset.delta_t_steps,
        dataset.sensor_names,
        result.params.x_mean,
        result.params.x_scale,
    )
    result.params = params
    model = SavedModel(
        params=params,
        weights=result.final_weights,
        smoothing=smoothing,
        decision=decision,
        use_raw=use_raw,
        add_gc=add_gc,
        train_fraction=train_fraction,
        training={
            "mode": config.weighting_mode,
            "epochs_run": result.epochs_run,
            "converged": result.converged,
            "seed": config.seed,
            "learning_rate": config.learning_rate,
            "max_epochs": config.max_epochs,
            "tolerance": config.tolerance,
            "adaptive_update_every": config.adaptive_update_every,
            "weight_cap": config.weight_cap,
        },
    )
    report, trace, _ = score(model, split.test)
    return TrainOutcome(model, result, split, report, trace)


def _check_features(model: SavedModel, dataset: AlignedDataset) -> None:
    if tuple(dataset.sensor_names) != tuple(model.params.feature_names):
        raise DimensionError(
            f"model was trained on columns {list(model.params.feature_names)}, "
            f"data has {list(dataset.sensor_names)}"
        )


def score(
    model: SavedModel, dataset: AlignedDataset
) -> tuple[MetricsReport, PredictionTrace, DesignMatrix]:
    _check_features(model, dataset)
    design = build_design(dataset, model.params.lag)
    trace = predict_trace(model.params, design, model.smoothing, model.decision, model.use_raw)
    return compute_metrics(trace.decisions, design.target), trace, design


def model_dataset(
    model: SavedModel, sensors: list[SensorSeries], failures: FailureLog
) -> AlignedDataset:
    return prepare_dataset(sensors, failures, model.params.delta_t_steps, model.add_gc)


def evaluation_half(model: SavedModel, dataset: AlignedDataset, which: str = "test") -> AlignedDataset:
    if which == "all":
        return dataset
    split = split_by_failures(dataset, train_fraction=model.train_fraction)
    return split.test if which == "test" else split.train


def evaluate_model(
    model: SavedModel, dataset: AlignedDataset, which: str = "test"
) -> tuple[MetricsReport, PredictionTrace, AlignedDataset]:
    half = evaluation_half(model, dataset, which)
    report, trace, _ = score(model, half)
    return report, trace, half
