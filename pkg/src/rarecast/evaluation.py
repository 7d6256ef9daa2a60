"""Failure-based splitting, imbalance-aware metrics, memory-depth selection and threshold sweeps."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DimensionError, InfeasibleSplitError, InputError
from .inference import DecisionConfig, SmoothingConfig, predict_trace, runs
from .model import LagConfig, build_design
from .timeseries import AlignedDataset, FailureLog, horizon_labels, observed_state
from .trainer import TrainConfig, fit


@dataclass(frozen=True, eq=False)
class EvalSplit:
    train: AlignedDataset
    test: AlignedDataset
    train_failure_count: int
    test_failure_count: int
    boundary_step: int


def subset(dataset: AlignedDataset, lo: int, hi: int) -> AlignedDataset:
    """Steps ``[lo, hi)`` as a stand-alone dataset, re-labeled from its own episodes."""
    eps = tuple((s - lo, e - lo) for s, e in dataset.failures.episodes if s >= lo and e < hi)
    failures = FailureLog(eps)
    n = hi - lo
    y = observed_state(failures, n)
    return AlignedDataset(
        sensor_names=dataset.sensor_names,
        x=dataset.x[lo:hi],
        y_observed=y,
        lambda_target=horizon_labels(y, dataset.delta_t_steps),
        delta_t_steps=dataset.delta_t_steps,
        failures=failures,
        granularity=dataset.granularity,
        step_offset=dataset.step_offset + lo,
    )


def train_episode_count(episode_count: int, train_fraction: float) -> int:
    # the epsilon keeps products like 0.8 * 30 from landing just under an integer
    return int(math.floor(train_fraction * episode_count + 1e-9))


def split_by_failures(
    dataset: AlignedDataset, failures: FailureLog | None = None, train_fraction: float = 0.8
) -> EvalSplit:
    failures = dataset.failures if failures is None else failures
    if not 0 < train_fraction < 1:
        raise InputError("train_fraction must lie strictly between 0 and 1")
    total = len(failures)
    if total < 2:
        raise InfeasibleSplitError(f"need at least 2 failure episodes to split, got {total}")
    k = train_episode_count(total, train_fraction)
    if k == 0 or k == total:
        raise InfeasibleSplitError(
            f"train fraction {train_fraction} puts {k} of {total} episodes in training"
        )
    last_train_end = failures.episodes[k - 1][1]
    first_test_start = failures.episodes[k][0]
    boundary = (last_train_end + first_test_start) // 2 + 1
    if failures is not dataset.failures:
        dataset = AlignedDataset(
            dataset.sensor_names,
            dataset.x,
            dataset.y_observed,
            dataset.lambda_target,
            dataset.delta_t_steps,
            failures,
            dataset.granularity,
            dataset.step_offset,
        )
    return EvalSplit(
        train=subset(dataset, 0, boundary),
        test=subset(dataset, boundary, dataset.step_count),
        train_failure_count=k,
        test_failure_count=total - k,
        boundary_step=boundary,
    )


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    recall: float
    specificity: float
    precision: float
    f1: float
    false_alarms: int
    imbalance_rate: float
    confusion: tuple[int, int, int, int]  # tp, fp, tn, fn

    FIELDS = (
        "accuracy",
        "recall",
        "specificity",
        "precision",
        "f1",
        "false_alarms",
        "imbalance_rate",
    )

    def to_dict(self) -> dict:
        out = asdict(self)
        tp, fp, tn, fn = self.confusion
        out["confusion"] = {"tp": tp, "fp": fp, "tn": tn, "fn": fn}
        return out


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def compute_metrics(
    decisions,
    targets,
    alarm_episodes: list[tuple[int, int]] | None = None,
    target_episodes: list[tuple[int, int]] | None = None,
) -> MetricsReport:
    """Per-step confusion metrics plus episode-level false alarms.

    Episodes are inclusive index ranges into ``decisions``/``targets``; they are
    derived from the sequences when not supplied.
    """
    d = np.asarray(decisions).astype(bool)
    t = np.asarray(targets).astype(bool)
    if d.shape != t.shape:
        raise DimensionError(f"decisions ({d.size}) and targets ({t.size}) differ in length")
    tp = int(np.sum(d & t))
    fp = int(np.sum(d & ~t))
    tn = int(np.sum(~d & ~t))
    fn = int(np.sum(~d & t))
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = _ratio(2 * precision * recall, precision + recall)

    alarms = runs(d) if alarm_episodes is None else alarm_episodes
    if target_episodes is None:
        pos_cs = np.concatenate([[0], np.cumsum(t)])
        false_alarms = sum(1 for s, e in alarms if pos_cs[e + 1] - pos_cs[s] == 0)
    else:
        false_alarms = sum(
            1 for s, e in alarms if not any(s <= te and ts <= e for ts, te in target_episodes)
        )
    return MetricsReport(
        accuracy=_ratio(tp + tn, d.size),
        recall=recall,
        specificity=_ratio(tn, tn + fp),
        precision=precision,
        f1=f1,
        false_alarms=int(false_alarms),
        imbalance_rate=_ratio(int(t.sum()), int((~t).sum())),
        confusion=(tp, fp, tn, fn),
    )


def sweep_threshold(smoothed, targets, thresholds) -> list[tuple[float, MetricsReport]]:
    smoothed = np.asarray(smoothed, dtype=np.float64)
    out = []
    for thr in thresholds:
        if not 0 <= thr < 1:
            raise InputError(f"threshold {thr} outside [0, 1)")
        out.append((float(thr), compute_metrics(smoothed > thr, targets)))
    return out


@dataclass
class FFFSResult:
    chosen_q: int
    candidate_scores: list[tuple[int, float]] = field(default_factory=list)
    selection_metric: str = "f1"


def score_q(
    train: AlignedDataset,
    validation: AlignedDataset,
    q: int,
    train_config: TrainConfig,
    smoothing: SmoothingConfig,
    decision: DecisionConfig,
) -> float:
    lag = LagConfig(q)
    result = fit(build_design(train, lag), train_config)
    design = build_design(validation, lag)
    trace = predict_trace(result.params, design, smoothing, decision)
    return compute_metrics(trace.decisions, design.target).f1


def select_q_fffs(
    train: AlignedDataset,
    validation: AlignedDataset,
    q_candidates,
    train_config: TrainConfig = TrainConfig(),
    smoothing: SmoothingConfig = SmoothingConfig(),
    decision: DecisionConfig = DecisionConfig(),
    patience: int = 3,
) -> FFFSResult:
    """Forward scan over memory depths, scored by validation F1.

    Stops once ``patience`` consecutive candidates fail to beat the best score;
    ties keep the earlier (smaller) candidate.
    """
    candidates = [int(q) for q in q_candidates]
    if not candidates:
        raise InputError("q_candidates is empty")
    limit = min(train.step_count, validation.step_count)
    feasible = [q for q in candidates if 0 <= q < limit]
    if not feasible:
        raise InputError(f"no feasible q among {candidates} for datasets of {limit} steps")
    scores: list[tuple[int, float]] = []
    best_q, best_f1, stale = feasible[0], -1.0, 0
    for q in feasible:
        f1 = score_q(train, validation, q, train_config, smoothing, decision)
        scores.append((q, f1))
        if f1 > best_f1 or (f1 == best_f1 and q < best_q):
            improved = f1 > best_f1
            best_q, best_f1 = q, f1
            stale = 0 if improved else stale + 1
        else:
            stale += 1
        if stale >= patience:
            break
    return FFFSResult(best_q, scores)


def select_q_from_training(
    train: AlignedDataset,
    q_candidates,
    train_config: TrainConfig = TrainConfig(),
    smoothing: SmoothingConfig = SmoothingConfig(),
    decision: DecisionConfig = DecisionConfig(),
    validation_fraction: float = 0.2,
    patience: int = 3,
) -> FFFSResult:
    """Run the scan with the last ``validation_fraction`` of training episodes held out."""
    inner = split_by_failures(train, train_fraction=1 - validation_fraction)
    return select_q_fffs(
        inner.train, inner.test, q_candidates, train_config, smoothing, decision, patience
    )
