"""Sensor series, failure logs and the aligned, labeled dataset the model trains on."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import Sequence

import numpy as np

from .errors import AlignmentError, InputError

GC_COLUMNS = ("G_elapsed", "C_count")


def _frozen(arr, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SensorSeries:
    name: str
    values: np.ndarray
    start_time: datetime | int = 0
    granularity: float = 1.0  # minutes per step

    def __post_init__(self):
        values = _frozen(self.values, np.float64)
        if values.ndim != 1:
            raise InputError(f"sensor {self.name!r}: values must be one-dimensional")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise InputError(f"sensor {self.name!r}: non-finite value at step {bad}")
        if not self.granularity > 0:
            raise InputError(f"sensor {self.name!r}: granularity must be positive")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class FailureLog:
    """Failure episodes as inclusive ``(start_step, end_step)`` pairs."""

    episodes: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        eps = tuple((int(s), int(e)) for s, e in self.episodes)
        prev_end = -1
        for i, (s, e) in enumerate(eps):
            if s < 0 or e < 0:
                raise InputError(f"failure episode {i} has a negative index")
            if s > e:
                raise InputError(f"failure episode {i}: start {s} after end {e}")
            if s <= prev_end:
                raise InputError(f"failure episode {i} overlaps or precedes the previous one")
            prev_end = e
        object.__setattr__(self, "episodes", eps)

    def __len__(self) -> int:
        return len(self.episodes)

    @property
    def starts(self) -> np.ndarray:
        return np.array([s for s, _ in self.episodes], dtype=np.int64)

    @property
    def ends(self) -> np.ndarray:
        return np.array([e for _, e in self.episodes], dtype=np.int64)

    def shifted(self, offset: int) -> FailureLog:
        return FailureLog(tuple((s + offset, e + offset) for s, e in self.episodes))


@dataclass(frozen=True, eq=False)
class AlignedDataset:
    """Minute-indexed sensor matrix with observed state ``y`` and horizon target.

    ``step_offset`` is the global index of local step 0; it is non-zero for the
    halves produced by :func:`rarecast.evaluation.split_by_failures`.
    """

    sensor_names: tuple[str, ...]
    x: np.ndarray
    y_observed: np.ndarray
    lambda_target: np.ndarray
    delta_t_steps: int
    failures: FailureLog
    granularity: float = 1.0
    step_offset: int = 0

    def __post_init__(self):
        x = _frozen(self.x, np.float64)
        if x.ndim != 2:
            raise AlignmentError("x must be a (steps, sensors) matrix")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y_observed", _frozen(self.y_observed, np.int8))
        object.__setattr__(self, "lambda_target", _frozen(self.lambda_target, np.int8))
        object.__setattr__(self, "sensor_names", tuple(self.sensor_names))
        n = x.shape[0]
        if self.y_observed.shape != (n,) or self.lambda_target.shape != (n,):
            raise AlignmentError("y_observed and lambda_target must match the step count")
        if len(self.sensor_names) != x.shape[1]:
            raise AlignmentError("sensor_names must match the number of columns of x")
        if self.delta_t_steps < 1:
            raise InputError("delta_t_steps must be >= 1")

    @property
    def step_count(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


def observed_state(failures: FailureLog, step_count: int) -> np.ndarray:
    y = np.zeros(step_count, dtype=np.int8)
    for s, e in failures.episodes:
        y[s : e + 1] = 1
    return y


def horizon_labels(y_observed: np.ndarray, delta_t_steps: int) -> np.ndarray:
    """``lambda[t] = 1`` iff some failing step lies in ``(t, t + delta_t_steps]``."""
    n = len(y_observed)
    cs = np.concatenate([[0], np.cumsum(y_observed, dtype=np.int64)])
    t = np.arange(n)
    hi = np.minimum(t + delta_t_steps, n - 1)
    return ((cs[hi + 1] - cs[t + 1]) > 0).astype(np.int8)


def align_and_label(
    sensors: Sequence[SensorSeries], failures: FailureLog, delta_t_steps: int
) -> AlignedDataset:
    if not sensors:
        raise InputError("at least one sensor series is required")
    if delta_t_steps < 1:
        raise InputError("delta_t_steps must be >= 1")
    first = sensors[0]
    n = len(first)
    for s in sensors[1:]:
        if len(s) != n:
            raise AlignmentError(f"sensor {s.name!r} has {len(s)} steps, expected {n}")
        if s.granularity != first.granularity:
            raise AlignmentError(f"sensor {s.name!r} has a different granularity")
        if s.start_time != first.start_time:
            raise AlignmentError(f"sensor {s.name!r} has a different start time")
    if failures.episodes and failures.episodes[-1][1] >= n:
        raise AlignmentError(
            f"failure episode ends at step {failures.episodes[-1][1]} beyond series length {n}"
        )
    y = observed_state(failures, n)
    return AlignedDataset(
        sensor_names=tuple(s.name for s in sensors),
        x=np.column_stack([s.values for s in sensors]),
        y_observed=y,
        lambda_target=horizon_labels(y, delta_t_steps),
        delta_t_steps=delta_t_steps,
        failures=failures,
        granularity=first.granularity,
    )


def elapsed_and_count(failures: FailureLog, step_count: int) -> tuple[np.ndarray, np.ndarray]:
    """Elapsed functioning steps since the last ended episode, and ended-episode count."""
    t = np.arange(step_count)
    ends = failures.ends
    count = np.searchsorted(ends, t, side="left")  # episodes with end < t
    last_end = np.where(count > 0, ends[np.maximum(count - 1, 0)] if len(ends) else 0, -1)
    elapsed = t - last_end - 1
    elapsed[count == 0] = t[count == 0]
    elapsed[observed_state(failures, step_count) == 1] = 0
    return elapsed.astype(np.float64), count.astype(np.float64)


def augment_g_c(dataset: AlignedDataset, failures: FailureLog | None = None) -> AlignedDataset:
    """Append the elapsed-time (G) and past-failure-count (C) columns."""
    failures = dataset.failures if failures is None else failures
    if failures.episodes and failures.episodes[-1][1] >= dataset.step_count:
        raise AlignmentError("failure log extends beyond the dataset")
    g, c = elapsed_and_count(failures, dataset.step_count)
    return AlignedDataset(
        sensor_names=dataset.sensor_names + GC_COLUMNS,
        x=np.column_stack([dataset.x, g, c]),
        y_observed=dataset.y_observed,
        lambda_target=dataset.lambda_target,
        delta_t_steps=dataset.delta_t_steps,
        failures=dataset.failures,
        granularity=dataset.granularity,
        step_offset=dataset.step_offset,
    )


@dataclass(frozen=True, eq=False)
class CorrelationReport:
    sensor_names: tuple[str, ...]
    matrix: np.ndarray
    flagged_pairs: list[tuple[int, int, float]]
    degenerate: list[tuple[int, int]] = field(default_factory=list)


def correlation_screen(dataset: AlignedDataset, threshold: float = 0.95) -> CorrelationReport:
    """Pairwise Pearson screen. Zero-variance columns correlate as 0 and are flagged degenerate."""
    if not 0 < threshold <= 1:
        raise InputError("threshold must lie in (0, 1]")
    if dataset.step_count < 2:
        raise InputError("correlation needs at least two steps")
    x = dataset.x
    centered = x - x.mean(axis=0)
    norms = np.sqrt((centered**2).sum(axis=0))
    ok = norms > 0
    d = x.shape[1]
    r = np.zeros((d, d))
    if ok.any():
        z = centered[:, ok] / norms[ok]
        r[np.ix_(ok, ok)] = np.clip(z.T @ z, -1.0, 1.0)
    r[np.diag_indices(d)] = ok.astype(float)
    r = (r + r.T) / 2
    flagged, degenerate = [], []
    for i in range(d):
        for j in range(i + 1, d):
            if not (ok[i] and ok[j]):
                degenerate.append((i, j))
            elif abs(r[i, j]) >= threshold:
                flagged.append((i, j, float(r[i, j])))
    return CorrelationReport(dataset.sensor_names, r, flagged, degenerate)
