"""Probabilities, trailing-window smoothing, threshold decisions and alarm episodes.

Inference always feeds the *observed* failure state back as the ``y`` lags; the
model's own predictions are never used as regressors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InputError
from .model import DesignMatrix, ModelParams, predict_probs


@dataclass(frozen=True)
class SmoothingConfig:
    L: int = 10

    def __post_init__(self):
        if self.L < 1:
            raise InputError("smoothing window L must be >= 1")


@dataclass(frozen=True)
class DecisionConfig:
    threshold: float = 0.9

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise InputError("threshold must lie strictly between 0 and 1")


@dataclass(frozen=True, eq=False)
class PredictionTrace:
    origin_steps: np.ndarray
    raw_probs: np.ndarray
    smoothed_probs: np.ndarray
    decisions: np.ndarray
    alarm_episodes: list[tuple[int, int]]
    threshold: float


def smooth(raw, config: SmoothingConfig = SmoothingConfig()) -> np.ndarray:
    """Mean of the trailing ``L`` values; the first ``L-1`` windows are shorter."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.size == 0:
        raise InputError("cannot smooth an empty sequence")
    L = config.L
    if L == 1:
        return raw.copy()
    padded = np.concatenate([np.full(min(L, raw.size) - 1, np.nan), raw])
    win = sliding_window_view(padded, min(L, raw.size))
    # clipping keeps each mean inside its window's range despite rounding
    return np.clip(np.nanmean(win, axis=1), np.nanmin(win, axis=1), np.nanmax(win, axis=1))


def runs(binary, origin: np.ndarray | None = None) -> list[tuple[int, int]]:
    """Maximal runs of ones as inclusive ``(start, end)`` pairs, in ``origin`` coordinates."""
    b = np.asarray(binary, dtype=np.int8)
    if b.size == 0:
        return []
    edges = np.diff(np.concatenate([[0], b, [0]]))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    if origin is not None:
        return [(int(origin[s]), int(origin[e])) for s, e in zip(starts, ends)]
    return [(int(s), int(e)) for s, e in zip(starts, ends)]


def decide(
    smoothed, config: DecisionConfig = DecisionConfig(), origin: np.ndarray | None = None
) -> tuple[np.ndarray, list[tuple[int, int]]]:
    decisions = (np.asarray(smoothed, dtype=np.float64) > config.threshold).astype(np.int8)
    return decisions, runs(decisions, origin)


def predict_trace(
    params: ModelParams,
    design: DesignMatrix,
    smoothing: SmoothingConfig = SmoothingConfig(),
    decision: DecisionConfig = DecisionConfig(),
    use_raw: bool = False,
) -> PredictionTrace:
    raw = predict_probs(params, design)
    smoothed = raw.copy() if use_raw else smooth(raw, smoothing)
    origin = design.origin_steps
    decisions, episodes = decide(smoothed, decision, origin)
    return PredictionTrace(origin, raw, smoothed, decisions, episodes, decision.threshold)
