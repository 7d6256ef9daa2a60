"""Full-batch gradient descent on the negative weighted log-likelihood.

Three class-weighting modes are supported:

* ``none``: both classes weigh 1.
* ``simple``: each class is weighted by the *other* class's frequency.
* ``adaptive``: start from the simple weights, then multiply each class weight by
  ``exp(error)`` every ``adaptive_update_every`` epochs.

The step is taken on the objective normalized by the total row weight, so the
learning rate does not have to track the absolute size of the class weights.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateClassError, DivergenceError, InputError
from .model import (
    ClassWeights,
    DesignMatrix,
    ModelParams,
    Standardizer,
    gradient,
    predict_probs,
    row_weights,
    weighted_log_likelihood,
)

log = logging.getLogger(__name__)

WEIGHTING_MODES = ("none", "simple", "adaptive")


@dataclass(frozen=True)
class TrainConfig:
    weighting_mode: str = "none"
    learning_rate: float = 0.1
    max_epochs: int = 5000
    tolerance: float = 1e-7
    adaptive_update_every: int = 10
    weight_cap: float = 100.0
    seed: int = 0
    standardize: bool = True

    def __post_init__(self):
        if self.weighting_mode not in WEIGHTING_MODES:
            raise InputError(f"weighting_mode must be one of {WEIGHTING_MODES}")
        if not self.learning_rate > 0:
            raise InputError("learning_rate must be positive")
        if self.max_epochs < 1:
            raise InputError("max_epochs must be >= 1")
        if self.adaptive_update_every < 1:
            raise InputError("adaptive_update_every must be >= 1")
        if self.weight_cap < 1:
            raise InputError("weight_cap must be >= 1")


@dataclass(frozen=True)
class ClassErrors:
    e0: float
    e1: float

    def __post_init__(self):
        if not (0 <= self.e0 <= 1 and 0 <= self.e1 <= 1):
            raise InputError("class errors must lie in [0, 1]")


@dataclass
class FitResult:
    params: ModelParams
    final_weights: ClassWeights
    weight_trace: list[tuple[int, float, float, float, float]] = field(default_factory=list)
    objective_trace: list[float] = field(default_factory=list)
    converged: bool = False
    epochs_run: int = 0
    weighting_mode: str = "none"


def _require_both_classes(design: DesignMatrix) -> tuple[int, int]:
    n0, n1 = design.class_counts()
    if n0 == 0 or n1 == 0:
        only = "1" if n0 == 0 else "0"
        raise DegenerateClassError(
            f"all {len(design)} training rows have target {only}; both classes are needed "
            "(check the failure log and the horizon)"
        )
    return n0, n1


def simple_weights(design: DesignMatrix) -> ClassWeights:
    n0, n1 = _require_both_classes(design)
    n = n0 + n1
    return ClassWeights(w0=n1 / n, w1=n0 / n)


def adaptive_weight_update(
    weights: ClassWeights, errors: ClassErrors, cap: float = 100.0
) -> ClassWeights:
    return ClassWeights(
        min(weights.w0 * float(np.exp(errors.e0)), cap), min(weights.w1 * float(np.exp(errors.e1)), cap)
    )


def class_errors_from_probs(p: np.ndarray, target: np.ndarray) -> ClassErrors:
    pos = target == 1
    if pos.all() or not pos.any():
        raise DegenerateClassError("class errors need rows of both classes")
    e1 = float(np.mean(1.0 - p[pos]))
    e0 = float(np.mean(p[~pos]))
    return ClassErrors(min(max(e0, 0.0), 1.0), min(max(e1, 0.0), 1.0))


def class_errors(params: ModelParams, design: DesignMatrix) -> ClassErrors:
    """Mean absolute probability error of each class."""
    return class_errors_from_probs(predict_probs(params, design), design.target)


def initial_weights(design: DesignMatrix, config: TrainConfig) -> ClassWeights:
    if config.weighting_mode == "none":
        return ClassWeights(1.0, 1.0)
    return simple_weights(design)


def fit(
    design: DesignMatrix,
    config: TrainConfig = TrainConfig(),
    weights: ClassWeights | None = None,
    init: ModelParams | None = None,
) -> FitResult:
    """Fit the autologistic parameters.

    ``weights`` overrides the mode's initial class weights; in ``none`` and
    ``simple`` modes they then stay fixed. ``init`` warm-starts from existing
    parameters (their standardization is kept).
    """
    if len(design) == 0:
        raise InputError("design is empty")
    if config.weighting_mode != "none":
        _require_both_classes(design)
    w = initial_weights(design, config) if weights is None else weights

    if init is not None:
        params = init
    else:
        std = Standardizer.fit(design) if config.standardize else Standardizer.identity(design.d)
        params = ModelParams.zeros(
            design.lag,
            design.d,
            feature_names=design.feature_names,
            x_mean=std.mean,
            x_scale=std.scale,
        )
    theta = params.to_vector()
    lr = config.learning_rate
    adaptive = config.weighting_mode == "adaptive"

    def objective(p: np.ndarray, cw: ClassWeights, total: float) -> float:
        return -weighted_log_likelihood(params, design, cw, p=p) / total

    total = float(row_weights(design.target, w).sum())
    probs = predict_probs(params, design)
    obj = objective(probs, w, total)
    result = FitResult(params, w, weighting_mode=config.weighting_mode)
    frozen = False

    for epoch in range(1, config.max_epochs + 1):
        theta = theta + lr * gradient(params, design, w, p=probs) / total
        if not np.all(np.isfinite(theta)):
            raise DivergenceError(epoch, lr)
        params = params.with_vector(theta)
        probs = predict_probs(params, design)
        new_obj = objective(probs, w, total)
        if not np.isfinite(new_obj):
            raise DivergenceError(epoch, lr)
        if new_obj > obj + 1e-9:
            raise DivergenceError(epoch, lr, f"objective rose from {obj:.9g} to {new_obj:.9g}")
        result.objective_trace.append(new_obj)
        rel = abs(obj - new_obj) / max(abs(obj), 1e-300)
        obj = new_obj
        result.epochs_run = epoch

        if adaptive and not frozen and epoch % config.adaptive_update_every == 0:
            errs = class_errors_from_probs(probs, design.target)
            w = adaptive_weight_update(w, errs, config.weight_cap)
            result.weight_trace.append((epoch, w.w0, w.w1, errs.e0, errs.e1))
            # once a class weight saturates, further updates could only erode the learned ratio
            frozen = max(w.w0, w.w1) >= config.weight_cap
            total = float(row_weights(design.target, w).sum())
            obj = objective(probs, w, total)
            continue

        if rel < config.tolerance:
            result.converged = True
            break

    result.params = params
    result.final_weights = w
    log.debug(
        "fit mode=%s epochs=%d converged=%s objective=%.6g",
        config.weighting_mode,
        result.epochs_run,
        result.converged,
        obj,
    )
    return result
