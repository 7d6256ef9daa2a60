"""Autologistic probability model: parameters, lagged design, weighted likelihood and gradient.

The linear predictor for the row at step ``t`` is::

    z = sum_k a[k] . (x[t-k] - mean) / scale  +  sum_k b[k] * y[t-k]  +  c

for ``k = 0..q``. ``mean``/``scale`` are per-sensor standardization statistics
stored with the parameters (zeros/ones when no standardization is used).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from .errors import DimensionError, InputError, InsufficientHistoryError
from .timeseries import AlignedDataset

EPS = 1e-12


@dataclass(frozen=True)
class LagConfig:
    q_steps: int = 0

    def __post_init__(self):
        if self.q_steps < 0:
            raise InputError("q_steps must be >= 0")

    @property
    def width(self) -> int:
        return self.q_steps + 1


@dataclass(frozen=True)
class ClassWeights:
    w0: float = 1.0
    w1: float = 1.0

    def __post_init__(self):
        for name in ("w0", "w1"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InputError(f"class weight {name} must be positive and finite, got {v}")

    def scaled(self, k: float) -> ClassWeights:
        return ClassWeights(self.w0 * k, self.w1 * k)


@dataclass(frozen=True, eq=False)
class ModelParams:
    a: np.ndarray  # (q+1, d), row k multiplies x at lag k
    b: np.ndarray  # (q+1,)
    c: float
    lag: LagConfig
    delta_t_steps: int = 1
    feature_names: tuple[str, ...] = ()
    x_mean: np.ndarray | None = None
    x_scale: np.ndarray | None = None

    def __post_init__(self):
        a = np.array(self.a, dtype=np.float64)
        b = np.array(self.b, dtype=np.float64).reshape(-1)
        if a.ndim != 2 or a.shape[0] != self.lag.width or b.shape != (self.lag.width,):
            raise DimensionError(
                f"parameter shapes a={a.shape}, b={b.shape} inconsistent with q={self.lag.q_steps}"
            )
        d = a.shape[1]
        mean = np.zeros(d) if self.x_mean is None else np.array(self.x_mean, dtype=np.float64)
        scale = np.ones(d) if self.x_scale is None else np.array(self.x_scale, dtype=np.float64)
        if mean.shape != (d,) or scale.shape != (d,):
            raise DimensionError("standardization vectors must have one entry per sensor")
        if np.any(scale <= 0):
            raise InputError("standardization scale must be positive")
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(d))
        if len(names) != d:
            raise DimensionError("feature_names must have one entry per sensor")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.isfinite(self.c)):
            raise InputError("model parameters must be finite")
        for name, arr in (("a", a), ("b", b), ("x_mean", mean), ("x_scale", scale)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "feature_names", names)

    @property
    def d(self) -> int:
        return self.a.shape[1]

    @property
    def q(self) -> int:
        return self.lag.q_steps

    @classmethod
    def zeros(cls, lag: LagConfig, d: int, **kwargs) -> ModelParams:
        return cls(np.zeros((lag.width, d)), np.zeros(lag.width), 0.0, lag, **kwargs)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.a.ravel(), self.b, [self.c]])

    def with_vector(self, theta: np.ndarray) -> ModelParams:
        w, d = self.lag.width, self.d
        if theta.shape != (w * d + w + 1,):
            raise DimensionError(f"expected a parameter vector of length {w * d + w + 1}")
        return ModelParams(
            theta[: w * d].reshape(w, d),
            theta[w * d : w * d + w],
            float(theta[-1]),
            self.lag,
            self.delta_t_steps,
            self.feature_names,
            self.x_mean,
            self.x_scale,
        )

    def raw_coefficients(self) -> tuple[np.ndarray, np.ndarray, float]:
        """Equivalent ``(a, b, c)`` acting on unstandardized sensor values."""
        a_raw = self.a / self.x_scale
        return a_raw, self.b.copy(), float(self.c - np.sum(a_raw * self.x_mean))


@dataclass(frozen=True)
class DesignRow:
    x_lags: np.ndarray  # (q+1, d)
    y_lags: np.ndarray  # (q+1,)
    target: int = 0
    origin_step: int = 0


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Lagged regressors for steps ``t = q .. step_count-1`` of a dataset.

    ``x_lags[n, k]`` is ``x[t-k]`` and ``y_lags[n, k]`` is ``y_observed[t-k]``
    where ``t = origin_steps[n]`` (local to the dataset).
    """

    x_lags: np.ndarray  # (n, q+1, d)
    y_lags: np.ndarray  # (n, q+1)
    target: np.ndarray  # (n,)
    origin_steps: np.ndarray
    lag: LagConfig
    feature_names: tuple[str, ...] = ()
    step_offset: int = 0

    def __len__(self) -> int:
        return self.target.shape[0]

    @property
    def d(self) -> int:
        return self.x_lags.shape[2]

    @cached_property
    def x_flat(self) -> np.ndarray:
        return np.ascontiguousarray(self.x_lags, dtype=np.float64).reshape(len(self), -1)

    @cached_property
    def y_flat(self) -> np.ndarray:
        return np.ascontiguousarray(self.y_lags, dtype=np.float64)

    def row(self, i: int) -> DesignRow:
        return DesignRow(
            self.x_lags[i], self.y_lags[i], int(self.target[i]), int(self.origin_steps[i])
        )

    def class_counts(self) -> tuple[int, int]:
        n1 = int(self.target.sum())
        return len(self) - n1, n1


def build_design(dataset: AlignedDataset, lag: LagConfig) -> DesignMatrix:
    q = lag.q_steps
    if dataset.step_count <= q:
        raise InsufficientHistoryError(
            f"dataset has {dataset.step_count} steps, need more than q={q}"
        )
    w = lag.width
    # sliding windows are read-only views; reverse so index k means lag k
    xv = sliding_window_view(dataset.x, w, axis=0)[:, :, ::-1].transpose(0, 2, 1)
    yv = sliding_window_view(dataset.y_observed, w)[:, ::-1]
    return DesignMatrix(
        x_lags=xv,
        y_lags=yv,
        target=dataset.lambda_target[q:],
        origin_steps=np.arange(q, dataset.step_count),
        lag=lag,
        feature_names=dataset.sensor_names,
        step_offset=dataset.step_offset,
    )


def design_from_arrays(
    x: np.ndarray, y: np.ndarray, target: np.ndarray, lag: LagConfig
) -> DesignMatrix:
    """Build a design directly from arrays (no failure-log bookkeeping)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    q, w = lag.q_steps, lag.width
    if x.shape[0] <= q:
        raise InsufficientHistoryError(f"need more than q={q} steps")
    xv = sliding_window_view(x, w, axis=0)[:, :, ::-1].transpose(0, 2, 1)
    yv = sliding_window_view(np.asarray(y, dtype=np.int8), w)[:, ::-1]
    return DesignMatrix(
        xv, yv, np.asarray(target, dtype=np.int8)[q:], np.arange(q, x.shape[0]), lag
    )


def _check_dims(params: ModelParams, q: int, d: int):
    if params.q != q or params.d != d:
        raise DimensionError(
            f"model expects q={params.q}, d={params.d}; design has q={q}, d={d}"
        )


def _effective(params: ModelParams) -> tuple[np.ndarray, float]:
    a_eff = params.a / params.x_scale
    return a_eff.ravel(), params.c - float(np.sum(a_eff * params.x_mean))


def linear_predictor(params: ModelParams, design: DesignMatrix) -> np.ndarray:
    _check_dims(params, design.lag.q_steps, design.d)
    a_eff, offset = _effective(params)
    return design.x_flat @ a_eff + design.y_flat @ params.b + offset


def clamp_probability(p):
    return np.clip(p, EPS, 1.0 - EPS)


def probability(params: ModelParams, row: DesignRow) -> float:
    x_lags = np.asarray(row.x_lags, dtype=np.float64)
    y_lags = np.asarray(row.y_lags, dtype=np.float64)
    if x_lags.shape != params.a.shape or y_lags.shape != params.b.shape:
        raise DimensionError(
            f"row shapes {x_lags.shape}/{y_lags.shape} do not match model {params.a.shape}"
        )
    z = np.sum(params.a * (x_lags - params.x_mean) / params.x_scale) + y_lags @ params.b + params.c
    return float(clamp_probability(expit(z)))


def predict_probs(params: ModelParams, design: DesignMatrix) -> np.ndarray:
    return clamp_probability(expit(linear_predictor(params, design)))


def row_weights(target: np.ndarray, weights: ClassWeights) -> np.ndarray:
    return np.where(target == 1, weights.w1, weights.w0)


def log_likelihood_terms(p: np.ndarray, target: np.ndarray, weights: ClassWeights) -> np.ndarray:
    p = clamp_probability(p)
    lam = target.astype(np.float64)
    return lam * weights.w1 * np.log(p) + (1.0 - lam) * weights.w0 * np.log1p(-p)


def weighted_log_likelihood(
    params: ModelParams,
    design: DesignMatrix,
    weights: ClassWeights = ClassWeights(),
    p: np.ndarray | None = None,
) -> float:
    """Weighted Bernoulli log-likelihood; ``p`` may carry precomputed probabilities."""
    if len(design) == 0:
        raise InputError("design is empty")
    if p is None:
        p = predict_probs(params, design)
    return float(np.sum(log_likelihood_terms(p, design.target, weights)))


def gradient(
    params: ModelParams,
    design: DesignMatrix,
    weights: ClassWeights = ClassWeights(),
    p: np.ndarray | None = None,
) -> np.ndarray:
    """Gradient of :func:`weighted_log_likelihood` w.r.t. ``params.to_vector()``."""
    if p is None:
        p = predict_probs(params, design)
    lam = design.target.astype(np.float64)
    resid = lam * weights.w1 * (1.0 - p) - (1.0 - lam) * weights.w0 * p
    total = resid.sum()
    w, d = design.lag.width, design.d
    g_a = (design.x_flat.T @ resid).reshape(w, d)
    g_a = (g_a - total * params.x_mean) / params.x_scale
    return np.concatenate([g_a.ravel(), design.y_flat.T @ resid, [total]])


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    scale: np.ndarray = field(default_factory=lambda: np.ones(0))

    @classmethod
    def fit(cls, design: DesignMatrix) -> Standardizer:
        current = np.asarray(design.x_lags[:, 0, :], dtype=np.float64)
        mean = current.mean(axis=0)
        scale = current.std(axis=0)
        scale[~(scale > 0)] = 1.0
        return cls(mean, scale)

    @classmethod
    def identity(cls, d: int) -> Standardizer:
        return cls(np.zeros(d), np.ones(d))
