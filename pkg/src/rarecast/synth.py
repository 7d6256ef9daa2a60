"""Seeded synthetic equipment data with planted failures.

Every sensor is a slowly drifting mean-reverting AR(1) baseline (innovations of
std ``(1 - ar_coefficient) * noise_std``) plus white measurement noise of std
``noise_std``. Each failure is preceded by a precursor on sensor 0: a step of
``precursor_onset * A`` when the window opens, then a linear ramp climbing a
further ``A = precursor_strength * noise_std`` until the failure starts. The
failure holds the final level. ``precursor_onset=0`` gives a pure ramp from zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .timeseries import FailureLog, SensorSeries

PLACEMENTS = ("uniform", "renewal")


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    duration_steps: int = 10080
    sensor_count: int = 1
    failure_count: int = 30
    failure_duration_steps: int = 5
    precursor_window_steps: int = 60
    precursor_strength: float = 3.0
    noise_std: float = 1.0
    ar_coefficient: float = 0.9
    # "renewal" draws gamma inter-failure gaps (hazard rising with time since the last failure)
    placement: str = "uniform"
    # step (in units of the ramp amplitude) applied when the precursor window opens
    precursor_onset: float = 1.0
    renewal_shape: float = 16.0

    def __post_init__(self):
        for name in ("duration_steps", "sensor_count", "failure_count", "failure_duration_steps"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be >= 1")
        if self.precursor_window_steps < 0:
            raise InputError("precursor_window_steps must be >= 0")
        if not 0 <= self.ar_coefficient < 1:
            raise InputError("ar_coefficient must lie in [0, 1)")
        if self.noise_std < 0 or self.precursor_strength < 0:
            raise InputError("noise_std and precursor_strength must be non-negative")
        if self.placement not in PLACEMENTS:
            raise InputError(f"placement must be one of {PLACEMENTS}")
        if self.precursor_onset < 0:
            raise InputError("precursor_onset must be non-negative")
        if self.renewal_shape <= 0:
            raise InputError("renewal_shape must be positive")

    @property
    def min_spacing(self) -> int:
        return 2 * (self.precursor_window_steps + self.failure_duration_steps)


def _place_uniform(rng: np.random.Generator, cfg: SynthConfig) -> np.ndarray:
    lo = cfg.precursor_window_steps
    hi = cfg.duration_steps - cfg.failure_duration_steps  # last admissible start
    slack = hi - lo - (cfg.failure_count - 1) * cfg.min_spacing
    if slack < 0:
        raise InputError(
            f"cannot pack {cfg.failure_count} failures with spacing {cfg.min_spacing} "
            f"into {cfg.duration_steps} steps"
        )
    offsets = np.sort(rng.integers(0, slack + 1, size=cfg.failure_count))
    return lo + offsets + np.arange(cfg.failure_count) * cfg.min_spacing


def _place_renewal(rng: np.random.Generator, cfg: SynthConfig) -> np.ndarray:
    lo = cfg.precursor_window_steps
    hi = cfg.duration_steps - cfg.failure_duration_steps
    n = cfg.failure_count
    slack = hi - lo - (n - 1) * cfg.min_spacing
    if slack < 0:
        raise InputError(
            f"cannot pack {n} failures with spacing {cfg.min_spacing} into {cfg.duration_steps} steps"
        )
    # n gamma gaps share the slack; the leading gap is measured from the series start
    gaps = rng.gamma(cfg.renewal_shape, 1.0, size=n + 1)
    gaps = gaps / gaps.sum() * slack
    extra = np.floor(np.cumsum(gaps[:n])).astype(np.int64)
    return lo + extra + np.arange(n) * cfg.min_spacing


def generate(cfg: SynthConfig) -> tuple[list[SensorSeries], FailureLog]:
    rng = np.random.default_rng(cfg.seed)
    place = _place_uniform if cfg.placement == "uniform" else _place_renewal
    starts = place(rng, cfg)
    ends = starts + cfg.failure_duration_steps - 1

    n, phi = cfg.duration_steps, cfg.ar_coefficient
    innov = rng.standard_normal((n, cfg.sensor_count)) * cfg.noise_std * (1 - phi)
    x = np.empty_like(innov)
    x[0] = innov[0]
    for t in range(1, n):
        x[t] = phi * x[t - 1] + innov[t]
    x += rng.standard_normal((n, cfg.sensor_count)) * cfg.noise_std

    amp = cfg.precursor_strength * cfg.noise_std
    w = cfg.precursor_window_steps
    ramp = amp * (cfg.precursor_onset + np.arange(1, w + 1) / w)
    for s, e in zip(starts, ends):
        x[s - w : s, 0] += ramp
        x[s : e + 1, 0] += amp * (1 + cfg.precursor_onset)

    sensors = [
        SensorSeries(f"sensor_{j}", x[:, j], start_time=0, granularity=1.0)
        for j in range(cfg.sensor_count)
    ]
    return sensors, FailureLog(tuple(zip(starts.tolist(), ends.tolist())))
