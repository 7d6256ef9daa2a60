"""CSV ingestion, model persistence and report/trace writers.

Sensor files have a ``timestamp`` column followed by one column per sensor.
Timestamps are either integer step indices (consecutive) or ISO-8601 instants at
a fixed spacing. Failure files have ``start,end`` columns in the same convention,
inclusive on both ends.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import CsvFormatError, InputError, ModelFormatError, UnsupportedVersionError
from .evaluation import MetricsReport
from .inference import DecisionConfig, PredictionTrace, SmoothingConfig
from .model import ClassWeights, LagConfig, ModelParams
from .timeseries import FailureLog, SensorSeries

MODEL_FORMAT = "rarecast-model"
MODEL_FORMAT_VERSION = 1
FILL_POLICIES = ("error", "forward")


def fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.6g}"


# ---------------------------------------------------------------------------
# sensors and failures


def _parse_timestamps(raw: pd.Series) -> tuple[np.ndarray, bool]:
    """Return timestamps as int64 (steps, or nanoseconds for ISO) and whether they are ISO."""
    text = raw.astype(str).str.strip()
    as_int = pd.to_numeric(text, errors="coerce")
    if as_int.notna().all() and np.all(np.mod(as_int.to_numpy(dtype=float), 1) == 0):
        return as_int.to_numpy(dtype=np.int64), False
    try:
        parsed = pd.to_datetime(text, utc=True, format="ISO8601")
    except (ValueError, TypeError) as exc:
        raise CsvFormatError(f"timestamps are neither integer steps nor ISO-8601: {exc}") from None
    return parsed.to_numpy(dtype="datetime64[ns]").astype(np.int64), True


@dataclass(frozen=True)
class TimeAxis:
    """Mapping between file timestamps and step indices."""

    start: int  # step index or epoch nanoseconds
    spacing: int  # 1 for step indices, nanoseconds for ISO
    iso: bool
    length: int

    @property
    def granularity_minutes(self) -> float:
        return self.spacing / 60e9 if self.iso else 1.0

    @property
    def start_time(self) -> datetime | int:
        if self.iso:
            return datetime.fromtimestamp(self.start / 1e9, tz=timezone.utc)
        return self.start

    def to_step(self, stamp: int, what: str) -> int:
        offset = stamp - self.start
        if offset % self.spacing:
            raise CsvFormatError(f"{what} does not fall on the sensor time grid")
        return int(offset // self.spacing)


def _check_axis(stamps: np.ndarray, iso: bool) -> TimeAxis:
    if len(stamps) == 0:
        raise CsvFormatError("sensor file has no data rows")
    if len(stamps) == 1:
        return TimeAxis(int(stamps[0]), 60_000_000_000 if iso else 1, iso, 1)
    diffs = np.diff(stamps)
    spacing = 1 if not iso else int(diffs[0])
    for i, dd in enumerate(diffs):
        line = i + 3  # header is line 1, first data row line 2
        if dd <= 0:
            raise CsvFormatError(f"line {line}: timestamp is not after the previous row")
        if dd > spacing:
            raise CsvFormatError(f"line {line}: gap in timestamps")
        if dd != spacing:
            raise CsvFormatError(f"line {line}: irregular timestamp spacing")
    return TimeAxis(int(stamps[0]), spacing, iso, len(stamps))


def _to_float(column: pd.Series) -> np.ndarray:
    """Exact string-to-float conversion; unparseable cells become NaN."""
    text = column.str.strip()
    try:
        return text.astype(np.float64).to_numpy()
    except ValueError:
        # slow path only when some cell is not a number
        return np.array([_cell(v) for v in text], dtype=np.float64)


def _cell(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return math.nan


def read_sensor_csv(path, fill_policy: str = "error") -> tuple[list[SensorSeries], TimeAxis]:
    if fill_policy not in FILL_POLICIES:
        raise InputError(f"fill policy must be one of {FILL_POLICIES}")
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError:
        raise
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise CsvFormatError(f"{path}: cannot parse CSV ({exc})") from None
    # pandas silently renames duplicate headers, so check the raw header line
    with open(path, newline="") as fh:
        cols = [c.strip() for c in next(csv.reader(fh), [])]
    if len(cols) < 2 or cols[0].lower() != "timestamp":
        raise CsvFormatError(f"{path}: header must be 'timestamp,<sensor_1>,...'")
    if len(set(cols)) != len(cols):
        raise CsvFormatError(f"{path}: duplicate column names in header")
    frame.columns = cols
    stamps, iso = _parse_timestamps(frame["timestamp"])
    axis = _check_axis(stamps, iso)

    series = []
    for name in cols[1:]:
        values = _to_float(frame[name])
        bad = ~np.isfinite(values)
        if bad.any():
            first = int(np.flatnonzero(bad)[0])
            if fill_policy == "error":
                raise CsvFormatError(
                    f"{path}: line {first + 2}, column {name!r}: missing or non-numeric value"
                )
            if first == 0:
                raise CsvFormatError(
                    f"{path}: line 2, column {name!r}: first row is missing, nothing to fill from"
                )
            values = pd.Series(np.where(bad, np.nan, values)).ffill().to_numpy()
        series.append(
            SensorSeries(name, values, start_time=axis.start_time, granularity=axis.granularity_minutes)
        )
    return series, axis


def load_sensors(path, fill_policy: str = "error") -> list[SensorSeries]:
    return read_sensor_csv(path, fill_policy)[0]


def load_failures(path, axis: TimeAxis) -> FailureLog:
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise CsvFormatError(f"{path}: cannot parse CSV ({exc})") from None
    except pd.errors.EmptyDataError:
        raise CsvFormatError(f"{path}: empty file, expected header 'start,end'") from None
    cols = [c.strip().lower() for c in frame.columns]
    if cols != ["start", "end"]:
        raise CsvFormatError(f"{path}: header must be 'start,end'")
    frame.columns = cols
    if frame.empty:
        return FailureLog(())
    episodes = []
    for col in ("start", "end"):
        stamps, iso = _parse_timestamps(frame[col])
        if iso != axis.iso:
            raise CsvFormatError(f"{path}: {col} timestamps use a different convention than the sensors")
        episodes.append([axis.to_step(int(s), f"{path}: {col} value {v!r}") for s, v in zip(stamps, frame[col])])
    pairs = tuple(zip(*episodes))
    for i, (s, e) in enumerate(pairs):
        if s < 0 or e >= axis.length:
            raise CsvFormatError(f"{path}: line {i + 2}: episode outside the sensor time range")
    try:
        return FailureLog(pairs)
    except InputError as exc:
        raise CsvFormatError(f"{path}: {exc}") from None


def write_sensor_csv(path, sensors: list[SensorSeries]) -> None:
    n = len(sensors[0])
    start = sensors[0].start_time if isinstance(sensors[0].start_time, int) else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp"] + [s.name for s in sensors])
        cols = [s.values for s in sensors]
        for t in range(n):
            w.writerow([start + t] + [repr(float(c[t])) for c in cols])


def write_failure_csv(path, failures: FailureLog, start: int = 0) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["start", "end"])
        for s, e in failures.episodes:
            w.writerow([start + s, start + e])


# ---------------------------------------------------------------------------
# model file


@dataclass
class SavedModel:
    params: ModelParams
    weights: ClassWeights
    smoothing: SmoothingConfig
    decision: DecisionConfig
    use_raw: bool = False
    add_gc: bool = False
    train_fraction: float = 0.8
    training: dict | None = None


def save_model(path, model: SavedModel) -> None:
    p = model.params
    doc = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "delta_t_steps": p.delta_t_steps,
        "q_steps": p.q,
        "feature_names": list(p.feature_names),
        "standardization": {"mean": p.x_mean.tolist(), "scale": p.x_scale.tolist()},
        "a": p.a.tolist(),
        "b": p.b.tolist(),
        "c": p.c,
        "weights": {"w0": float(model.weights.w0), "w1": float(model.weights.w1)},
        "smoothing_L": model.smoothing.L,
        "threshold": model.decision.threshold,
        "use_raw": model.use_raw,
        "add_gc": model.add_gc,
        "train_fraction": model.train_fraction,
        "training": model.training or {},
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def _field(doc: dict, name: str, kind):
    if name not in doc:
        raise ModelFormatError(f"model file is missing field {name!r}")
    value = doc[name]
    ok = {
        "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
        "float": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v),
        "bool": lambda v: isinstance(v, bool),
        "list": lambda v: isinstance(v, list),
        "dict": lambda v: isinstance(v, dict),
    }[kind](value)
    if not ok:
        raise ModelFormatError(f"model field {name!r} is malformed (expected {kind})")
    return value


def load_model(path) -> SavedModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not a valid model document ({exc})") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"{path}: field 'format' must be {MODEL_FORMAT!r}")
    version = _field(doc, "format_version", "int")
    if version != MODEL_FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"{path}: unsupported model format version {version} (this build reads {MODEL_FORMAT_VERSION})"
        )
    q = _field(doc, "q_steps", "int")
    std = _field(doc, "standardization", "dict")
    weights = _field(doc, "weights", "dict")
    try:
        lag = LagConfig(q)
        params = ModelParams(
            a=np.array(_field(doc, "a", "list"), dtype=np.float64),
            b=np.array(_field(doc, "b", "list"), dtype=np.float64),
            c=_field(doc, "c", "float"),
            lag=lag,
            delta_t_steps=_field(doc, "delta_t_steps", "int"),
            feature_names=tuple(_field(doc, "feature_names", "list")),
            x_mean=np.array(_field(std, "mean", "list"), dtype=np.float64),
            x_scale=np.array(_field(std, "scale", "list"), dtype=np.float64),
        )
        return SavedModel(
            params=params,
            weights=ClassWeights(_field(weights, "w0", "float"), _field(weights, "w1", "float")),
            smoothing=SmoothingConfig(_field(doc, "smoothing_L", "int")),
            decision=DecisionConfig(_field(doc, "threshold", "float")),
            use_raw=_field(doc, "use_raw", "bool"),
            add_gc=_field(doc, "add_gc", "bool"),
            train_fraction=_field(doc, "train_fraction", "float"),
            training=_field(doc, "training", "dict"),
        )
    except ModelFormatError:
        raise
    except (InputError, ValueError, TypeError) as exc:
        raise ModelFormatError(f"{path}: inconsistent model parameters ({exc})") from None


# ---------------------------------------------------------------------------
# reports and traces


def format_report(report: MetricsReport, header: dict | None = None) -> str:
    lines = [f"{k}: {v}" for k, v in (header or {}).items()]
    for name in MetricsReport.FIELDS:
        lines.append(f"{name}: {fmt(getattr(report, name))}")
    for name, value in zip(("tp", "fp", "tn", "fn"), report.confusion):
        lines.append(f"{name}: {value}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if ":" in line:
            key, value = line.split(":", 1)
            out[key.strip()] = value.strip()
    return out


def write_trace(path, trace: PredictionTrace, step_offset: int = 0) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["origin_step", "raw_prob", "smoothed_prob", "decision"])
        for t, r, s, d in zip(trace.origin_steps, trace.raw_probs, trace.smoothed_probs, trace.decisions):
            w.writerow([int(t) + step_offset, fmt(r), fmt(s), int(d)])
