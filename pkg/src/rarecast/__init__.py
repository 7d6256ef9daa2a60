"""Rare failure prediction with weighted autologistic regression."""

from .errors import (
    AlignmentError,
    DataError,
    DegenerateClassError,
    DimensionError,
    DivergenceError,
    InfeasibleSplitError,
    InputError,
    InsufficientHistoryError,
    RarecastError,
)
from .evaluation import (
    MetricsReport,
    compute_metrics,
    select_q_fffs,
    split_by_failures,
    sweep_threshold,
)
from .inference import DecisionConfig, PredictionTrace, SmoothingConfig, decide, predict_trace, smooth
from .model import (
    ClassWeights,
    DesignMatrix,
    LagConfig,
    ModelParams,
    build_design,
    gradient,
    predict_probs,
    probability,
    weighted_log_likelihood,
)
from .pipeline import evaluate_model, prepare_dataset, train_model
from .synth import SynthConfig, generate
from .timeseries import (
    AlignedDataset,
    FailureLog,
    SensorSeries,
    align_and_label,
    augment_g_c,
    correlation_screen,
)
from .trainer import ClassErrors, FitResult, TrainConfig, adaptive_weight_update, fit, simple_weights

__version__ = "0.1.0"
