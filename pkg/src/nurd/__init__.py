"""Online straggler prediction from finished and running tasks.

Latency is regressed on finished tasks only, then inflated for running tasks
that a propensity model finds unlike the finished ones. Relaunch schedulers
turn the resulting flags into job completion time.
"""

from .kernels import BACKEND
from .metrics import ConfusionCounts, Rates, aggregate, f1_curve, final_confusion, rates
from .models import GbtHyperparams, estimate_ps, fit_gbt, fit_logistic, predict_latency
from .online import (
    CalibrationParams,
    CheckpointState,
    NurdConfig,
    PredictionLog,
    adjust,
    calibration_term,
    compute_centroids,
    latency_indicator,
    run_online,
    straggler_truth,
    weight,
)
from .scheduler import (
    MachinePool,
    ScheduleOutcome,
    sample_relaunch_latency,
    schedule_limited,
    schedule_unlimited,
)
from .trace import (
    JobTrace,
    SyntheticConfig,
    TaskRecord,
    adapt_alibaba,
    adapt_google,
    filter_jobs,
    generate_synthetic,
    parse_canonical,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CalibrationParams",
    "CheckpointState",
    "ConfusionCounts",
    "GbtHyperparams",
    "JobTrace",
    "MachinePool",
    "NurdConfig",
    "PredictionLog",
    "Rates",
    "ScheduleOutcome",
    "SyntheticConfig",
    "TaskRecord",
    "adapt_alibaba",
    "adapt_google",
    "adjust",
    "aggregate",
    "calibration_term",
    "compute_centroids",
    "estimate_ps",
    "f1_curve",
    "filter_jobs",
    "final_confusion",
    "fit_gbt",
    "fit_logistic",
    "generate_synthetic",
    "latency_indicator",
    "parse_canonical",
    "predict_latency",
    "rates",
    "run_online",
    "sample_relaunch_latency",
    "schedule_limited",
    "schedule_unlimited",
    "straggler_truth",
    "weight",
]
