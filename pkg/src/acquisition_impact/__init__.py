"""Incremental subscriber impact of content launches.

Estimate how many new subscribers each launch brought in, attribute those
signups to individual subscribers, and check the estimates against
simulated ground truth.
"""

from .baseline import BaselineModel, TrainingReport, fit_baseline, predict_p
from .domain import (
    CohortSlice,
    ConsumptionRecord,
    ContentLaunch,
    Dataset,
    LabeledRow,
    PromotionRecord,
    SignupRecord,
    build_cohorts,
    consumption_label,
    labeled_rows,
    load_dataset,
)
from .errors import (
    AIMError,
    DataError,
    EmptyControlError,
    EstimationError,
    InfeasibleError,
    InstanceTooLargeError,
    InsufficientDataError,
    IntegrityError,
    ParseError,
    UnstableDenominatorError,
)
from .estimator import (
    DailyEstimate,
    LaunchImpactSeries,
    estimate_all,
    estimate_incremental,
    estimate_launch_impact,
    fit_pooled_baseline,
    incremental_propensity,
)

__version__ = "0.1.0"

__all__ = [
    "AIMError",
    "BaselineModel",
    "CohortSlice",
    "ConsumptionRecord",
    "ContentLaunch",
    "DailyEstimate",
    "DataError",
    "Dataset",
    "EmptyControlError",
    "EstimationError",
    "InfeasibleError",
    "InstanceTooLargeError",
    "InsufficientDataError",
    "IntegrityError",
    "LabeledRow",
    "LaunchImpactSeries",
    "ParseError",
    "PromotionRecord",
    "SignupRecord",
    "TrainingReport",
    "UnstableDenominatorError",
    "build_cohorts",
    "consumption_label",
    "estimate_all",
    "estimate_incremental",
    "estimate_launch_impact",
    "fit_baseline",
    "fit_pooled_baseline",
    "incremental_propensity",
    "labeled_rows",
    "load_dataset",
    "predict_p",
]
