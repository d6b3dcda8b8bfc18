"""Experiment orchestration."""

from .compare import FreeDeviation, compare_to_free
from .config import DEFAULT_PARAMS, ExperimentConfig
from .runner import (
    METRICS,
    RunFailure,
    RunRecord,
    load_record,
    reference_spec,
    run_experiment,
    run_trial,
    seed_for_trial,
    summarize,
)

__all__ = [
    "DEFAULT_PARAMS",
    "ExperimentConfig",
    "FreeDeviation",
    "METRICS",
    "RunFailure",
    "RunRecord",
    "compare_to_free",
    "load_record",
    "reference_spec",
    "run_experiment",
    "run_trial",
    "seed_for_trial",
    "summarize",
]
