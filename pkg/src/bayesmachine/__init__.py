"""Cycle-accurate simulator of a memristor-based stochastic Bayesian machine."""

from __future__ import annotations

from .errors import (
    BayesMachineError,
    BoundsError,
    ConfigurationError,
    DataFormatError,
    InvalidStateError,
    ProbabilityRangeError,
)
from .machine import (
    Decision,
    MachineConfig,
    MachineImage,
    Observation,
    decide_first_one,
    decide_max_count,
    run_inference,
)
from .oracle import LikelihoodTable, compile_table, exact_posterior
from .trace import InferenceTrace

__version__ = "0.1.0"

__all__ = [
    "BayesMachineError",
    "BoundsError",
    "ConfigurationError",
    "DataFormatError",
    "Decision",
    "InferenceTrace",
    "InvalidStateError",
    "LikelihoodTable",
    "MachineConfig",
    "MachineImage",
    "Observation",
    "ProbabilityRangeError",
    "compile_table",
    "decide_first_one",
    "decide_max_count",
    "exact_posterior",
    "run_inference",
]
