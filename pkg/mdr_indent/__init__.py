"""Indentation contact models, synthetic experiments and elasticity estimation with unknown surface height."""

from .contact import IndenterProfile, Material, force
from .errors import (
    ConfigError,
    DatasetFormatError,
    FitFailedError,
    InsufficientDataError,
    MdrIndentError,
    ModelDomainError,
    NoSurfaceFoundError,
)
from .estimator import EstimationResult, FitModel, estimate
from .recovery import RecoveryParams, eval_recovery, fit_recovery
from .simulator import Dataset, ExperimentConfig, IndentationRecord, Specimen, simulate_indentation

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Dataset",
    "DatasetFormatError",
    "EstimationResult",
    "ExperimentConfig",
    "FitFailedError",
    "FitModel",
    "IndentationRecord",
    "IndenterProfile",
    "InsufficientDataError",
    "Material",
    "MdrIndentError",
    "ModelDomainError",
    "NoSurfaceFoundError",
    "RecoveryParams",
    "Specimen",
    "estimate",
    "eval_recovery",
    "fit_recovery",
    "force",
    "simulate_indentation",
]
