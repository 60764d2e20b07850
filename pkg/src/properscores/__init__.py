"""Proper scoring rules with local scale invariance and robustness diagnostics."""

__version__ = "0.1.0"

from .distributions import Ensemble, Gaussian, Laplace, LocationScale, NegBin
from .kernels import KernelSpec, MCBudget, expectations
from .numerics import RngStream
from .scores import (
    HFunction,
    Rule,
    ScoreReport,
    ScoreValue,
    average_score,
    crps,
    dss,
    expected_gaussian_score,
    generalized_kernel_score,
    kernel_score,
    log_score,
    parse_rule,
    robust_scores,
    scrps,
    transform_score,
)

__all__ = [
    "Ensemble", "Gaussian", "Laplace", "LocationScale", "NegBin",
    "KernelSpec", "MCBudget", "expectations", "RngStream",
    "HFunction", "Rule", "ScoreReport", "ScoreValue", "average_score", "crps", "dss",
    "expected_gaussian_score", "generalized_kernel_score", "kernel_score", "log_score",
    "parse_rule", "robust_scores", "scrps", "transform_score",
]
