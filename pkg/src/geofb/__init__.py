"""Forward-backward splitting with geometric rate certificates."""

from .linops import DenseOperator, DiagonalOperator, SupportSet, gram_norm
from .funcs import (
    CompositeProblem,
    ConfigurationError,
    DomainError,
    fb_map,
    make_counterexample_neg,
    make_lasso,
    make_l1,
    make_least_squares,
    make_norm_pow,
    make_quadratic,
    min_norm_subgrad,
)
from .solver import SolveConfig, Trace, run_fb, run_landweber
from .geometry import GeometryCertificate
from .rates import RatePrediction, certify_trace, predict

__version__ = "0.1.0"

__all__ = [
    "DenseOperator", "DiagonalOperator", "SupportSet", "gram_norm",
    "CompositeProblem", "ConfigurationError", "DomainError", "fb_map",
    "make_counterexample_neg", "make_lasso", "make_l1", "make_least_squares",
    "make_norm_pow", "make_quadratic", "min_norm_subgrad",
    "SolveConfig", "Trace", "run_fb", "run_landweber",
    "GeometryCertificate", "RatePrediction", "certify_trace", "predict",
]
