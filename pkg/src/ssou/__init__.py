"""Skewed stable Ornstein-Uhlenbeck process: exact simulation and inference."""

from .stable import StableParams, DensityEval, char_fn, pdf, cdf, sample, moment_m1, moment_m2
from .ou import (
    ModelParams,
    SamplingScheme,
    ObservedPath,
    TransitionLaw,
    eta,
    xi_h,
    transition,
    simulate_path,
    euler_residuals,
    exact_residuals,
    write_path_csv,
    read_path_csv,
)
from .likelihood import ObjectiveEval, ScoreKernels, quasi_loglik, exact_loglik, score_kernels
from .moments import MomentConfig, MomentEstimate, estimate_alpha_sigma, estimate_beta
from .inference import (
    RateMatrix,
    InferenceReport,
    rate_matrix,
    observed_information,
    studentize,
    normalize_estimates,
    limit_information_mc,
)
from .optim import OptimizerConfig, OptResult, maximize
from .pipeline import (
    FitResult,
    fit,
    fit_timescale,
    TimescaleResult,
    timescale_transform,
    timescale_back,
)
from .mc import MCConfig, MCReport, run_mc, replication_rng

__all__ = [
    "StableParams", "DensityEval", "char_fn", "pdf", "cdf", "sample",
    "moment_m1", "moment_m2",
    "ModelParams", "SamplingScheme", "ObservedPath", "TransitionLaw",
    "eta", "xi_h", "transition", "simulate_path",
    "euler_residuals", "exact_residuals", "write_path_csv", "read_path_csv",
    "ObjectiveEval", "ScoreKernels", "quasi_loglik", "exact_loglik", "score_kernels",
    "MomentConfig", "MomentEstimate", "estimate_alpha_sigma", "estimate_beta",
    "RateMatrix", "InferenceReport", "rate_matrix", "observed_information",
    "studentize", "normalize_estimates", "limit_information_mc",
    "OptimizerConfig", "OptResult", "maximize",
    "FitResult", "fit", "fit_timescale", "TimescaleResult",
    "timescale_transform", "timescale_back",
    "MCConfig", "MCReport", "run_mc", "replication_rng",
]
