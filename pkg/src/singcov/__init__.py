"""Haar-ensemble estimators for singular sample covariance matrices."""

from ._kernels import BACKEND
from .asymptotic import lambda_asymptotic, mu_asymptotic, solve_asymptotic
from .diagonal import DiagonalEstimate
from .errors import (
    DegenerateError,
    EnsembleError,
    EvaluationError,
    InputError,
    RankError,
    SingcovError,
    SizeError,
    StructureError,
)
from .estimator import EstimatorConfig, cov, invcov, invcov_estimate, sigma_estimate_via_invcov
from .exact import invcov_diag_exact, lambda_exact, mu_exact, stiefel_trace_f
from .haar import RngStream, mc_cov, mc_fcov, mc_invcov, sample_haar
from .spectral import Spectrum, eig_hermitian, sample_covariance

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DegenerateError",
    "DiagonalEstimate",
    "EnsembleError",
    "EstimatorConfig",
    "EvaluationError",
    "InputError",
    "RankError",
    "RngStream",
    "SingcovError",
    "SizeError",
    "Spectrum",
    "StructureError",
    "cov",
    "eig_hermitian",
    "invcov",
    "invcov_diag_exact",
    "invcov_estimate",
    "lambda_asymptotic",
    "lambda_exact",
    "mc_cov",
    "mc_fcov",
    "mc_invcov",
    "mu_asymptotic",
    "mu_exact",
    "sample_covariance",
    "sample_haar",
    "sigma_estimate_via_invcov",
    "solve_asymptotic",
    "stiefel_trace_f",
    "__version__",
]
