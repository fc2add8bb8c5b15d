from .engine import (
    HookTerm,
    cov_closed_form,
    cov_eigenvalues,
    hook_terms,
    invcov_diag_exact,
    lambda_exact,
    mu_exact,
    schur_hook,
    stiefel_trace_f,
)
from .logpoly import LogPoly, integrate_op

__all__ = [
    "HookTerm",
    "LogPoly",
    "cov_closed_form",
    "cov_eigenvalues",
    "hook_terms",
    "integrate_op",
    "invcov_diag_exact",
    "lambda_exact",
    "mu_exact",
    "schur_hook",
    "stiefel_trace_f",
]
