"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`SingcovError`.
Input-type errors also derive from :class:`ValueError` so callers that only
catch the builtin keep working.
"""

from __future__ import annotations


class SingcovError(Exception):
    """Base class for package errors."""


class InputError(SingcovError, ValueError):
    """Malformed or out-of-range argument."""


class StructureError(InputError):
    """Matrix does not have the required structure (shape, symmetry, finiteness)."""


class RankError(InputError):
    """Requested reduced dimension exceeds the available rank."""


class SizeError(InputError):
    """Problem too large for the requested algorithm."""


class DegenerateError(SingcovError, ArithmeticError):
    """The requested quantity does not exist (for example mu when L equals the rank)."""


class EnsembleError(SingcovError, ArithmeticError):
    """A Monte Carlo draw produced a singular reduced matrix."""


class EvaluationError(SingcovError, ArithmeticError):
    """A function could not be evaluated on the required domain."""
