"""Exception hierarchy shared by the numerical modules and the CLI."""

from __future__ import annotations

from typing import Any


class WishartError(Exception):
    """Base class for every error raised by this package."""

    def to_dict(self) -> dict[str, Any]:
        """Machine-readable form written to stderr by the CLI."""
        return {"error": type(self).__name__, "message": str(self)}


class SpectrumError(WishartError, ValueError):
    """Invalid ensemble parameters."""


class NonPositiveEigenvalue(SpectrumError):
    pass


class DegenerateSpectrum(SpectrumError):
    pass


class DimensionError(SpectrumError):
    pass


class RealCaseTooSmallN(SpectrumError):
    pass


class EnsembleMismatch(SpectrumError):
    """Operation requested for the wrong Dyson index."""


class QuadratureNonConvergence(WishartError, ArithmeticError):
    """Adaptive quadrature ran out of refinement levels.

    The best estimate reached so far is kept on ``result``.
    """

    def __init__(self, message: str, result: Any = None):
        super().__init__(message)
        self.result = result


class JacobiNonConvergence(WishartError, ArithmeticError):
    pass


class ConditioningWarning(UserWarning):
    """Residue and determinant forms of the complex density disagree."""
