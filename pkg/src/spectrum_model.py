"""Domain types shared by the density, Monte-Carlo and CLI modules."""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.special import gammaln

from src.config import DEGENERACY_TOL, ERR_FLOOR
from src.errors import (
    DegenerateSpectrum,
    DimensionError,
    EnsembleMismatch,
    NonPositiveEigenvalue,
    RealCaseTooSmallN,
    SpectrumError,
)


@dataclass(frozen=True)
class EmpiricalSpectrum:
    """Correlation eigenvalues Λ₁ < … < Λ_p with the ensemble parameters.

    Build instances through ``validate_spectrum``; the constructor does not sort or check.
    """

    beta: int
    n: int
    lambdas: tuple[float, ...]

    @property
    def p(self) -> int:
        return len(self.lambdas)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.lambdas, dtype=float)

    @property
    def mean_eigenvalue(self) -> float:
        """Expected mean eigenvalue of WW†, (n/p)·ΣΛ_j."""
        return self.n * math.fsum(self.lambdas) / self.p

    def require_real_density(self) -> EmpiricalSpectrum:
        """Check the extra precondition of the real-case density, n > p + 3."""
        if self.beta != 1:
            raise EnsembleMismatch(f"real-case density requested for beta={self.beta}")
        if self.n <= self.p + 3:
            raise RealCaseTooSmallN(
                f"real-case density needs n > p + 3, got n={self.n}, p={self.p}"
            )
        return self

    def scaled(self, factor: float) -> EmpiricalSpectrum:
        return validate_spectrum(self.beta, self.n, [factor * lam for lam in self.lambdas])

    def to_dict(self) -> dict[str, Any]:
        """Spectrum JSON document."""
        return {"beta": self.beta, "n": self.n, "lambda": list(self.lambdas)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> EmpiricalSpectrum:
        if not isinstance(data, dict):
            raise SpectrumError(f"spectrum document must be an object, got {type(data).__name__}")
        missing = [key for key in ("beta", "n", "lambda") if key not in data]
        if missing:
            raise SpectrumError(f"spectrum document missing keys: {', '.join(missing)}")
        return validate_spectrum(data["beta"], data["n"], data["lambda"])


@dataclass(frozen=True)
class DensityCurve:
    """Sampled density S_β on a grid with per-point absolute error estimates."""

    grid: tuple[float, ...]
    values: tuple[float, ...]
    errors: tuple[float, ...]

    @classmethod
    def from_points(cls, grid, values, errors) -> DensityCurve:
        """Apply the support and round-off rules before freezing the curve."""
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float).copy()
        errors = np.abs(np.asarray(errors, dtype=float)).copy()

        # tiny negative values are quadrature round-off
        clamp = (values < 0) & (values >= -ERR_FLOOR)
        errors[clamp] = np.maximum(errors[clamp], -values[clamp])
        values[clamp] = 0.0
        values[grid < 0] = 0.0
        errors[grid < 0] = 0.0
        return cls(tuple(grid.tolist()), tuple(values.tolist()), tuple(errors.tolist()))

    def __len__(self) -> int:
        return len(self.grid)


@dataclass(frozen=True)
class ComplexShift:
    """The pair x ∓ iε at which the generating function is evaluated."""

    x: float
    eps: float = field(default=1e-2)

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")

    @property
    def below(self) -> complex:
        return complex(self.x, -self.eps)

    @property
    def above(self) -> complex:
        return complex(self.x, self.eps)


def _is_number(value: Any) -> bool:
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


def validate_spectrum(
    beta: int, n: int, raw: list[float], require_real_density: bool = False
) -> EmpiricalSpectrum:
    """Validate ensemble parameters and return the sorted spectrum.

    Args:
        beta: Dyson index, 1 (real) or 2 (complex)
        n: Time-series length
        raw: Unsorted positive eigenvalues
        require_real_density: Also enforce n > p + 3

    Returns:
        EmpiricalSpectrum with ascending lambdas
    """
    if isinstance(beta, bool) or beta not in (1, 2):
        raise SpectrumError(f"beta must be 1 or 2, got {beta}")
    if not _is_number(n) or not math.isfinite(n) or int(n) != n or n < 1:
        raise DimensionError(f"n must be a positive integer, got {n}")
    n = int(n)

    if not isinstance(raw, (list, tuple, np.ndarray)):
        raise SpectrumError(f"eigenvalues must be a list of numbers, got {type(raw).__name__}")
    if not all(_is_number(v) for v in raw):
        raise SpectrumError(f"eigenvalues must be numbers, got {list(raw)}")
    values = [float(v) for v in raw]
    if not values:
        raise DimensionError("spectrum must contain at least one eigenvalue")
    bad = [v for v in values if not (math.isfinite(v) and v > 0)]
    if bad:
        raise NonPositiveEigenvalue(f"eigenvalues must be positive and finite, got {bad}")

    values.sort()
    if len(values) > n:
        raise DimensionError(f"p={len(values)} exceeds n={n}")
    for lower, upper in zip(values, values[1:]):
        if (upper - lower) / upper < DEGENERACY_TOL:
            raise DegenerateSpectrum(
                f"eigenvalues {lower!r} and {upper!r} closer than relative gap {DEGENERACY_TOL}"
            )

    spectrum = EmpiricalSpectrum(beta=int(beta), n=n, lambdas=tuple(values))
    if require_real_density:
        spectrum.require_real_density()
    return spectrum


def support_upper(spectrum: EmpiricalSpectrum) -> float:
    """Upper end of the interval carrying all but a negligible part of the density."""
    top = spectrum.lambdas[-1]
    return spectrum.n * top + 10.0 * math.sqrt(spectrum.n) * top


def gamma_density(x, n: int, scale: float = 1.0):
    """Gamma(n, scale) density, the complex-case one-point function for p = 1."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    xs = x[pos] / scale
    out[pos] = np.exp((n - 1) * np.log(xs) - xs - gammaln(n)) / scale
    return out


def chi_square_density(x, n: int, scale: float = 1.0):
    """Density of scale·χ²_n, the real-case one-point function for p = 1."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    xs = x[pos] / scale
    half = n / 2.0
    out[pos] = np.exp((half - 1) * np.log(xs) - xs / 2 - half * math.log(2) - gammaln(half)) / scale
    return out
