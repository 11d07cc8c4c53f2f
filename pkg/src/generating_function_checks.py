"""Self-consistency checks of the real-case generating function and density."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from src.complex_density import s2_residue_sum
from src.quadrature import QuadratureConfig, integrate_1d
from src.real_density import (
    DEFAULT_EPS_SEQUENCE,
    coefficient_matrix,
    generating_moments,
    s1_exact,
    s1_richardson,
    z1_generating,
)
from src.spectrum_model import EmpiricalSpectrum, support_upper

logger = logging.getLogger(__name__)


def z1_unit_check(
    spectrum: EmpiricalSpectrum, x0: complex, quad: QuadratureConfig | None = None
) -> float:
    """|Z₁(x₀, x₀) − 1|."""
    return abs(z1_generating(spectrum, x0, x0, quad) - 1.0)


def clt_limit(spectrum: EmpiricalSpectrum, x0: complex, x1: complex) -> complex:
    """∏(x₁ − Λ_l)/(x₀ − Λ_l), the large-n limit of Z₁(n x₀, n x₁)."""
    lam = spectrum.array
    return complex(np.prod((x1 - lam) / (x0 - lam)))


def clt_limit_check(
    spectrum: EmpiricalSpectrum,
    x0: complex,
    x1: complex,
    n_sequence: Sequence[int],
    quad: QuadratureConfig | None = None,
) -> list[float]:
    """|Z₁(n x₀, n x₁) − ∏(x₁ − Λ_l)/(x₀ − Λ_l)| for each n, keeping Λ fixed."""
    if not complex(x0).imag > 0:
        raise ValueError(f"x0 must have positive imaginary part, got {x0}")
    target = clt_limit(spectrum, x0, x1)
    deviations = []
    for n in n_sequence:
        scaled = EmpiricalSpectrum(beta=spectrum.beta, n=int(n), lambdas=spectrum.lambdas)
        value = z1_generating(scaled, n * complex(x0), n * complex(x1), quad)
        deviations.append(abs(value - target))
        logger.info("CLT check n=%d: deviation %.3e", n, deviations[-1])
    return deviations


def conjugation_check(
    spectrum: EmpiricalSpectrum, x0: complex, x1: float, quad: QuadratureConfig | None = None
) -> float:
    """|Z₁(x̄₀, x₁) − conj Z₁(x₀, x₁)| for real x₁."""
    matrix = coefficient_matrix(spectrum, x1)
    value, _ = generating_moments(spectrum, x0, quad).contract(matrix)
    mirror, _ = generating_moments(spectrum, complex(x0).conjugate(), quad).contract(matrix)
    return abs(mirror - value.conjugate())


def density_function(spectrum: EmpiricalSpectrum, quad: QuadratureConfig | None = None):
    """Vectorized S_β for the ensemble class of ``spectrum``."""
    if spectrum.beta == 2:
        return lambda xs: np.array([s2_residue_sum(spectrum, float(x)) for x in xs])
    return lambda xs: np.array([s1_exact(spectrum, float(x), quad) for x in xs])


def normalization_check(
    spectrum: EmpiricalSpectrum, quad: QuadratureConfig | None = None
) -> tuple[float, float]:
    """(∫S, ∫xS) over [0, support_upper] by adaptive quadrature."""
    quad = quad or QuadratureConfig()
    density = density_function(spectrum, quad)

    def integrand(xs: np.ndarray) -> np.ndarray:
        values = density(xs)
        return np.stack([values, xs * values], axis=1)

    outer = QuadratureConfig(
        abs_tol=1e-9, rel_tol=1e-7, max_levels=quad.max_levels, panel_order=quad.panel_order
    )
    # split at the mean so the peak region starts well resolved
    mean = spectrum.mean_eigenvalue
    upper = support_upper(spectrum)
    pieces = [(0.0, 0.5 * mean), (0.5 * mean, 1.5 * mean), (1.5 * mean, upper)]
    total = np.zeros(2)
    for lo, hi in pieces:
        if hi > lo:
            total = total + integrate_1d(integrand, (lo, hi), config=outer).value
    return float(total[0]), float(total[1])


@dataclass(frozen=True)
class OracleComparison:
    x: float
    exact: float
    oracle: float
    within: bool


def oracle_agreement_check(
    spectrum: EmpiricalSpectrum,
    points: Sequence[float],
    quad: QuadratureConfig | None = None,
    eps_sequence: tuple[float, ...] = DEFAULT_EPS_SEQUENCE,
    abs_tol: float = 1e-3,
    rel_tol: float = 1e-2,
) -> list[OracleComparison]:
    """s1_exact against the ε-extrapolated oracle at each point."""
    rows = []
    for x in points:
        exact = s1_exact(spectrum, float(x), quad)
        oracle = s1_richardson(spectrum, float(x), eps_sequence, quad=quad).value
        limit = max(abs_tol, rel_tol * abs(oracle))
        rows.append(OracleComparison(float(x), exact, oracle, abs(exact - oracle) <= limit))
    return rows
