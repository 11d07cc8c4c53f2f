"""Closed-form one-point function S₂(x) of the complex correlated Wishart ensemble."""

from __future__ import annotations

import logging
import math
import warnings
from collections.abc import Sequence

import numpy as np
from scipy.special import gammaln

from src.errors import ConditioningWarning, DegenerateSpectrum, EnsembleMismatch
from src.spectrum_model import DensityCurve, EmpiricalSpectrum
from src.symfun import leave_out_tables

logger = logging.getLogger(__name__)

# relative residue/determinant disagreement tolerated before warning
AGREEMENT_TOL = 1e-8


def _require_complex(spectrum: EmpiricalSpectrum) -> None:
    if spectrum.beta != 2:
        raise EnsembleMismatch(f"complex-case density requested for beta={spectrum.beta}")


def _log_power_ratio(x: float, n: int, k: np.ndarray) -> np.ndarray:
    """log(x^{n−k}/(n−k)!) for k ≤ n and x ≥ 0."""
    powers = n - k
    if x == 0.0:
        return np.where(powers == 0, 0.0, -np.inf)
    return powers * math.log(x) - gammaln(powers + 1)


def _pole_products(lam: np.ndarray) -> np.ndarray:
    """∏_{l≠j} (1 − Λ_l/Λ_j) for each j."""
    ratios = 1.0 - lam[None, :] / lam[:, None]
    np.fill_diagonal(ratios, 1.0)
    products = np.prod(ratios, axis=1)
    if np.any(products == 0.0):
        raise DegenerateSpectrum("repeated eigenvalues in the complex-case formula")
    return products


def s2_residue_sum(spectrum: EmpiricalSpectrum, x: float) -> float:
    """S₂(x) as a sum over the residues at the poles s = i/Λ_j."""
    _require_complex(spectrum)
    if x < 0:
        return 0.0
    lam = spectrum.array
    p, n = spectrum.p, spectrum.n
    k = np.arange(1, p + 1)

    # E_{k−1}(−Λ^ĵ) = (−1)^{k−1} E_{k−1}(Λ^ĵ)
    table = leave_out_tables(spectrum.lambdas)[:, :p]
    signs = np.where((k - 1) % 2 == 0, 1.0, -1.0)
    log_powers = _log_power_ratio(float(x), n, k)

    log_prefactor = -x / lam - n * np.log(lam)
    logs = log_prefactor[:, None] + log_powers[None, :]
    with np.errstate(divide="ignore"):
        logs = logs + np.log(np.abs(table))
    terms = np.sign(table) * signs[None, :] * np.exp(logs)
    total = math.fsum((terms.sum(axis=1) / _pole_products(lam)).tolist())
    return total / p


def s2_determinant_ratio(spectrum: EmpiricalSpectrum, x: float) -> float:
    """S₂(x) as det[[0, B], [C, D]] / det D, each determinant by pivoted LU."""
    _require_complex(spectrum)
    if x < 0:
        return 0.0
    lam = spectrum.array
    p, n = spectrum.p, spectrum.n
    k = np.arange(1, p + 1)

    # D_{k,j} = Λ_j^{−k+1}; scaling row k by Λ_p^{k−1} leaves the ratio unchanged
    d = (lam[-1] / lam)[None, :] ** (k - 1)[:, None]

    log_b = -x / lam - n * np.log(lam)
    log_c = _log_power_ratio(float(x), n, k)
    shift_b = float(np.max(log_b))
    finite_c = log_c[np.isfinite(log_c)]
    if finite_c.size == 0:
        return 0.0
    shift_c = float(np.max(finite_c))
    # each row of D was multiplied by Λ_p^{k−1}, so C_k must be as well
    c = -np.exp(log_c - shift_c + (k - 1) * math.log(lam[-1]))

    full = np.zeros((p + 1, p + 1))
    full[0, 1:] = np.exp(log_b - shift_b)
    full[1:, 0] = c
    full[1:, 1:] = d

    sign_full, logdet_full = np.linalg.slogdet(full)
    sign_d, logdet_d = np.linalg.slogdet(d)
    if sign_d == 0:
        raise DegenerateSpectrum("singular eigenvalue matrix in the determinant form")
    if sign_full == 0:
        return 0.0
    value = sign_full * sign_d * math.exp(logdet_full - logdet_d + shift_b + shift_c)
    return value / p


def s2_curve(spectrum: EmpiricalSpectrum, grid: Sequence[float]) -> DensityCurve:
    """Evaluate S₂ on a grid; the error column is |residue − determinant| per point."""
    _require_complex(spectrum)
    grid = np.asarray(grid, dtype=float)
    if not np.all(np.isfinite(grid)):
        raise ValueError("grid must be finite")

    values = np.array([s2_residue_sum(spectrum, x) for x in grid])
    checks = np.array([s2_determinant_ratio(spectrum, x) for x in grid])
    errors = np.abs(values - checks)

    scale = float(np.max(np.abs(values))) if len(values) else 0.0
    if scale > 0 and float(np.max(errors)) > AGREEMENT_TOL * scale:
        worst = int(np.argmax(errors))
        warnings.warn(
            f"residue and determinant forms differ by {errors[worst]:.3e} at x={grid[worst]:.6g} "
            f"(peak density {scale:.3e})",
            ConditioningWarning,
            stacklevel=2,
        )
    logger.info("complex density on %d points, max form disagreement %.3e", len(grid), errors.max())
    return DensityCurve.from_points(grid, values, errors)
