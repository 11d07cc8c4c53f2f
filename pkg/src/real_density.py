"""One-point function S₁(x) of the real correlated Wishart ensemble.

Both the generating function Z₁(x₀, x₁) and the exact density are two-fold integrals over
(r_a, r_b) ∈ ℝ₊² whose only non-separable factor is |r_a − r_b|. On disjoint intervals that
factor is ±(r_a − r_b), so every integral reduces to one-dimensional moments

    Q = ∫ w(r) V(r) dr,    P = ∫ (r − r₀) w(r) V(r) dr

contracted with the symmetric coefficient matrix M(x₁):

    Z₁ = ⅛ ∫∫ |r_a − r_b| w(r_a) w(r_b) V(r_a)ᵀ M V(r_b).

Here w(r) = r^{(n−3)/2} e^{−r/2} / √((n−2)!) and V(r) = (A, r A/(x₀ − Λ₁r), …, r A/(x₀ − Λ_p r))
with A(r) = ∏_i (x₀ − Λ_i r)^{−1/2}. The entries of M carry the three bracket terms and the
k-sum Σ_k (−1)^k x₁^{p−k}/(n−k)!.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln, xlogy

from src.config import PRUNE_LOG_DROP, TAIL_LOG_DROP
from src.errors import DimensionError, EnsembleMismatch
from src.quadrature import (
    QuadratureConfig,
    finite_part_1d,
    integrate_1d,
    integrate_2d_cell,
)
from src.spectrum_model import ComplexShift, DensityCurve, EmpiricalSpectrum
from src.symfun import elementary_symmetric, leave_out2_tables, leave_out_tables

logger = logging.getLogger(__name__)

DEFAULT_EPS_SEQUENCE = (1e-2, 5e-3, 2.5e-3)


# ---------------------------------------------------------------------------
# weight and truncation
# ---------------------------------------------------------------------------


def log_weight(n: int, r):
    """log w(r) for the radial weight, normalized so w(a)w(b) carries 1/(n−2)!."""
    r = np.asarray(r, dtype=float)
    return xlogy((n - 3) / 2.0, r) - r / 2.0 - 0.5 * gammaln(n - 1)


def weight_peak(n: int) -> float:
    return float(max(n - 3, 0))


def _max_log_weight(n: int, lo: float, hi: float) -> float:
    return float(log_weight(n, min(max(weight_peak(n), lo), hi)))


def truncation_radius(spectrum: EmpiricalSpectrum, x: float) -> float:
    """Upper cut of the unbounded cell.

    The larger of 2(n + p ln n) + x/Λ₁ and the point beyond the peak where the weight has
    dropped TAIL_LOG_DROP e-folds; the first alone is too short for small n.
    """
    n, p = spectrum.n, spectrum.p
    base = 2.0 * (n + p * math.log(n)) + max(x, 0.0) / spectrum.lambdas[0]

    peak = weight_peak(n)
    if peak == 0.0:
        return max(base, 2.0 * TAIL_LOG_DROP)
    top = float(log_weight(n, peak))

    def excess(r: float) -> float:
        return float(log_weight(n, r)) - top + TAIL_LOG_DROP

    hi = peak + 2.0 * TAIL_LOG_DROP + 10.0 * peak + 10.0
    tail = brentq(excess, peak, hi)
    return max(base, tail)


# ---------------------------------------------------------------------------
# coefficient matrix and integrand
# ---------------------------------------------------------------------------


def coefficient_matrix(
    spectrum: EmpiricalSpectrum, x1: complex, derivative: bool = False
) -> np.ndarray:
    """Symmetric (p+1)×(p+1) matrix M(x₁), or ∂M/∂x₁ with ``derivative``.

    M[0,0]      = n(n−1) Σ_k c_k E_k(Λ)
    M[0,1+i]    = (n−1) Λ_i² Σ_k c_k E_{k−1}(Λ^î)
    M[1+i,1+j]  = Λ_i² Λ_j² Σ_k c_k E_{k−2}(Λ^îĵ)  (i ≠ j; zero diagonal)

    with c_k = (−1)^k x₁^{p−k} (n−2)!/(n−k)!.
    """
    n, p = spectrum.n, spectrum.p
    lam = spectrum.array
    k = np.arange(p + 1)
    ratio = np.exp(gammaln(n - 1) - gammaln(n - k + 1))
    signs = np.where(k % 2 == 0, 1.0, -1.0)
    x1 = complex(x1)
    if derivative:
        powers = np.array([(p - kk) * x1 ** max(p - kk - 1, 0) for kk in k])
    else:
        powers = np.array([x1 ** (p - kk) for kk in k])
    c = signs * powers * ratio

    table = np.asarray(elementary_symmetric(spectrum.lambdas).e)
    matrix = np.zeros((p + 1, p + 1), dtype=complex)
    matrix[0, 0] = n * (n - 1) * np.dot(c, table)

    loo = leave_out_tables(spectrum.lambdas)[:, :p]
    beta = (n - 1) * lam**2 * (loo @ c[1 : p + 1])
    matrix[0, 1:] = beta
    matrix[1:, 0] = beta

    if p >= 2:
        loo2 = leave_out2_tables(spectrum.lambdas)[:, :, : p - 1]
        gamma = np.outer(lam**2, lam**2) * (loo2 @ c[2 : p + 1])
        np.fill_diagonal(gamma, 0.0)
        matrix[1:, 1:] = gamma
    return matrix


@dataclass(frozen=True)
class GeneratingIntegrand:
    """The two-fold generating-function integrand at fixed (x₀, x₁)."""

    spectrum: EmpiricalSpectrum
    x0: complex
    x1: complex
    matrix: np.ndarray

    @classmethod
    def build(
        cls, spectrum: EmpiricalSpectrum, x0: complex, x1: complex, derivative: bool = False
    ) -> GeneratingIntegrand:
        return cls(spectrum, complex(x0), complex(x1), coefficient_matrix(spectrum, x1, derivative))

    def vector(self, r) -> np.ndarray:
        """V(r) of shape (N, p+1); principal root of each factor x₀ − Λ_i r."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        factors = self.x0 - r[:, None] * self.spectrum.array[None, :]
        amplitude = np.prod(1.0 / np.sqrt(factors), axis=1)
        out = np.empty((len(r), self.spectrum.p + 1), dtype=complex)
        out[:, 0] = amplitude
        out[:, 1:] = amplitude[:, None] * r[:, None] / factors
        return out

    def weight(self, r) -> np.ndarray:
        return np.exp(log_weight(self.spectrum.n, r))

    def __call__(self, ra, rb) -> np.ndarray:
        ra = np.atleast_1d(np.asarray(ra, dtype=float))
        rb = np.atleast_1d(np.asarray(rb, dtype=float))
        bilinear = np.einsum("ni,ij,nj->n", self.vector(ra), self.matrix, self.vector(rb))
        return 0.125 * np.abs(ra - rb) * self.weight(ra) * self.weight(rb) * bilinear


# ---------------------------------------------------------------------------
# generating function by panel moments
# ---------------------------------------------------------------------------


def _moment_config(quad: QuadratureConfig) -> QuadratureConfig:
    """Inner tolerance for moments; the contraction loses a few digits to cancellation."""
    rel = max(1e-13, min(quad.rel_tol, 1e-4) * 1e-6)
    return QuadratureConfig(
        abs_tol=1e-280, rel_tol=rel, max_levels=quad.max_levels, panel_order=quad.panel_order
    )


def _panel_edges(spectrum: EmpiricalSpectrum, x0: complex, r_max: float) -> np.ndarray:
    """Panels on [0, r_max], graded geometrically around each near-singular point Re x₀/Λ_i."""
    edges = set(np.linspace(0.0, r_max, 17).tolist())
    if x0.real > 0:
        for lam in spectrum.lambdas:
            center = x0.real / lam
            if center >= r_max:
                continue
            edges.add(center)
            step = max(abs(x0.imag) / lam, 1e-12 * center)
            while step < r_max:
                for edge in (center - step, center + step):
                    if 0.0 < edge < r_max:
                        edges.add(edge)
                step *= 4.0
    ordered = np.array(sorted(edges))
    keep = np.concatenate([[True], np.diff(ordered) > 1e-13 * r_max])
    return ordered[keep]


@dataclass(frozen=True)
class GeneratingMoments:
    """Per-panel moments of V, independent of x₁.

    ``q[i]``, ``pm[i]`` are the plain and (r − r₀)-weighted moments of panel i; ``block[i]`` is
    the diagonal-block matrix ∫∫_{panel²} |r_a − r_b| w w V(r_a) V(r_b)ᵀ.
    """

    q: np.ndarray
    pm: np.ndarray
    block: np.ndarray
    q_err: np.ndarray
    block_err: np.ndarray
    evaluations: int

    def contract(self, matrix: np.ndarray) -> tuple[complex, float]:
        """Z₁ for coefficient matrix ``matrix`` with a propagated error estimate."""
        if len(self.q) == 0:
            return 0j, 0.0
        # cumulative moments of the panels strictly to the left
        q_left = np.cumsum(self.q, axis=0) - self.q
        p_left = np.cumsum(self.pm, axis=0) - self.pm
        cross = np.einsum("ni,ij,nj->", self.pm, matrix, q_left) - np.einsum(
            "ni,ij,nj->", self.q, matrix, p_left
        )
        diagonal = np.einsum("ij,nij->", matrix, self.block)
        value = 0.125 * (2.0 * cross + diagonal)

        norm = float(np.abs(matrix).max())
        size = float(np.abs(self.q).sum() + np.abs(self.pm).sum())
        err = 0.125 * norm * (4.0 * float(self.q_err.sum()) * size + float(self.block_err.sum()))
        return complex(value), err


def generating_moments(
    spectrum: EmpiricalSpectrum, x0: complex, quad: QuadratureConfig | None = None
) -> GeneratingMoments:
    """Panel moments for Z₁(x₀, ·) on the truncated half-line."""
    quad = quad or QuadratureConfig()
    x0 = complex(x0)
    if x0.imag == 0 and x0.real >= 0:
        raise ValueError(f"x0 must lie off the positive real axis, got {x0}")
    n, p = spectrum.n, spectrum.p
    config = _moment_config(quad)
    integrand = GeneratingIntegrand(spectrum, x0, x0, np.zeros((p + 1, p + 1)))

    r_max = truncation_radius(spectrum, max(x0.real, 0.0))
    r0 = min(weight_peak(n), r_max)
    edges = _panel_edges(spectrum, x0, r_max)
    peak_log = float(log_weight(n, min(weight_peak(n), r_max)))

    def moments(r: np.ndarray) -> np.ndarray:
        weighted = integrand.vector(r) * integrand.weight(r)[:, None]
        return np.concatenate([weighted, (r - r0)[:, None] * weighted], axis=1)

    def block(ra: np.ndarray, rb: np.ndarray) -> np.ndarray:
        va = integrand.vector(ra) * integrand.weight(ra)[:, None]
        vb = integrand.vector(rb) * integrand.weight(rb)[:, None]
        outer = np.abs(ra - rb)[:, None, None] * va[:, :, None] * vb[:, None, :]
        return outer.reshape(len(ra), -1)

    qs, pms, blocks, q_errs, block_errs = [], [], [], [], []
    evaluations = 0
    skipped = 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if _max_log_weight(n, lo, hi) < peak_log - PRUNE_LOG_DROP:
            skipped += 1
            continue
        first = integrate_1d(moments, (lo, hi), (lo == 0.0, False), config)
        second = integrate_2d_cell(block, (lo, hi), (lo, hi), diagonal_split=True, config=config)
        qs.append(first.value[: p + 1])
        pms.append(first.value[p + 1 :])
        blocks.append(second.value.reshape(p + 1, p + 1))
        q_errs.append(first.err_estimate)
        block_errs.append(second.err_estimate)
        evaluations += first.evaluations + second.evaluations

    logger.debug(
        "generating moments at x0=%s: %d panels, %d pruned, %d evaluations",
        x0,
        len(qs),
        skipped,
        evaluations,
    )
    empty = np.zeros((0, p + 1), dtype=complex)
    return GeneratingMoments(
        q=np.array(qs) if qs else empty,
        pm=np.array(pms) if pms else empty,
        block=np.array(blocks) if blocks else np.zeros((0, p + 1, p + 1), dtype=complex),
        q_err=np.array(q_errs),
        block_err=np.array(block_errs),
        evaluations=evaluations,
    )


def _require_real(spectrum: EmpiricalSpectrum) -> None:
    if spectrum.beta != 1:
        raise EnsembleMismatch(f"real-case generating function requested for beta={spectrum.beta}")


def z1_generating(
    spectrum: EmpiricalSpectrum,
    x0: complex,
    x1: complex,
    quad: QuadratureConfig | None = None,
) -> complex:
    """Generating function Z₁(x₀, x₁) for x₀ off the positive real axis."""
    _require_real(spectrum)
    if spectrum.n < 3:
        raise DimensionError(f"generating function integral needs n >= 3, got n={spectrum.n}")
    moments = generating_moments(spectrum, x0, quad)
    value, _ = moments.contract(coefficient_matrix(spectrum, x1))
    return value


# ---------------------------------------------------------------------------
# epsilon oracle
# ---------------------------------------------------------------------------


def s1_epsilon_oracle(
    spectrum: EmpiricalSpectrum,
    x: float,
    eps: float = 1e-2,
    h: float | None = None,
    quad: QuadratureConfig | None = None,
) -> float:
    """(2πip)⁻¹ ∂_{x₁}[Z₁(x − iε, x₁) − Z₁(x + iε, x₁)] at x₁ = x, by central differences."""
    shift = ComplexShift(x, eps)
    spectrum.require_real_density()
    h = h if h is not None else 1e-4 * max(1.0, abs(x))
    if not (h > 0):
        raise ValueError(f"h must be positive, got {h}")

    forward = coefficient_matrix(spectrum, x + h)
    backward = coefficient_matrix(spectrum, x - h)

    def slope(x0: complex) -> complex:
        moments = generating_moments(spectrum, x0, quad)
        return (moments.contract(forward)[0] - moments.contract(backward)[0]) / (2.0 * h)

    jump = slope(shift.below) - slope(shift.above)
    return float((jump / (2j * math.pi * spectrum.p)).real)


@dataclass(frozen=True)
class OracleEstimate:
    """ε → 0 extrapolation of the oracle together with the raw samples."""

    value: float
    samples: tuple[tuple[float, float], ...]


def s1_richardson(
    spectrum: EmpiricalSpectrum,
    x: float,
    eps_sequence: tuple[float, ...] = DEFAULT_EPS_SEQUENCE,
    h: float | None = None,
    quad: QuadratureConfig | None = None,
) -> OracleEstimate:
    """Polynomial extrapolation of the oracle in ε to ε = 0."""
    samples = tuple((eps, s1_epsilon_oracle(spectrum, x, eps, h, quad)) for eps in eps_sequence)
    eps_values = np.array([eps for eps, _ in samples])
    values = np.array([value for _, value in samples])
    coeffs = np.polynomial.polynomial.polyfit(eps_values, values, deg=len(samples) - 1)
    return OracleEstimate(float(coeffs[0]), samples)


# ---------------------------------------------------------------------------
# exact density from the cell partition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CellPartition:
    """Cells U₀(x) … U_p(x) of ℝ₊ cut at x/Λ_j, with the contributing cell pairs.

    Cell U_m holds the points where exactly m factors x − Λ_i r are negative. ``odd_pairs``
    lists every ordered (l, l′) with l + l′ odd together with the sign (−1)^{(l+l′−1)/2}.
    """

    x: float
    boundaries: tuple[float, ...]
    cells: tuple[tuple[float, float], ...]
    odd_pairs: tuple[tuple[int, int, int], ...]

    def boundary_index(self, m: int) -> int:
        """0-based eigenvalue index of the boundary between U_m and U_{m+1}."""
        return len(self.boundaries) - 1 - m


def cell_partition(spectrum: EmpiricalSpectrum, x: float) -> CellPartition:
    if not x > 0:
        raise ValueError(f"cell partition needs x > 0, got {x}")
    p = spectrum.p
    boundaries = tuple(x / lam for lam in reversed(spectrum.lambdas))
    points = (0.0, *boundaries, math.inf)
    cells = tuple(zip(points[:-1], points[1:]))
    pairs = tuple(
        (l, lp, 1 if ((l + lp - 1) // 2) % 2 == 0 else -1)
        for l in range(p + 1)  # noqa: E741
        for lp in range(p + 1)
        if (l + lp) % 2 == 1
    )
    return CellPartition(float(x), boundaries, cells, pairs)


@dataclass
class _CellMoments:
    q: np.ndarray
    pm: np.ndarray
    err: float


class _CellIntegrator:
    """Real moments of R(r) = (ρ, ρ r/(x − Λ_k r)) over one cell, ρ = ∏|x − Λ_i r|^{−1/2}."""

    def __init__(self, spectrum: EmpiricalSpectrum, x: float, r0: float, config: QuadratureConfig):
        self.spectrum = spectrum
        self.lam = spectrum.array
        self.x = x
        self.r0 = r0
        self.config = config
        self.peak_log = float(log_weight(spectrum.n, weight_peak(spectrum.n)))

    def _with_offset(self, r: np.ndarray, vec: np.ndarray) -> np.ndarray:
        return np.concatenate([vec, (r - self.r0)[:, None] * vec], axis=1)

    def regular(self, r: np.ndarray) -> np.ndarray:
        dist = self.x - r[:, None] * self.lam[None, :]
        log_rho = -0.5 * np.sum(np.log(np.abs(dist)), axis=1)
        base = np.exp(log_weight(self.spectrum.n, r) + log_rho)
        vec = np.empty((len(r), self.spectrum.p + 1))
        vec[:, 0] = base
        vec[:, 1:] = base[:, None] * r[:, None] / dist
        return self._with_offset(r, vec)

    def singular(self, center: float, index: int, direction: int):
        """G(u) with R(c + d·u) = u^{−3/2} G(u) near the boundary c = x/Λ_index."""
        lam_e = self.lam[index]
        others = np.arange(self.spectrum.p) != index

        def g(u: np.ndarray) -> np.ndarray:
            r = center + direction * u
            dist = self.x - r[:, None] * self.lam[None, :]
            log_rho = -0.5 * np.sum(np.log(np.abs(dist[:, others])), axis=1)
            base = np.exp(log_weight(self.spectrum.n, r) + log_rho) / math.sqrt(lam_e)
            vec = np.empty((len(r), self.spectrum.p + 1))
            vec[:, 0] = base * u
            safe = np.where(others[None, :], dist, 1.0)
            vec[:, 1:] = (base * u * r)[:, None] / safe
            vec[:, 1 + index] = -direction * base * r / lam_e
            return self._with_offset(r, vec)

        return g

    def negligible(self, lo: float, hi: float) -> bool:
        return _max_log_weight(self.spectrum.n, lo, hi) < self.peak_log - PRUNE_LOG_DROP

    def half(self, lo: float, hi: float, singular_at: tuple[float, int, int] | None, at_zero: bool):
        width = 2 * (self.spectrum.p + 1)
        if self.negligible(lo, hi):
            return np.zeros(width), 0.0
        if singular_at is None:
            result = integrate_1d(self.regular, (lo, hi), (at_zero, False), self.config)
        else:
            center, index, direction = singular_at
            result = finite_part_1d(self.singular(center, index, direction), hi - lo, self.config)
        return np.asarray(result.value, dtype=float), result.err_estimate

    def cell(self, partition: CellPartition, m: int, r_max: float) -> _CellMoments:
        lo, hi = partition.cells[m]
        p = self.spectrum.p
        upper = r_max if m == p else hi
        mid = 0.5 * (lo + upper)

        left_sing = None if m == 0 else (lo, partition.boundary_index(m - 1), +1)
        right_sing = None if m == p else (hi, partition.boundary_index(m), -1)

        if left_sing is None:
            left_value, left_err = self.half(lo, mid, None, at_zero=True)
        else:
            left_value, left_err = self.half(lo, mid, left_sing, at_zero=False)
        if right_sing is None:
            right_value, right_err = self.half(mid, upper, None, at_zero=False)
        else:
            right_value, right_err = self.half(mid, upper, right_sing, at_zero=False)

        total = left_value + right_value
        return _CellMoments(total[: p + 1], total[p + 1 :], left_err + right_err)


def _s1_with_error(
    spectrum: EmpiricalSpectrum, x: float, quad: QuadratureConfig | None
) -> tuple[float, float]:
    spectrum.require_real_density()
    if x <= 0:
        return 0.0, 0.0
    quad = quad or QuadratureConfig()
    partition = cell_partition(spectrum, x)
    r_max = truncation_radius(spectrum, x)
    r0 = min(weight_peak(spectrum.n), r_max)
    integrator = _CellIntegrator(spectrum, x, r0, _moment_config(quad))
    cells = [integrator.cell(partition, m, r_max) for m in range(spectrum.p + 1)]

    slope = coefficient_matrix(spectrum, x, derivative=True).real
    norm = float(np.abs(slope).max())
    terms = []
    err = 0.0
    for l, lp, sign in partition.odd_pairs:  # noqa: E741
        a, b = cells[l], cells[lp]
        orient = 1.0 if l > lp else -1.0
        terms.append(sign * orient * (a.pm @ slope @ b.q - a.q @ slope @ b.pm))
        size = float(np.abs(a.q).sum() + np.abs(a.pm).sum() + np.abs(b.q).sum() + np.abs(b.pm).sum())
        err += 2.0 * norm * (a.err + b.err) * size
    scale = 1.0 / (8.0 * math.pi * spectrum.p)
    return scale * math.fsum(terms), scale * err


def s1_exact(spectrum: EmpiricalSpectrum, x: float, quad: QuadratureConfig | None = None) -> float:
    """S₁(x) from the odd cell pairs with finite-part regularized boundary singularities."""
    return _s1_with_error(spectrum, x, quad)[0]


def s1_curve(
    spectrum: EmpiricalSpectrum, grid, quad: QuadratureConfig | None = None
) -> DensityCurve:
    grid = np.asarray(grid, dtype=float)
    if not np.all(np.isfinite(grid)):
        raise ValueError("grid must be finite")
    spectrum.require_real_density()
    pairs = [_s1_with_error(spectrum, float(x), quad) for x in grid]
    values = [value for value, _ in pairs]
    errors = [err for _, err in pairs]
    logger.info("real density on %d points, max error estimate %.3e", len(grid), max(errors, default=0))
    return DensityCurve.from_points(grid, values, errors)
