"""Tests for the real-case generating function and exact density."""

import math

import numpy as np
import pytest

from src.errors import DimensionError, EnsembleMismatch, RealCaseTooSmallN
from src.quadrature import QuadratureConfig
from src.real_density import (
    GeneratingIntegrand,
    cell_partition,
    coefficient_matrix,
    generating_moments,
    log_weight,
    s1_curve,
    s1_epsilon_oracle,
    s1_exact,
    s1_richardson,
    truncation_radius,
    weight_peak,
    z1_generating,
)
from src.spectrum_model import chi_square_density, validate_spectrum
from tests.conftest import FIG_LAMBDAS


def rightmost_peak(xs, values):
    values = np.asarray(values)
    interior = np.flatnonzero((values[1:-1] > values[:-2]) & (values[1:-1] >= values[2:])) + 1
    return float(xs[interior[-1]])


class TestWeightAndTruncation:
    """Test the radial weight and the cut of the unbounded cell."""

    def test_peak(self):
        """Test that the weight peaks at n − 3."""
        n = 20
        rs = np.linspace(1.0, 40.0, 3901)
        assert rs[np.argmax(log_weight(n, rs))] == pytest.approx(weight_peak(n), abs=0.01)

    def test_radius_covers_tail(self, real_two):
        """Test that the cut lies where the weight is negligible."""
        r_max = truncation_radius(real_two, 3.0)
        assert r_max >= 2 * (10 + 2 * math.log(10)) + 3.0 / 0.5
        drop = log_weight(10, weight_peak(10)) - log_weight(10, r_max)
        assert drop >= 40.0 - 1e-9


class TestCoefficientMatrix:
    """Test the symmetric coefficient matrix."""

    def test_symmetric_with_zero_diagonal_block(self, real_three):
        """Test symmetry and the vanishing diagonal of the Λ-Λ block."""
        matrix = coefficient_matrix(real_three, 0.8 + 0.3j)
        np.testing.assert_allclose(matrix, matrix.T)
        np.testing.assert_allclose(np.diag(matrix)[1:], 0.0)

    def test_derivative_by_difference(self, real_three):
        """Test ∂M/∂x₁ against a central difference."""
        h = 1e-5
        forward = coefficient_matrix(real_three, 2.0 + h)
        backward = coefficient_matrix(real_three, 2.0 - h)
        numeric = (forward - backward) / (2 * h)
        exact = coefficient_matrix(real_three, 2.0, derivative=True)
        np.testing.assert_allclose(exact, numeric, rtol=1e-6, atol=1e-6 * np.abs(exact).max())


class TestIntegrand:
    """Test the pointwise generating-function integrand."""

    def test_symmetric_in_radii(self, real_two):
        """Test that swapping r_a and r_b leaves the integrand unchanged."""
        integrand = GeneratingIntegrand.build(real_two, 1.0 + 2.0j, 0.7)
        ra, rb = np.array([0.5, 3.0, 9.0]), np.array([4.0, 1.0, 2.5])
        np.testing.assert_allclose(integrand(ra, rb), integrand(rb, ra))

    def test_vanishes_on_diagonal(self, real_two):
        """Test the |r_a − r_b| factor."""
        integrand = GeneratingIntegrand.build(real_two, 1.0 + 2.0j, 0.7)
        assert integrand(2.0, 2.0)[0] == 0.0

    def test_vector_layout(self, real_two):
        """Test V(r) = (A, rA/(x₀ − Λ_i r))."""
        integrand = GeneratingIntegrand.build(real_two, -3.0, 0.7)
        v = integrand.vector(2.0)[0]
        amplitude = 1.0 / np.sqrt(complex(-3.0 - 0.5 * 2.0)) / np.sqrt(complex(-3.0 - 2.0))
        assert v[0] == pytest.approx(amplitude)
        assert v[1] == pytest.approx(amplitude * 2.0 / (-3.0 - 0.5 * 2.0))
        assert v[2] == pytest.approx(amplitude * 2.0 / (-3.0 - 2.0))


class TestGeneratingFunction:
    """Test Z₁ by panel moments."""

    def test_positive_real_x0_rejected(self, real_two):
        """Test that x₀ on the positive real axis is refused."""
        with pytest.raises(ValueError):
            generating_moments(real_two, 3.0)

    def test_requires_real_ensemble(self, complex_two):
        """Test that β = 2 spectra are refused."""
        with pytest.raises(EnsembleMismatch):
            z1_generating(complex_two, 1 + 1j, 1.0)

    def test_requires_n_at_least_three(self):
        """Test that n < 3 is a dimension error."""
        spectrum = validate_spectrum(1, 2, [1.0])
        with pytest.raises(DimensionError):
            z1_generating(spectrum, 1 + 1j, 1.0)

    @pytest.mark.slow
    def test_matches_direct_double_integral(self, real_two, quad):
        """Test the moment contraction against a direct two-fold integration."""
        from scipy import integrate

        x0, x1 = 1.0 + 2.0j, 0.7
        integrand = GeneratingIntegrand.build(real_two, x0, x1)
        r_max = truncation_radius(real_two, 1.0)

        def part(kind):
            def f(rb, ra):
                value = integrand(ra, rb)[0]
                return value.real if kind == "re" else value.imag

            # lower triangle r_b < r_a, doubled by symmetry
            return 2.0 * integrate.dblquad(f, 0.0, r_max, 0.0, lambda ra: ra, epsabs=1e-10)[0]

        direct = complex(part("re"), part("im"))
        assert z1_generating(real_two, x0, x1, quad) == pytest.approx(direct, abs=1e-6)


class TestCellPartition:
    """Test the cells cut at x/Λ_j."""

    def test_layout(self, real_three):
        """Test boundaries, cells and the odd pair count."""
        partition = cell_partition(real_three, 3.0)
        assert partition.boundaries == pytest.approx((2.0, 3.0 / 0.7, 10.0))
        assert partition.cells[0] == (0.0, 2.0)
        assert partition.cells[-1][1] == math.inf
        assert len(partition.odd_pairs) == (real_three.p + 1) ** 2 // 2

    def test_cell_counts_negative_factors(self, real_three):
        """Test that U_m holds the points with exactly m negative factors."""
        partition = cell_partition(real_three, 3.0)
        lam = np.array(real_three.lambdas)
        for m, (lo, hi) in enumerate(partition.cells):
            r = lo + 0.5 if math.isinf(hi) else 0.5 * (lo + hi)
            assert int(np.sum(3.0 - lam * r < 0)) == m
        for m in range(real_three.p):
            index = partition.boundary_index(m)
            assert partition.boundaries[m] == pytest.approx(3.0 / lam[index])

    def test_pair_signs(self, real_two):
        """Test the (−1)^{(l+l′−1)/2} signs."""
        signs = {(l, lp): s for l, lp, s in cell_partition(real_two, 1.0).odd_pairs}
        assert signs[(0, 1)] == 1
        assert signs[(1, 2)] == -1
        assert (0, 2) not in signs

    def test_non_positive_x_rejected(self, real_two):
        """Test that x ≤ 0 has no partition."""
        with pytest.raises(ValueError):
            cell_partition(real_two, 0.0)


class TestExactDensity:
    """Test S₁ from the cell moments."""

    @pytest.mark.parametrize("x", [2.0, 6.0, 10.0, 16.0])
    def test_single_eigenvalue_is_chi_square(self, x, quad):
        """Test that p = 1 gives Λ·χ²_n."""
        spectrum = validate_spectrum(1, 8, [1.3])
        expected = float(chi_square_density(np.array([x]), 8, scale=1.3)[0])
        assert s1_exact(spectrum, x, quad) == pytest.approx(expected, rel=1e-4, abs=1e-6)

    def test_zero_below_support(self, real_two):
        """Test that S₁ vanishes for x ≤ 0."""
        assert s1_exact(real_two, 0.0) == 0.0
        assert s1_exact(real_two, -2.0) == 0.0

    def test_small_n_rejected(self):
        """Test that n ≤ p + 3 is refused."""
        spectrum = validate_spectrum(1, 5, [0.5, 1.0])
        with pytest.raises(RealCaseTooSmallN):
            s1_exact(spectrum, 1.0)

    @pytest.mark.parametrize("x", [2.5, 5.0, 9.0])
    def test_matches_epsilon_oracle(self, real_two, quad, x):
        """Test agreement with the ε → 0 extrapolated oracle, p = 2."""
        oracle = s1_richardson(real_two, x, quad=quad).value
        assert s1_exact(real_two, x, quad) == pytest.approx(oracle, abs=max(1e-3, 1e-2 * oracle))

    @pytest.mark.slow
    @pytest.mark.parametrize("x", [3.0, 8.0, 14.0])
    def test_matches_epsilon_oracle_three_levels(self, real_three, quad, x):
        """Test agreement with the oracle, p = 3."""
        oracle = s1_richardson(real_three, x, quad=quad).value
        assert s1_exact(real_three, x, quad) == pytest.approx(oracle, abs=max(1e-3, 1e-2 * oracle))

    def test_curve_non_negative(self, real_two, quad):
        """Test positivity at quadrature accuracy and the error column."""
        grid = np.linspace(-1.0, 25.0, 27)
        curve = s1_curve(real_two, grid, quad)
        assert min(curve.values) >= -1e-6
        assert curve.values[0] == 0.0
        assert all(err >= 0 for err in curve.errors)

    def test_tighter_tolerance_agrees(self, real_two):
        """Test that tightening the tolerance moves the value by less than the loose error."""
        loose = s1_exact(real_two, 6.0, QuadratureConfig(abs_tol=1e-5, rel_tol=1e-3))
        tight = s1_exact(real_two, 6.0, QuadratureConfig(abs_tol=1e-9, rel_tol=1e-7))
        assert loose == pytest.approx(tight, abs=1e-4)

    def test_tight_tolerance_does_not_raise(self, real_two):
        """Test that tolerances far below the defaults still evaluate every point."""
        tight = QuadratureConfig(abs_tol=1e-10, rel_tol=1e-7)
        values = [s1_exact(real_two, x, tight) for x in (1.97, 4.75, 14.77)]
        assert all(np.isfinite(values))

    @pytest.mark.slow
    def test_tightening_never_increases_deviation(self, real_two):
        """Test that successively tighter tolerances move the curve toward the tightest one."""
        grid = np.linspace(0.3, 22.0, 40)
        configs = [QuadratureConfig(abs_tol=rel * 1e-2, rel_tol=rel) for rel in (1e-4, 1e-6, 1e-7)]
        curves = [np.array(s1_curve(real_two, grid, config).values) for config in configs]
        loose = np.max(np.abs(curves[0] - curves[2]))
        medium = np.max(np.abs(curves[1] - curves[2]))
        assert medium <= loose + 1e-9
        assert loose < 1e-4


@pytest.mark.slow
class TestOracleGrid:
    """Test S₁ against the ε oracle on 20 grid points per spectrum."""

    @pytest.mark.parametrize(
        "n,lambdas,upper",
        [(10, [0.5, 1.0], 20.0), (14, [0.3, 0.7, 1.5], 30.0)],
    )
    def test_grid(self, quad, n, lambdas, upper):
        """Test agreement within max(1e-3, 1%) at every point."""
        spectrum = validate_spectrum(1, n, lambdas)
        failures = []
        for x in np.linspace(0.5, upper, 20):
            oracle = s1_richardson(spectrum, float(x), quad=quad).value
            exact = s1_exact(spectrum, float(x), quad)
            if abs(exact - oracle) > max(1e-3, 1e-2 * abs(oracle)):
                failures.append((float(x), exact, oracle))
        assert failures == []


class TestEpsilonOracle:
    """Test the finite-ε evaluation."""

    def test_eps_must_be_positive(self, real_two):
        """Test that ε ≤ 0 is rejected."""
        with pytest.raises(ValueError):
            s1_epsilon_oracle(real_two, 3.0, eps=0.0)

    def test_richardson_keeps_samples(self, real_two, quad):
        """Test that the extrapolation reports one sample per ε."""
        estimate = s1_richardson(real_two, 5.0, eps_sequence=(2e-2, 1e-2), quad=quad)
        assert [eps for eps, _ in estimate.samples] == [2e-2, 1e-2]

    def test_smoothing_shrinks_with_eps(self, real_two, quad):
        """Test that smaller ε moves the oracle toward the exact value."""
        exact = s1_exact(real_two, 5.0, quad)
        coarse = s1_epsilon_oracle(real_two, 5.0, eps=0.2, quad=quad)
        fine = s1_epsilon_oracle(real_two, 5.0, eps=0.01, quad=quad)
        assert abs(fine - exact) < abs(coarse - exact)


def right_half_width(xs, values):
    """Distance from the rightmost peak to where the curve falls to half of it on the right."""
    values = np.asarray(values)
    peak = rightmost_peak(xs, values)
    top = int(np.flatnonzero(xs == peak)[0])
    below = np.flatnonzero(values[top:] <= 0.5 * values[top])[0] + top
    x0, x1 = xs[below - 1], xs[below]
    y0, y1 = values[below - 1], values[below]
    crossing = x0 + (0.5 * values[top] - y0) * (x1 - x0) / (y1 - y0)
    return float(crossing - peak)


@pytest.fixture(scope="module")
def first_figure_curve():
    xs = np.arange(30.0, 76.0, 1.5)
    return xs, s1_curve(validate_spectrum(1, 50, FIG_LAMBDAS), xs)


@pytest.fixture(scope="module")
def second_figure_curve():
    xs = np.arange(160.0, 246.0, 3.0)
    return xs, s1_curve(validate_spectrum(1, 200, FIG_LAMBDAS), xs)


@pytest.mark.slow
class TestFigureReproduction:
    """Test the peak positions and widths of the ten-level example spectra."""

    def test_first_figure_peak(self, first_figure_curve):
        """Test that the rightmost maximum sits near x = 50 for n = 50."""
        xs, curve = first_figure_curve
        assert 45.0 <= rightmost_peak(xs, curve.values) <= 55.0

    def test_second_figure_peak(self, second_figure_curve):
        """Test that the rightmost maximum sits near x = 200 for n = 200."""
        xs, curve = second_figure_curve
        assert 190.0 <= rightmost_peak(xs, curve.values) <= 210.0

    def test_second_figure_default_tolerance(self, second_figure_curve):
        """Test that every point of the n = 200 grid evaluates at the default tolerances."""
        _, curve = second_figure_curve
        assert np.all(np.isfinite(curve.values))
        assert min(curve.values) >= -1e-6
        assert np.all(np.isfinite(curve.errors))

    def test_peak_narrows_with_n(self, first_figure_curve, second_figure_curve):
        """Test that the rightmost peak is narrower relative to its position at n = 200."""
        widths = []
        for xs, curve in (first_figure_curve, second_figure_curve):
            widths.append(right_half_width(xs, curve.values) / rightmost_peak(xs, curve.values))
        assert widths[1] < widths[0]
