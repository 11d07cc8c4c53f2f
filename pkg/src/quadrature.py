"""Adaptive Gauss–Legendre panel quadrature with endpoint substitutions.

All integrands are vectorized: a 1D integrand maps an array of nodes of shape (N,) to values of
shape (N,) or (N, ...), real or complex; a 2D integrand maps two arrays of shape (N,) the same way.
Error estimates compare each panel with the sum of its two (1D) or four (2D) children and are
reported in the max-norm over components.
"""

from __future__ import annotations

import heapq
import itertools
import logging
from collections.abc import Callable
from dataclasses import dataclass
from functools import lru_cache
from typing import Any

import numpy as np
from scipy.special import roots_legendre

from src.config import (
    DEFAULT_ABS_TOL,
    DEFAULT_MAX_LEVELS,
    DEFAULT_PANEL_ORDER,
    DEFAULT_REL_TOL,
    ROUNDOFF_FACTOR,
)
from src.errors import QuadratureNonConvergence

logger = logging.getLogger(__name__)

Integrand1D = Callable[[np.ndarray], Any]
Integrand2D = Callable[[np.ndarray, np.ndarray], Any]

_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and refinement limits for the adaptive rules."""

    abs_tol: float = DEFAULT_ABS_TOL
    rel_tol: float = DEFAULT_REL_TOL
    max_levels: int = DEFAULT_MAX_LEVELS
    panel_order: int = DEFAULT_PANEL_ORDER

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.panel_order < 4:
            raise ValueError(f"panel_order must be at least 4, got {self.panel_order}")
        if self.max_levels < 1:
            raise ValueError(f"max_levels must be at least 1, got {self.max_levels}")


@dataclass(frozen=True)
class QuadResult:
    value: Any
    err_estimate: float
    evaluations: int

    def __add__(self, other: QuadResult) -> QuadResult:
        return QuadResult(
            self.value + other.value,
            self.err_estimate + other.err_estimate,
            self.evaluations + other.evaluations,
        )


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``order``-point rule on [-1, 1]."""
    nodes, weights = roots_legendre(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _rows(scale: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Multiply each row of ``values`` by the matching entry of ``scale``."""
    return values * scale.reshape(scale.shape + (1,) * (values.ndim - 1))


def _refine(
    regions: list[Any],
    evaluate: Callable[[Any], tuple[Any, float, int]],
    split: Callable[[Any], list[Any]],
    config: QuadratureConfig,
    label: str,
) -> QuadResult:
    """Global adaptive subdivision driven by a max-heap of region errors.

    ``evaluate`` returns (value, round-off scale, evaluations). The scale bounds the magnitude
    of the terms summed into the value; once the total error falls below ROUNDOFF_FACTOR·ε
    times the summed scales the loop stops without raising.
    """
    evaluations = 0
    counter = itertools.count()
    heap: list[tuple[float, int, Any]] = []

    def assess(region: Any, whole: Any, depth: int) -> dict[str, Any]:
        nonlocal evaluations
        children = split(region)
        parts = []
        scale = 0.0
        for child in children:
            value, magnitude, count = evaluate(child)
            evaluations += count
            parts.append(value)
            scale += magnitude
        value = sum(parts[1:], parts[0])
        err = float(np.max(np.abs(value - whole)))
        return {
            "depth": depth,
            "value": value,
            "err": err,
            "scale": scale,
            "children": children,
            "parts": parts,
        }

    for region in regions:
        whole, _, count = evaluate(region)
        evaluations += count
        entry = assess(region, whole, 0)
        heapq.heappush(heap, (-entry["err"], next(counter), entry))

    def totals() -> tuple[Any, float, float]:
        ordered = sorted(heap, key=lambda item: item[1])
        value = sum((item[2]["value"] for item in ordered[1:]), ordered[0][2]["value"])
        err = sum(item[2]["err"] for item in ordered)
        return value, err, sum(item[2]["scale"] for item in ordered)

    value, err, scale = totals()
    while True:
        tol = max(config.abs_tol, config.rel_tol * float(np.max(np.abs(value))))
        if err <= tol:
            break
        if err <= ROUNDOFF_FACTOR * _EPS * scale:
            logger.debug("%s: stopped at round-off, err %.3e, tol %.3e", label, err, tol)
            break
        neg_err, key, worst = heap[0]
        if worst["depth"] >= config.max_levels:
            result = QuadResult(value, err, evaluations)
            raise QuadratureNonConvergence(
                f"{label}: error {err:.3e} above tolerance {tol:.3e} "
                f"after {config.max_levels} levels",
                result=result,
            )
        heapq.heappop(heap)
        for child, part in zip(worst["children"], worst["parts"]):
            entry = assess(child, part, worst["depth"] + 1)
            heapq.heappush(heap, (-entry["err"], next(counter), entry))
        value, err, scale = totals()

    logger.debug("%s: %d regions, err %.3e, %d evaluations", label, len(heap), err, evaluations)
    return QuadResult(value, err, evaluations)


def _adaptive_1d(
    f: Integrand1D, a: float, b: float, config: QuadratureConfig, paired: bool = False
) -> QuadResult:
    """With ``paired`` the integrand returns (values, magnitudes) for the round-off scale."""
    nodes, weights = gauss_legendre(config.panel_order)

    def evaluate(panel: tuple[float, float]) -> tuple[Any, float, int]:
        lo, hi = panel
        half = 0.5 * (hi - lo)
        out = f(0.5 * (lo + hi) + half * nodes)
        if paired:
            values, magnitudes = (np.asarray(part) for part in out)
        else:
            values = np.asarray(out)
            magnitudes = np.abs(values)
        value = half * np.tensordot(weights, values, axes=(0, 0))
        scale = float(np.max(half * np.tensordot(weights, magnitudes, axes=(0, 0))))
        return value, scale, len(nodes)

    def split(panel: tuple[float, float]) -> list[tuple[float, float]]:
        lo, hi = panel
        mid = 0.5 * (lo + hi)
        return [(lo, mid), (mid, hi)]

    return _refine([(a, b)], evaluate, split, config, "integrate_1d")


def integrate_1d(
    f: Integrand1D,
    interval: tuple[float, float],
    singular_endpoints: tuple[bool, bool] = (False, False),
    config: QuadratureConfig | None = None,
) -> QuadResult:
    """Integrate ``f`` over a finite interval.

    Flagged endpoints get the substitution r = endpoint ± t², which turns an inverse square root
    singularity into a smooth integrand. With both endpoints flagged the interval is split at
    its midpoint.
    """
    config = config or QuadratureConfig()
    a, b = float(interval[0]), float(interval[1])
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError(f"interval must be finite, got {interval}")
    if b < a:
        result = integrate_1d(f, (b, a), singular_endpoints[::-1], config)
        return QuadResult(-result.value, result.err_estimate, result.evaluations)
    if a == b:
        zero = 0.0 * np.asarray(f(np.array([a])))[0]
        return QuadResult(zero, 0.0, 1)

    left, right = singular_endpoints
    if left and right:
        mid = 0.5 * (a + b)
        return integrate_1d(f, (a, mid), (True, False), config) + integrate_1d(
            f, (mid, b), (False, True), config
        )
    if left:
        return _adaptive_1d(
            lambda t: _rows(2.0 * t, np.asarray(f(a + t * t))), 0.0, np.sqrt(b - a), config
        )
    if right:
        return _adaptive_1d(
            lambda t: _rows(2.0 * t, np.asarray(f(b - t * t))), 0.0, np.sqrt(b - a), config
        )
    return _adaptive_1d(f, a, b, config)


def _axis_pieces(
    interval: tuple[float, float], flags: tuple[bool, bool]
) -> list[tuple[Callable, Callable, tuple[float, float]]]:
    """(map, jacobian, parameter interval) per piece of one axis after substitution."""
    lo, hi = float(interval[0]), float(interval[1])
    left, right = flags
    if left and right:
        mid = 0.5 * (lo + hi)
        return _axis_pieces((lo, mid), (True, False)) + _axis_pieces((mid, hi), (False, True))
    if left:
        return [(lambda t: lo + t * t, lambda t: 2.0 * t, (0.0, float(np.sqrt(hi - lo))))]
    if right:
        return [(lambda t: hi - t * t, lambda t: 2.0 * t, (0.0, float(np.sqrt(hi - lo))))]
    return [(lambda t: t, np.ones_like, (lo, hi))]


def integrate_2d_cell(
    f: Integrand2D,
    cell_a: tuple[float, float],
    cell_b: tuple[float, float],
    diagonal_split: bool = False,
    config: QuadratureConfig | None = None,
    singular_a: tuple[bool, bool] = (False, False),
    singular_b: tuple[bool, bool] = (False, False),
) -> QuadResult:
    """Integrate ``f(r_a, r_b)`` over cell_a × cell_b with tensor-product panels.

    With ``diagonal_split`` the part of the rectangle straddling r_a = r_b is integrated as two
    triangles (Duffy map) so kinks like |r_a − r_b| sit on panel edges. Endpoint substitutions
    are only available without diagonal splitting.
    """
    config = config or QuadratureConfig()
    order = config.panel_order
    nodes, weights = gauss_legendre(order)
    unit_nodes = 0.5 * (nodes + 1.0)
    unit_weights = 0.5 * weights
    uu, vv = (grid.ravel() for grid in np.meshgrid(unit_nodes, unit_nodes, indexing="ij"))
    ww = np.outer(unit_weights, unit_weights).ravel()

    def weighted(jac: np.ndarray, values: np.ndarray) -> tuple[Any, float]:
        value = np.tensordot(jac, values, axes=(0, 0))
        scale = float(np.max(np.tensordot(np.abs(jac), np.abs(values), axes=(0, 0))))
        return value, scale

    def evaluate(region: tuple) -> tuple[Any, float, int]:
        kind, func, a0, a1, b0, b1 = region
        if kind == "rect":
            ra = a0 + (a1 - a0) * uu
            rb = b0 + (b1 - b0) * vv
            value, scale = weighted((a1 - a0) * (b1 - b0) * ww, np.asarray(func(ra, rb)))
            return value, scale, len(ww)
        # diagonal square [a0, a1]²; lower triangle r_b < r_a, then its mirror
        side = a1 - a0
        outer = a0 + side * uu
        inner = a0 + side * uu * vv
        jac = ww * side * side * uu
        lower, lower_scale = weighted(jac, np.asarray(func(outer, inner)))
        upper, upper_scale = weighted(jac, np.asarray(func(inner, outer)))
        return lower + upper, lower_scale + upper_scale, 2 * len(ww)

    def split(region: tuple) -> list[tuple]:
        kind, func, a0, a1, b0, b1 = region
        am, bm = 0.5 * (a0 + a1), 0.5 * (b0 + b1)
        if kind == "rect":
            return [
                ("rect", func, a0, am, b0, bm),
                ("rect", func, a0, am, bm, b1),
                ("rect", func, am, a1, b0, bm),
                ("rect", func, am, a1, bm, b1),
            ]
        return [
            ("diag", func, a0, am, a0, am),
            ("rect", func, am, a1, a0, am),
            ("rect", func, a0, am, am, a1),
            ("diag", func, am, a1, am, a1),
        ]

    regions: list[tuple] = []
    if diagonal_split:
        if any(singular_a) or any(singular_b):
            raise ValueError("endpoint substitutions cannot be combined with diagonal_split")
        lo, hi = max(cell_a[0], cell_b[0]), min(cell_a[1], cell_b[1])
        cuts_a = sorted({float(cell_a[0]), float(cell_a[1])} | ({lo, hi} if lo < hi else set()))
        cuts_b = sorted({float(cell_b[0]), float(cell_b[1])} | ({lo, hi} if lo < hi else set()))
        for a0, a1 in zip(cuts_a, cuts_a[1:]):
            for b0, b1 in zip(cuts_b, cuts_b[1:]):
                kind = "diag" if (lo < hi and (a0, a1) == (lo, hi) == (b0, b1)) else "rect"
                regions.append((kind, f, a0, a1, b0, b1))
    else:
        for map_a, jac_a, (s0, s1) in _axis_pieces(cell_a, singular_a):
            for map_b, jac_b, (t0, t1) in _axis_pieces(cell_b, singular_b):

                def mapped(s, t, map_a=map_a, jac_a=jac_a, map_b=map_b, jac_b=jac_b):
                    return _rows(jac_a(s) * jac_b(t), np.asarray(f(map_a(s), map_b(t))))

                regions.append(("rect", mapped, s0, s1, t0, t1))

    return _refine(regions, evaluate, split, config, "integrate_2d_cell")


def finite_part_1d(
    g: Integrand1D, delta: float, config: QuadratureConfig | None = None
) -> QuadResult:
    """Hadamard finite part of ∫₀^δ g(u) u^{−3/2} du for g smooth at u = 0.

    Evaluated as 2∫₀^{√δ} (g(t²) − g(0))/t² dt − 2g(0)/√δ. The subtraction cancels near
    t = 0, so the round-off scale counts |g(t²)| + |g(0)| rather than the difference.
    """
    config = config or QuadratureConfig()
    g0 = np.asarray(g(np.zeros(1)))[0]
    root = float(np.sqrt(delta))

    def smooth(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        u = t * t
        gu = np.asarray(g(u))
        return _rows(2.0 / u, gu - g0), _rows(2.0 / u, np.abs(gu) + np.abs(g0))

    body = _adaptive_1d(smooth, 0.0, root, config, paired=True)
    return QuadResult(body.value - 2.0 * g0 / root, body.err_estimate, body.evaluations + 1)


def principal_value_window(
    g: Integrand1D,
    center: float,
    delta_minus: float,
    delta_plus: float,
    config: QuadratureConfig | None = None,
) -> QuadResult:
    """Regularized value of ½∫ g(r)(r − c − i0)^{−3/2} dr over [c − δ₋, c + δ₊].

    Uses partial integration: −g(r)(r − c − i0)^{−1/2} at the window ends plus
    ∫ g′(r)(r − c − i0)^{−1/2} dr, with g′ from central differences.
    """
    config = config or QuadratureConfig()
    h = 1e-5 * (delta_minus + delta_plus)

    def derivative(r: np.ndarray) -> np.ndarray:
        return (np.asarray(g(r + h)) - np.asarray(g(r - h))) / (2.0 * h)

    ends = np.asarray(g(np.array([center + delta_plus, center - delta_minus])))
    boundary = -ends[0] / np.sqrt(delta_plus) + 1j * ends[1] / np.sqrt(delta_minus)

    right = integrate_1d(lambda u: derivative(center + u), (0.0, delta_plus), (True, False), config)
    left = integrate_1d(lambda u: derivative(center - u), (0.0, delta_minus), (True, False), config)
    value = boundary + right.value + 1j * left.value
    return QuadResult(
        value,
        right.err_estimate + left.err_estimate,
        right.evaluations + left.evaluations + 2,
    )

