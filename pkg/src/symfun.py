"""Elementary symmetric functions, leave-out spectra and the g_Λ function."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from src.errors import DegenerateSpectrum


@dataclass(frozen=True)
class SymTable:
    """E₀…E_p of a spectrum; indices outside 0…p read as zero."""

    e: tuple[float, ...]

    def __getitem__(self, k: int) -> float:
        if k < 0 or k >= len(self.e):
            return 0.0
        return self.e[k]

    @property
    def p(self) -> int:
        return len(self.e) - 1

    def polynomial(self, t: complex) -> complex:
        """Σ_k E_k t^k, which equals ∏_j (1 + t λ_j)."""
        return sum(e_k * t**k for k, e_k in enumerate(self.e))


def elementary_symmetric(values: Sequence[float]) -> SymTable:
    """E_k by the product recurrence E_k ← E_k + λ_m E_{k−1}, no subtractions."""
    e = np.zeros(len(values) + 1)
    e[0] = 1.0
    for m, lam in enumerate(values, start=1):
        e[1 : m + 1] = e[1 : m + 1] + lam * e[0:m]
    return SymTable(tuple(e.tolist()))


def leave_out(values: Sequence[float], j: int) -> list[float]:
    """Spectrum without the eigenvalue at 1-based position j."""
    if not 1 <= j <= len(values):
        raise IndexError(f"index {j} out of range for spectrum of size {len(values)}")
    return [v for idx, v in enumerate(values, start=1) if idx != j]


def leave_out2(values: Sequence[float], j: int, l: int) -> list[float]:  # noqa: E741
    """Spectrum without the eigenvalues at 1-based positions j and l (j != l)."""
    size = len(values)
    if j == l or not (1 <= j <= size and 1 <= l <= size):
        raise IndexError(f"need distinct indices in 1..{size}, got {j}, {l}")
    return [v for idx, v in enumerate(values, start=1) if idx not in (j, l)]


def leave_out_tables(values: Sequence[float]) -> np.ndarray:
    """Array T[j, k] = E_k(Λ^ĵ) for 0-based j, k = 0…p−1."""
    p = len(values)
    table = np.zeros((p, max(p, 1)))
    for j in range(p):
        table[j, :p] = elementary_symmetric(leave_out(values, j + 1)).e
    return table


def leave_out2_tables(values: Sequence[float]) -> np.ndarray:
    """Array T[j, l, k] = E_k(Λ^ĵl) for 0-based j != l; diagonal entries are zero."""
    p = len(values)
    table = np.zeros((p, p, max(p - 1, 1)))
    for j in range(p):
        for l in range(j + 1, p):  # noqa: E741
            row = elementary_symmetric(leave_out2(values, j + 1, l + 1)).e
            table[j, l, : p - 1] = row
            table[l, j, : p - 1] = row
    return table


def g_lambda(values: Sequence[float], x: float, s: complex) -> complex:
    """g_Λ(x; s) = e^{−ixs} ∏_j (1 + isΛ_j)."""
    product = complex(1.0)
    for lam in values:
        product *= 1 + 1j * s * lam
    return complex(np.exp(-1j * x * s)) * product


@dataclass(frozen=True)
class TruncatedExponentialProduct:
    """First n Taylor coefficients of g_Λ(x; s) in s."""

    values: tuple[float, ...]
    x: float
    coeffs: tuple[complex, ...]

    @property
    def n(self) -> int:
        return len(self.coeffs)

    def lower(self, s: complex) -> complex:
        """g^{[<n]}(x; s), summed with exact rounding per component."""
        terms = [c * s**t for t, c in enumerate(self.coeffs)]
        return complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))

    def upper(self, s: complex) -> complex:
        """g^{[≥n]}(x; s) = g_Λ − g^{[<n]}."""
        return g_lambda(self.values, self.x, s) - self.lower(s)


def g_taylor_coeffs(values: Sequence[float], x: float, n: int) -> TruncatedExponentialProduct:
    """Convolve Σ i^k E_k s^k with the series of e^{−ixs} up to order n − 1."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    table = elementary_symmetric(values)
    poly = [(1j**k) * table[k] for k in range(n)]
    expo = [complex(1.0)]
    for m in range(1, n):
        expo.append(expo[-1] * (-1j * x) / m)
    coeffs = tuple(sum(poly[k] * expo[t - k] for k in range(t + 1)) for t in range(n))
    return TruncatedExponentialProduct(tuple(values), float(x), coeffs)


def vandermonde_det(values: Sequence[float]) -> float:
    """∏_{j>j′} (λ_j^{−1} − λ_{j′}^{−1}), the determinant of D_{k,j} = λ_j^{−k+1}."""
    inv = [1.0 / v for v in values]
    det = 1.0
    for j in range(len(inv)):
        for jp in range(j):
            diff = inv[j] - inv[jp]
            if diff == 0.0:
                raise DegenerateSpectrum(f"repeated eigenvalue {values[j]!r}")
            det *= diff
    return det


def minor_ratio(values: Sequence[float], k: int, j: int) -> float:
    """det D^{(kj)} / det D for 1-based row k and column j of D_{k,j} = λ_j^{−k+1}."""
    lam_j = values[j - 1]
    others = leave_out(values, j)
    denom = 1.0
    for lam in others:
        denom *= 1.0 - lam / lam_j
    if denom == 0.0:
        raise DegenerateSpectrum(f"repeated eigenvalue {lam_j!r}")
    sign = -1.0 if (j - 1) % 2 else 1.0
    return sign * elementary_symmetric(others)[k - 1] / denom
