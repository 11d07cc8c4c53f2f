"""Monte-Carlo oracle: sample W, diagonalize WW†, histogram the eigenvalues."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any

import numpy as np

from src.config import JACOBI_MAX_SWEEPS, JACOBI_TOL, MC_CHUNK_SIZE, WISHART_THREADS
from src.errors import JacobiNonConvergence
from src.spectrum_model import EmpiricalSpectrum

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngSeed:
    """Seed of the counter-based generator; the sample index selects the substream."""

    seed: int

    def generator(self, sample_index: int) -> np.random.Generator:
        # sample index lives in the high word of the 256-bit counter
        counter = np.array([0, 0, 0, sample_index & _MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=self.seed & _MASK64, counter=counter))


@dataclass(frozen=True)
class SpectrumHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    sigma: np.ndarray
    seed: int
    samples: int

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    def to_dict(self) -> dict[str, Any]:
        return {
            "bin_edges": self.bin_edges.tolist(),
            "counts": [int(c) for c in self.counts],
            "density": self.density.tolist(),
            "sigma": self.sigma.tolist(),
            "seed": self.seed,
            "samples": self.samples,
        }


def box_muller(uniforms: np.ndarray) -> np.ndarray:
    """Standard normals from consecutive uniform pairs (u₁, u₂) → (z cos, z sin)."""
    pairs = uniforms.reshape(-1, 2)
    radius = np.sqrt(-2.0 * np.log1p(-pairs[:, 0]))
    angle = 2.0 * math.pi * pairs[:, 1]
    return np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1).ravel()


def sample_w(spectrum: EmpiricalSpectrum, seed: int, sample_index: int) -> np.ndarray:
    """One p × n data matrix with row variances Λ_j (E|W_jk|² = Λ_j for both classes)."""
    p, n = spectrum.p, spectrum.n
    count = p * n * spectrum.beta
    pairs = (count + 1) // 2
    normals = box_muller(RngSeed(seed).generator(sample_index).random(2 * pairs))[:count]
    lam = spectrum.array[:, None]
    if spectrum.beta == 1:
        return np.sqrt(lam) * normals.reshape(p, n)
    parts = normals.reshape(p, n, 2)
    return np.sqrt(lam / 2.0) * (parts[..., 0] + 1j * parts[..., 1])


def jacobi_eigenvalues(stack: np.ndarray) -> np.ndarray:
    """Eigenvalues of a stack (B, m, m) of real symmetric matrices by cyclic Jacobi.

    Matrices that have converged are frozen, so each result depends only on its own matrix.
    """
    a = np.array(stack, dtype=float, copy=True)
    if a.ndim == 2:
        a = a[None]
    batch, m, _ = a.shape
    scale = np.sqrt(np.sum(a * a, axis=(1, 2)))
    upper = np.triu_indices(m, k=1)

    for sweep in range(JACOBI_MAX_SWEEPS + 1):
        off = np.sqrt(2.0 * np.sum(a[:, upper[0], upper[1]] ** 2, axis=1))
        active = off > JACOBI_TOL * scale
        if not active.any():
            break
        if sweep == JACOBI_MAX_SWEEPS:
            raise JacobiNonConvergence(
                f"{int(active.sum())} matrices not diagonalized after {JACOBI_MAX_SWEEPS} sweeps"
            )
        idx = np.flatnonzero(active)
        sub = a[idx]
        for p_ in range(m - 1):
            for q in range(p_ + 1, m):
                apq = sub[:, p_, q]
                nonzero = apq != 0.0
                safe = np.where(nonzero, apq, 1.0)
                theta = (sub[:, q, q] - sub[:, p_, p_]) / (2.0 * safe)
                sign = np.where(theta >= 0.0, 1.0, -1.0)
                t = np.where(nonzero, sign / (np.abs(theta) + np.sqrt(theta * theta + 1.0)), 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_p = sub[:, :, p_].copy()
                col_q = sub[:, :, q].copy()
                sub[:, :, p_] = c[:, None] * col_p - s[:, None] * col_q
                sub[:, :, q] = s[:, None] * col_p + c[:, None] * col_q
                row_p = sub[:, p_, :].copy()
                row_q = sub[:, q, :].copy()
                sub[:, p_, :] = c[:, None] * row_p - s[:, None] * row_q
                sub[:, q, :] = s[:, None] * row_p + c[:, None] * row_q
        a[idx] = sub

    return np.sort(np.diagonal(a, axis1=1, axis2=2), axis=1)


def _wwdag_eigenvalues(batch: np.ndarray) -> np.ndarray:
    """Sorted eigenvalues of W W† for a stack of data matrices (B, p, n)."""
    if np.iscomplexobj(batch):
        h = batch @ np.conj(np.swapaxes(batch, 1, 2))
        embedded = np.block([[h.real, -h.imag], [h.imag, h.real]])
        doubled = jacobi_eigenvalues(embedded)
        # each Hermitian eigenvalue appears twice in the real embedding
        return 0.5 * (doubled[:, 0::2] + doubled[:, 1::2])
    return jacobi_eigenvalues(batch @ np.swapaxes(batch, 1, 2))


def eigenvalues_wwdag(w: np.ndarray) -> np.ndarray:
    """Sorted eigenvalues of W W† for a single p × n matrix with p ≤ n."""
    w = np.asarray(w)
    if w.shape[0] > w.shape[1]:
        raise ValueError(f"expected p <= n, got shape {w.shape}")
    return _wwdag_eigenvalues(w[None])[0]


def _chunk(spectrum: EmpiricalSpectrum, seed: int, start: int, stop: int) -> np.ndarray:
    batch = np.stack([sample_w(spectrum, seed, index) for index in range(start, stop)])
    return _wwdag_eigenvalues(batch)


def sample_eigenvalues(
    spectrum: EmpiricalSpectrum, samples: int, seed: int = 0, threads: int | None = None
) -> np.ndarray:
    """Eigenvalues of ``samples`` independent matrices, shape (samples, p), in sample order."""
    if samples < 1:
        raise ValueError(f"samples must be at least 1, got {samples}")
    bounds = [(start, min(start + MC_CHUNK_SIZE, samples)) for start in range(0, samples, MC_CHUNK_SIZE)]
    workers = max(1, threads or WISHART_THREADS)
    logger.info("sampling %d matrices in %d chunks on %d threads", samples, len(bounds), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        chunks = list(pool.map(lambda b: _chunk(spectrum, seed, *b), bounds))
    return np.concatenate(chunks, axis=0)


def eigenvalue_mean(eigenvalues: np.ndarray) -> float:
    """Sample mean of all eigenvalues; its expectation is (n/p)·ΣΛ_j."""
    return float(np.mean(eigenvalues))


def _edges(lo: float, hi: float, bins: int | None, bin_width: float | None) -> np.ndarray:
    if bin_width is not None:
        if not bin_width > 0:
            raise ValueError(f"bin_width must be positive, got {bin_width}")
        count = max(1, math.ceil((hi - lo) / bin_width))
        return lo + bin_width * np.arange(count + 1)
    count = bins if bins is not None else 100
    if count < 1:
        raise ValueError(f"bins must be at least 1, got {count}")
    return np.linspace(lo, hi, count + 1)


def mc_histogram(
    spectrum: EmpiricalSpectrum,
    samples: int,
    bins: int | None = None,
    seed: int = 0,
    bin_width: float | None = None,
    value_range: tuple[float, float] | None = None,
    threads: int | None = None,
) -> SpectrumHistogram:
    """Histogram of all p·samples eigenvalues, normalized to unit area."""
    eigenvalues = sample_eigenvalues(spectrum, samples, seed, threads)
    if value_range is None:
        top = float(eigenvalues.max())
        value_range = (0.0, 1.02 * top if top > 0 else 1.0)
    edges = _edges(float(value_range[0]), float(value_range[1]), bins, bin_width)

    counts = np.zeros(len(edges) - 1, dtype=np.int64)
    for start in range(0, samples, MC_CHUNK_SIZE):
        counts += np.histogram(eigenvalues[start : start + MC_CHUNK_SIZE].ravel(), bins=edges)[0]

    norm = samples * spectrum.p * np.diff(edges)
    return SpectrumHistogram(
        bin_edges=edges,
        counts=counts,
        density=counts / norm,
        sigma=np.sqrt(counts) / norm,
        seed=int(seed),
        samples=int(samples),
    )
