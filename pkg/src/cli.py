"""Job runners behind the command-line front end.

Each ``cmd_*`` function takes a validated ``JobConfig``, writes exactly one artifact and returns
its path together with an exit code. ``run_job`` wraps them with the JSON error contract.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from src.complex_density import s2_curve
from src.config import OUTPUT_DIR
from src.errors import EnsembleMismatch, WishartError
from src.generating_function_checks import (
    clt_limit_check,
    density_function,
    normalization_check,
    oracle_agreement_check,
    z1_unit_check,
)
from src.job import JobConfig, load_spectrum_file
from src.montecarlo import SpectrumHistogram, mc_histogram
from src.quadrature import QuadratureConfig, gauss_legendre
from src.real_density import s1_curve
from src.spectrum_model import EmpiricalSpectrum

logger = logging.getLogger(__name__)

# bins below this count are excluded from the agreement fraction
MIN_BIN_COUNT = 20
Z_LIMIT = 3.0
PASS_FRACTION = 0.95

Z1_TOL = 1e-6
CLT_TOL = 5e-2
NORMALIZATION_TOL = 1e-3


def _output_path(job: JobConfig, prefix: str, suffix: str) -> Path:
    if job.output_path:
        return Path(job.output_path)
    return OUTPUT_DIR / f"{prefix}_{Path(job.spectrum_path).stem}{suffix}"


def _write_json(document: dict[str, Any], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(document, f, indent=2)
        f.write("\n")


def cmd_density(job: JobConfig) -> tuple[Path, int]:
    """Write the ``x,S,err`` CSV of S_β on the job grid."""
    spectrum = load_spectrum_file(Path(job.spectrum_path))
    x_min, x_max, points = job.grid_spec(spectrum)
    grid = np.linspace(x_min, x_max, points)

    if spectrum.beta == 2:
        curve = s2_curve(spectrum, grid)
    else:
        curve = s1_curve(spectrum, grid, job.quadrature())

    path = _output_path(job, "density", ".csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({"x": curve.grid, "S": curve.values, "err": curve.errors})
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    logger.info("wrote %d density rows to %s", len(frame), path)
    return path, 0


def _histogram(job: JobConfig, spectrum: EmpiricalSpectrum) -> SpectrumHistogram:
    return mc_histogram(
        spectrum,
        job.samples,
        bins=job.bins,
        seed=job.seed,
        bin_width=job.bin_width,
        threads=job.threads,
    )


def cmd_mc(job: JobConfig) -> tuple[Path, int]:
    spectrum = load_spectrum_file(Path(job.spectrum_path))
    histogram = _histogram(job, spectrum)
    path = _output_path(job, "mc", ".json")
    _write_json(histogram.to_dict(), path)
    logger.info("wrote histogram with %d bins to %s", len(histogram.counts), path)
    return path, 0


def compare_to_analytic(
    histogram: SpectrumHistogram,
    spectrum: EmpiricalSpectrum,
    quad: QuadratureConfig | None = None,
) -> dict[str, Any]:
    """Bin-averaged analytic density against the histogram, as z-scores per bin."""
    nodes, weights = gauss_legendre(4)
    edges = histogram.bin_edges
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    points = (0.5 * (hi + lo))[:, None] + half[:, None] * nodes[None, :]
    values = density_function(spectrum, quad)(points.ravel()).reshape(points.shape)
    # mean of S over each bin
    analytic = 0.5 * (values @ weights)

    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(histogram.sigma > 0, (histogram.density - analytic) / histogram.sigma, np.nan)

    eligible = histogram.counts >= MIN_BIN_COUNT
    within = eligible & (np.abs(z) <= Z_LIMIT)
    n_eligible = int(eligible.sum())
    fraction = float(within.sum() / n_eligible) if n_eligible else 0.0

    bins = [
        {
            "lo": float(a),
            "hi": float(b),
            "count": int(c),
            "density": float(d),
            "sigma": float(s),
            "analytic": float(f),
            "z": None if np.isnan(score) else float(score),
        }
        for a, b, c, d, s, f, score in zip(
            lo, hi, histogram.counts, histogram.density, histogram.sigma, analytic, z
        )
    ]
    return {
        "samples": histogram.samples,
        "seed": histogram.seed,
        "eligible_bins": n_eligible,
        "fraction_within_3sigma": fraction,
        "passed": n_eligible > 0 and fraction >= PASS_FRACTION,
        "bins": bins,
    }


def cmd_compare(job: JobConfig) -> tuple[Path, int]:
    spectrum = load_spectrum_file(Path(job.spectrum_path))
    if spectrum.beta == 1:
        spectrum.require_real_density()
    histogram = _histogram(job, spectrum)
    report = compare_to_analytic(histogram, spectrum, job.quadrature())
    path = _output_path(job, "compare", ".json")
    _write_json(report, path)
    logger.info(
        "compare: %.3f of %d bins within 3 sigma",
        report["fraction_within_3sigma"],
        report["eligible_bins"],
    )
    return path, 0 if report["passed"] else 1


def _validation_report(spectrum: EmpiricalSpectrum, quad: QuadratureConfig) -> dict[str, Any]:
    checks: list[dict[str, Any]] = []

    for x0 in (complex(1.0, 2.0), complex(-5.0, 0.0)):
        deviation = z1_unit_check(spectrum, x0, quad)
        checks.append(
            {
                "name": "z1_unit",
                "x0": [x0.real, x0.imag],
                "deviation": deviation,
                "passed": deviation < Z1_TOL,
            }
        )

    top = spectrum.lambdas[-1]
    x0, x1 = complex(1.5 * top, top), 0.5 * top
    n_sequence = (50, 400)
    deviations = clt_limit_check(spectrum, x0, x1, n_sequence, quad)
    checks.append(
        {
            "name": "clt_limit",
            "n": list(n_sequence),
            "deviations": deviations,
            "passed": deviations[-1] < CLT_TOL and deviations[-1] <= deviations[0],
        }
    )

    mean = spectrum.mean_eigenvalue
    points = [mean * f for f in (0.5, 0.75, 1.0, 1.25, 1.5)]
    rows = oracle_agreement_check(spectrum, points, quad)
    checks.append(
        {
            "name": "oracle_agreement",
            "points": [
                {"x": row.x, "exact": row.exact, "oracle": row.oracle, "within": row.within}
                for row in rows
            ],
            "passed": all(row.within for row in rows),
        }
    )

    mass, first = normalization_check(spectrum, quad)
    checks.append(
        {
            "name": "normalization",
            "mass": mass,
            "first_moment": first,
            "expected_first_moment": mean,
            "passed": abs(mass - 1.0) < NORMALIZATION_TOL
            and abs(first - mean) < NORMALIZATION_TOL * mean,
        }
    )

    return {
        "spectrum": spectrum.to_dict(),
        "passed": all(check["passed"] for check in checks),
        "checks": checks,
    }


def cmd_validate(job: JobConfig) -> tuple[Path, int]:
    """Run the real-case self-consistency checks and write a pass/fail report."""
    spectrum = load_spectrum_file(Path(job.spectrum_path))
    if spectrum.beta != 1:
        raise EnsembleMismatch("validate runs the real-case checks and needs beta=1")
    spectrum.require_real_density()
    report = _validation_report(spectrum, job.quadrature())
    path = _output_path(job, "validate", ".json")
    _write_json(report, path)
    for check in report["checks"]:
        logger.info("check %s: %s", check["name"], "pass" if check["passed"] else "FAIL")
    return path, 0 if report["passed"] else 1


COMMAND_HANDLERS = {
    "density": cmd_density,
    "mc": cmd_mc,
    "compare": cmd_compare,
    "validate": cmd_validate,
}


def error_document(error: Exception) -> dict[str, str]:
    if isinstance(error, WishartError):
        return error.to_dict()
    return {"error": type(error).__name__, "message": str(error)}


def run_job(job: JobConfig) -> tuple[Path | None, int]:
    """Dispatch a job; failures become a JSON line on stderr and exit code 1."""
    try:
        return COMMAND_HANDLERS[job.command](job)
    except (WishartError, ValueError, TypeError, ArithmeticError, OSError, KeyError) as e:
        logger.error("%s failed: %s", job.command, e)
        print(json.dumps(error_document(e)), file=sys.stderr)
        return None, 1
