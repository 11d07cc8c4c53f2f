"""Job files: YAML documents that mirror the command-line flags."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

import yaml

from src.config import (
    AUTO_GRID_POINTS,
    AUTO_GRID_SCALE,
    DEFAULT_ABS_TOL,
    DEFAULT_MAX_LEVELS,
    DEFAULT_PANEL_ORDER,
    DEFAULT_REL_TOL,
)
from src.quadrature import QuadratureConfig
from src.spectrum_model import EmpiricalSpectrum

COMMANDS = ["density", "mc", "compare", "validate"]


@dataclass
class JobConfig:
    """One CLI invocation.

    ``grid`` is "auto", a "MIN:MAX:N" string or a mapping with x_min, x_max and points.
    """

    command: str = "density"
    spectrum_path: str = "spectrum.json"
    output_path: str = ""
    grid: Any = "auto"
    samples: int = 100000
    bins: int | None = None
    bin_width: float | None = None
    seed: int = 0
    abs_tol: float = DEFAULT_ABS_TOL
    rel_tol: float = DEFAULT_REL_TOL
    threads: int | None = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def parsed_grid(self) -> tuple[float, float, int] | None:
        """(x_min, x_max, points), or None for the automatic grid."""
        grid = self.grid
        if grid is None or grid == "auto":
            return None
        if isinstance(grid, dict):
            return float(grid["x_min"]), float(grid["x_max"]), int(grid["points"])
        parts = str(grid).split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be 'auto' or MIN:MAX:N, got {grid!r}")
        return float(parts[0]), float(parts[1]), int(parts[2])

    def grid_spec(self, spectrum: EmpiricalSpectrum) -> tuple[float, float, int]:
        parsed = self.parsed_grid()
        if parsed is None:
            return 0.0, AUTO_GRID_SCALE * spectrum.n * spectrum.lambdas[-1], AUTO_GRID_POINTS
        return parsed

    def quadrature(self) -> QuadratureConfig:
        return QuadratureConfig(
            abs_tol=self.abs_tol,
            rel_tol=self.rel_tol,
            max_levels=DEFAULT_MAX_LEVELS,
            panel_order=DEFAULT_PANEL_ORDER,
        )

    def validate(self) -> dict[str, list[str]]:
        """Validate the job.

        Returns:
            Dictionary with 'errors' and 'warnings' lists
        """
        errors = []
        warnings = []

        if self.command not in COMMANDS:
            errors.append(
                f"❌ Invalid command: '{self.command}'. Valid options: {', '.join(COMMANDS)}"
            )

        if not self.spectrum_path:
            errors.append("❌ 'spectrum_path' is required")

        try:
            parsed = self.parsed_grid()
        except (KeyError, TypeError, ValueError) as e:
            errors.append(f"❌ Invalid grid: {e}")
            parsed = None
        if parsed is not None:
            x_min, x_max, points = parsed
            if points < 2:
                errors.append(f"❌ Grid needs at least 2 points, got {points}")
            if not x_min < x_max:
                errors.append(f"❌ Grid needs x_min < x_max, got {x_min} and {x_max}")

        if self.command in ("mc", "compare"):
            if self.samples < 1:
                errors.append(f"❌ 'samples' must be at least 1, got {self.samples}")
            if self.bins is not None and self.bin_width is not None:
                warnings.append("⚠️  Both 'bins' and 'bin_width' set; 'bin_width' wins")
            if self.bins is not None and self.bins < 1:
                errors.append(f"❌ 'bins' must be at least 1, got {self.bins}")
            if self.bin_width is not None and not self.bin_width > 0:
                errors.append(f"❌ 'bin_width' must be positive, got {self.bin_width}")
            if self.command == "compare" and self.samples < 10000:
                warnings.append(
                    f"⚠️  Only {self.samples} samples; few bins will reach 20 counts"
                )

        if not (self.abs_tol > 0 and self.rel_tol > 0):
            errors.append("❌ Tolerances must be positive")

        if self.threads is not None and self.threads < 1:
            errors.append(f"❌ 'threads' must be at least 1, got {self.threads}")

        if not self.output_path:
            warnings.append("⚠️  No 'output_path' set; a name under output/ will be chosen")

        return {"errors": errors, "warnings": warnings}


DEFAULT_JOB = JobConfig()


def load_job_from_yaml(path: Path) -> JobConfig:
    """Load a job from YAML; unknown keys are ignored."""
    with open(path, encoding="utf-8") as f:
        data = yaml.safe_load(f)
    if not data:
        return JobConfig()
    valid_keys = {f.name for f in fields(JobConfig)}
    return JobConfig(**{k: v for k, v in data.items() if k in valid_keys})


def save_job_to_yaml(job: JobConfig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        yaml.dump(job.to_dict(), f, default_flow_style=False, sort_keys=False)


def load_spectrum_file(path: Path, require_real_density: bool = False) -> EmpiricalSpectrum:
    """Parse the spectrum JSON document {"beta", "n", "lambda"}."""
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    spectrum = EmpiricalSpectrum.from_dict(data)
    if require_real_density:
        spectrum.require_real_density()
    return spectrum
