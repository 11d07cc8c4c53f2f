"""Configuration for the Wishart one-point function toolkit."""

from __future__ import annotations

import logging
import os
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def _thread_count(raw: str | None) -> int:
    cores = os.cpu_count() or 1
    if not raw:
        return cores
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value < 1:
        logging.getLogger(__name__).warning(
            "WISHART_THREADS=%r is not a positive integer, using %d", raw, cores
        )
        return cores
    return value


# Worker threads for Monte-Carlo sampling (absent or invalid means all cores)
WISHART_THREADS = _thread_count(os.getenv("WISHART_THREADS"))

# Spectrum validation
DEGENERACY_TOL = 1e-8
ERR_FLOOR = 1e-9

# Quadrature defaults
DEFAULT_ABS_TOL = 1e-6
DEFAULT_REL_TOL = 1e-4
DEFAULT_MAX_LEVELS = 12
DEFAULT_PANEL_ORDER = 16
# Adaptive refinement stops once its error is within this many ulps of the summed magnitudes
ROUNDOFF_FACTOR = 50.0

# Weight (r_a r_b)^{(n-3)/2} e^{-(r_a+r_b)/2} is cut where its log drops this far below the peak
TAIL_LOG_DROP = 40.0
# Cells whose weight never rises within this many e-folds of the peak are skipped
PRUNE_LOG_DROP = 50.0

# Density grids
AUTO_GRID_POINTS = 400
AUTO_GRID_SCALE = 1.3

# Monte-Carlo
MC_CHUNK_SIZE = 2000
JACOBI_MAX_SWEEPS = 100
JACOBI_TOL = 1e-12

# Output
OUTPUT_DIR = Path(os.getenv("WISHART_OUTPUT_DIR", "output"))

# Logging Configuration
LOG_LEVEL = os.getenv("WISHART_LOG_LEVEL", "INFO")
LOG_FILE = OUTPUT_DIR / "wishart.log"
