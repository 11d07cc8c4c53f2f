"""Pytest configuration and fixtures for testing."""

import json
import tempfile
from pathlib import Path

import pytest

from src.quadrature import QuadratureConfig
from src.spectrum_model import validate_spectrum

FIG_LAMBDAS = [1.0, 0.49, 0.4225, 0.36, 0.25, 0.09, 0.0729, 0.0529, 0.04, 0.0225]


@pytest.fixture
def temp_dir():
    """Create a temporary directory for testing."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def quad():
    """Quadrature settings tight enough for oracle comparisons."""
    return QuadratureConfig(abs_tol=1e-8, rel_tol=1e-6)


@pytest.fixture
def real_two():
    """Real ensemble, p = 2, n = 10."""
    return validate_spectrum(1, 10, [1.0, 0.5])


@pytest.fixture
def real_three():
    """Real ensemble, p = 3, n = 14."""
    return validate_spectrum(1, 14, [1.5, 0.3, 0.7])


@pytest.fixture
def complex_two():
    """Complex ensemble, two levels, n = 20."""
    return validate_spectrum(2, 20, [0.5, 1.0])


@pytest.fixture
def fig1_spectrum():
    return validate_spectrum(1, 50, FIG_LAMBDAS)


@pytest.fixture
def write_spectrum(temp_dir):
    """Write a spectrum JSON document and return its path."""

    def _write(beta, n, lambdas, name="spectrum.json"):
        path = temp_dir / name
        path.write_text(json.dumps({"beta": beta, "n": n, "lambda": list(lambdas)}))
        return path

    return _write
