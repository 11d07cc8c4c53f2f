"""Tests for job files."""

import pytest

from src.errors import RealCaseTooSmallN
from src.job import (
    DEFAULT_JOB,
    JobConfig,
    load_job_from_yaml,
    load_spectrum_file,
    save_job_to_yaml,
)
from src.spectrum_model import validate_spectrum


class TestJobValidation:
    """Test job validation logic."""

    def test_default_job_has_no_errors(self):
        """Test that the default job only warns about the missing output path."""
        result = DEFAULT_JOB.validate()
        assert result["errors"] == []
        assert any("output_path" in w for w in result["warnings"])

    def test_invalid_command_generates_error(self):
        """Test that an unknown command is an error."""
        result = JobConfig(command="plot").validate()
        assert any("Invalid command" in e for e in result["errors"])
        assert result["errors"][0].startswith("❌")

    @pytest.mark.parametrize("grid", ["0:10", "a:b:c", "0:10:1", "5:1:10"])
    def test_bad_grids_generate_errors(self, grid):
        """Test malformed, too short and reversed grids."""
        result = JobConfig(grid=grid, output_path="x.csv").validate()
        assert result["errors"]

    def test_bins_and_width_warns(self):
        """Test that giving both bins and bin_width warns."""
        job = JobConfig(command="mc", bins=10, bin_width=0.5, output_path="h.json")
        result = job.validate()
        assert result["errors"] == []
        assert any("bin_width" in w for w in result["warnings"])
        assert result["warnings"][0].startswith("⚠️")

    def test_sample_count_and_tolerances(self):
        """Test that zero samples and non-positive tolerances are errors."""
        result = JobConfig(command="mc", samples=0, abs_tol=0.0).validate()
        assert len(result["errors"]) == 2

    def test_threads(self):
        """Test that the worker count must be positive."""
        assert JobConfig(threads=0).validate()["errors"]


class TestJobGrid:
    """Test grid parsing and the automatic grid."""

    def test_string_grid(self):
        """Test the MIN:MAX:N form."""
        assert JobConfig(grid="-1:10.5:23").parsed_grid() == (-1.0, 10.5, 23)

    def test_mapping_grid(self):
        """Test the mapping form used in YAML files."""
        job = JobConfig(grid={"x_min": 0, "x_max": 4, "points": 9})
        assert job.parsed_grid() == (0.0, 4.0, 9)

    def test_auto_grid(self):
        """Test that the automatic grid is [0, 1.3·n·Λ_p] with 400 points."""
        spectrum = validate_spectrum(1, 50, [0.2, 2.0])
        assert JobConfig().grid_spec(spectrum) == pytest.approx((0.0, 130.0, 400))

    def test_quadrature_overrides(self):
        """Test that tolerance overrides reach the quadrature settings."""
        config = JobConfig(abs_tol=1e-9, rel_tol=1e-7).quadrature()
        assert config.abs_tol == 1e-9
        assert config.rel_tol == 1e-7


class TestJobFiles:
    """Test YAML persistence and spectrum files."""

    def test_save_and_load(self, temp_dir):
        """Test that a saved job loads back unchanged."""
        job = JobConfig(command="compare", spectrum_path="s.json", bin_width=0.7, seed=4)
        path = temp_dir / "jobs" / "job.yaml"
        save_job_to_yaml(job, path)
        assert load_job_from_yaml(path) == job

    def test_unknown_keys_ignored(self, temp_dir):
        """Test that unrelated keys in the file are skipped."""
        path = temp_dir / "job.yaml"
        path.write_text("command: mc\nsamples: 12\ncolour: blue\n")
        job = load_job_from_yaml(path)
        assert job.command == "mc"
        assert job.samples == 12

    def test_empty_file(self, temp_dir):
        """Test that an empty file gives the default job."""
        path = temp_dir / "empty.yaml"
        path.write_text("")
        assert load_job_from_yaml(path) == JobConfig()

    def test_spectrum_file(self, write_spectrum):
        """Test loading and the optional real-density gate."""
        path = write_spectrum(1, 5, [2.0, 1.0])
        spectrum = load_spectrum_file(path)
        assert spectrum.lambdas == (1.0, 2.0)
        with pytest.raises(RealCaseTooSmallN):
            load_spectrum_file(path, require_real_density=True)
