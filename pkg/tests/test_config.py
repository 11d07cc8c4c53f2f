"""Tests for environment-driven configuration."""

import logging
from unittest.mock import patch

import pytest

from src.config import _thread_count


class TestThreadCount:
    """Test parsing of WISHART_THREADS."""

    def test_absent_uses_all_cores(self):
        """Test that an unset variable falls back to the CPU count."""
        with patch("src.config.os.cpu_count", return_value=6):
            assert _thread_count(None) == 6
            assert _thread_count("") == 6

    def test_positive_integer(self):
        """Test that a valid count is used as given."""
        assert _thread_count("3") == 3

    @pytest.mark.parametrize("raw", ["eight", "2.5", "0", "-4"])
    def test_invalid_falls_back_with_warning(self, raw, caplog):
        """Test that a malformed value warns and falls back instead of failing at import."""
        with patch("src.config.os.cpu_count", return_value=4):
            with caplog.at_level(logging.WARNING, logger="src.config"):
                assert _thread_count(raw) == 4
        assert "WISHART_THREADS" in caplog.text
