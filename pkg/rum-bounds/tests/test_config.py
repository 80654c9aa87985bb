"""Tests for settings, logging setup and settings-driven defaults."""

import logging
from unittest.mock import MagicMock, patch

import pytest
from pydantic import ValidationError

from rumbounds.config import Settings, get_settings, setup_logging
from rumbounds.main import main
from rumbounds.services.lp import Arithmetic, SolverConfig
from rumbounds.services.oracle import BruteForceOracle
from rumbounds.services.rational import TypeEnumerator


class TestSettings:
    """Test cases for Settings and get_settings."""

    def test_defaults(self, monkeypatch):
        """Test every knob has a default."""
        monkeypatch.delenv("RUMBOUNDS_VERIFY_SOLUTIONS")

        settings = Settings(_env_file=None)

        assert settings.tolerance == 1e-9
        assert settings.arithmetic == "float"
        assert settings.max_types == 1_000_000
        assert settings.oracle_max_columns == 20
        assert not settings.verify_solutions

    def test_environment_overrides(self, monkeypatch):
        """Test RUMBOUNDS_ variables reach the solver configuration."""
        monkeypatch.setenv("RUMBOUNDS_ARITHMETIC", "exact")
        monkeypatch.setenv("RUMBOUNDS_LP_TOLERANCE", "1e-7")

        config = SolverConfig.from_settings()

        assert config.arithmetic is Arithmetic.EXACT
        assert config.tolerance == 1e-7
        assert config.verify

    def test_invalid_value(self, monkeypatch):
        """Test a non-positive tolerance fails validation."""
        monkeypatch.setenv("RUMBOUNDS_TOLERANCE", "-1")

        with pytest.raises(ValidationError):
            get_settings()


class TestSettingsDefaults:
    """Test cases for services falling back to settings."""

    @pytest.fixture
    def mock_settings(self):
        settings = MagicMock()
        settings.max_types = 7
        settings.oracle_max_columns = 5
        settings.oracle_max_combinations = 99
        return settings

    def test_enumerator_cap(self, mock_settings, geometry):
        """Test the type cap comes from settings when not given."""
        with patch("rumbounds.services.rational.get_settings", return_value=mock_settings):
            assert TypeEnumerator(geometry).max_types == 7

        assert TypeEnumerator(geometry, max_types=3).max_types == 3

    def test_oracle_caps(self, mock_settings):
        """Test the oracle caps come from settings when not given."""
        with patch("rumbounds.services.oracle.get_settings", return_value=mock_settings):
            oracle = BruteForceOracle()

        assert (oracle.max_columns, oracle.max_combinations) == (5, 99)


class TestLogging:
    """Test cases for setup_logging and error reporting."""

    def test_level(self):
        """Test the root logger takes the requested level."""
        setup_logging("warning")

        assert logging.getLogger().level == logging.WARNING

    def test_unexpected_error(self, capsys, write_json):
        """Test an unhandled exception becomes an internal_error payload with exit code 2."""
        system = write_json("system.json", {"K": 2, "budgets": [{"id": "b1", "p": [1, 2]}]})

        with patch("rumbounds.cli.commands.cmd_patches", side_effect=RuntimeError("boom")):
            code = main(["patches", system])

        out = capsys.readouterr().out
        assert code == 2
        assert '"code": "internal_error"' in out
        assert "boom" in out
