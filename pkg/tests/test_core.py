"""
Tests for settings, error documents and structured logging.

Tests verify:
- SUBSYM_* environment variables override the defaults
- Error classes map to their error codes and exit codes
- Failed commands are logged as JSON with the command bound
- Reconfiguring logging moves output to the new stream
"""
import io
import json

import pytest
import structlog

from subsym.cli import main
from subsym.core.config import Settings
from subsym.core.errors import (
    ConditioningError,
    DataIOError,
    ErrorCodes,
    ExitCodes,
    NoExponentialMomentError,
    NotCalibratedError,
    ParameterValidationError,
    Violation,
)
from subsym.core.logging_config import configure_logging


class TestSettings:
    """Test the pydantic-settings configuration."""

    def test_defaults(self):
        """Test the documented defaults."""
        config = Settings()

        assert config.QUAD_EPSREL == 1e-11
        assert config.PRICING_GRID_POINTS == 4096
        assert config.MC_WORKERS == 1

    def test_environment_override(self, monkeypatch):
        """Test SUBSYM_ prefixed variables are read."""
        monkeypatch.setenv("SUBSYM_PRICING_DAMPING", "1.25")
        monkeypatch.setenv("SUBSYM_LOG_LEVEL", "DEBUG")

        config = Settings()

        assert config.PRICING_DAMPING == 1.25
        assert config.LOG_LEVEL == "DEBUG"


class TestErrors:
    """Test the error hierarchy and ErrorReport."""

    @pytest.mark.parametrize(
        "error, code, exit_code",
        [
            (NotCalibratedError("gamma unset"), ErrorCodes.NOT_CALIBRATED, ExitCodes.VALIDATION),
            (NoExponentialMomentError("E exp(Y_1) is infinite"), ErrorCodes.NO_EXPONENTIAL_MOMENT, ExitCodes.NUMERICAL),
            (ConditioningError("noise"), ErrorCodes.ILL_CONDITIONED, ExitCodes.NUMERICAL),
            (DataIOError("missing"), ErrorCodes.IO_ERROR, ExitCodes.IO),
        ],
    )
    def test_codes(self, error, code, exit_code):
        """Test each class carries its code pair."""
        assert error.error_code == code
        assert error.exit_code == exit_code

    def test_validation_message_names_first_violation(self):
        """Test the message names the first offending field."""
        error = ParameterValidationError(
            [
                Violation(field="alpha", message="alpha out of (0,1), got 2", bound="(0,1)"),
                Violation(field="a", message="a must be > 0, got -1", bound="(0,inf)"),
            ]
        )

        assert error.message == "Validation failed for field 'alpha': alpha out of (0,1), got 2"
        assert len(error.details["errors"]) == 2

    def test_report(self):
        """Test the report keeps code, message and details."""
        report = DataIOError("cannot read m.json", details={"path": "m.json"}).to_report()

        assert report.error_code == ErrorCodes.IO_ERROR
        assert report.details == {"path": "m.json"}
        assert report.timestamp.endswith("+00:00")

    def test_report_without_details(self):
        """Test empty details are omitted."""
        assert NotCalibratedError("gamma unset").to_report().details is None


class TestLogging:
    """Test structured logging of CLI runs."""

    def test_failure_is_logged_as_json(self, caplog, capsys, tmp_path):
        """Test cli_command_failed carries the command and the error code."""
        caplog.set_level("WARNING")

        assert main(["cf-eval", "--model", str(tmp_path / "absent.json")]) == ExitCodes.IO
        capsys.readouterr()

        events = [json.loads(r.getMessage()) for r in caplog.records if r.name.startswith("subsym")]
        failed = [e for e in events if e.get("event") == "cli_command_failed"]
        assert failed
        assert failed[0]["command"] == "cf-eval"
        assert failed[0]["error_code"] == ErrorCodes.IO_ERROR
        assert failed[0]["app"] == "subsym"
        assert failed[0]["level"] == "warning"

    def test_reconfigure_switches_stream(self):
        """Test the latest configure_logging call decides where records go."""
        first, second = io.StringIO(), io.StringIO()

        configure_logging(stream=first, level="INFO")
        configure_logging(stream=second, level="INFO")
        structlog.get_logger("subsym.tests.logging").warning("stream_switched", step=2)
        configure_logging(level="WARNING")

        assert "stream_switched" not in first.getvalue()
        event = json.loads(second.getvalue().splitlines()[-1])
        assert event["event"] == "stream_switched"
        assert event["step"] == 2
