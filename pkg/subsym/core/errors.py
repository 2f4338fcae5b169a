"""Error hierarchy and error documents for subsym.

Every failure raised by the toolkit is a ``SubsymError`` carrying:
- a machine-readable ``error_code`` (UPPER_SNAKE_CASE, see ``ErrorCodes``)
- a human-readable ``message`` naming the violated precondition
- optional ``details`` (achieved error estimates, offending values, ...)
- the CLI ``exit_code`` it maps to (see ``ExitCodes``)

The CLI renders these as an ``ErrorReport`` JSON document.
"""

from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class ErrorCodes:
    """Standard error codes for consistent error reporting."""

    # Validation / preconditions (exit 1)
    VALIDATION_ERROR = "VALIDATION_ERROR"
    PRECONDITION_FAILED = "PRECONDITION_FAILED"
    NOT_CALIBRATED = "NOT_CALIBRATED"
    NOT_SYMMETRIC = "NOT_SYMMETRIC"
    OFF_GRID = "OFF_GRID"

    # Numerical failures (exit 2)
    NUMERICAL_ERROR = "NUMERICAL_ERROR"
    QUADRATURE_FAILED = "QUADRATURE_FAILED"
    DOMAIN_ERROR = "DOMAIN_ERROR"
    NO_EXPONENTIAL_MOMENT = "NO_EXPONENTIAL_MOMENT"
    TRUNCATION_ERROR = "TRUNCATION_ERROR"
    ILL_CONDITIONED = "ILL_CONDITIONED"
    SIMULATION_FAILED = "SIMULATION_FAILED"

    # I/O (exit 3)
    IO_ERROR = "IO_ERROR"

    INTERNAL_ERROR = "INTERNAL_ERROR"


class ExitCodes:
    """CLI exit-code contract."""

    SUCCESS = 0
    VALIDATION = 1
    NUMERICAL = 2
    IO = 3


class Violation(BaseModel):
    """One broken parameter invariant."""

    model_config = ConfigDict(frozen=True)

    field: str = Field(description="Dotted path of the offending field")
    message: str = Field(description="Human-readable description")
    bound: Optional[str] = Field(default=None, description="The violated bound, e.g. '(0,1)'")


class ErrorReport(BaseModel):
    """Error document written by the CLI on failure."""

    error_code: str
    message: str
    timestamp: str
    details: Optional[Dict[str, Any]] = None


class SubsymError(Exception):
    """Base class for all toolkit errors."""

    error_code: str = ErrorCodes.INTERNAL_ERROR
    exit_code: int = ExitCodes.NUMERICAL

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_report(self) -> ErrorReport:
        return ErrorReport(
            error_code=self.error_code,
            message=self.message,
            timestamp=datetime.now(timezone.utc).isoformat(),
            details=self.details or None,
        )


# ═══════════════════════════════════════════════════════════════════════
# VALIDATION AND PRECONDITIONS (exit 1)
# ═══════════════════════════════════════════════════════════════════════

class ParameterValidationError(SubsymError):
    """Raised when a parameter set violates one or more type invariants."""

    error_code = ErrorCodes.VALIDATION_ERROR
    exit_code = ExitCodes.VALIDATION

    def __init__(self, violations: List[Violation]):
        self.violations = list(violations)
        first = self.violations[0] if self.violations else None
        if first is None:
            message = "Parameter validation failed"
        else:
            message = f"Validation failed for field '{first.field}': {first.message}"
        super().__init__(
            message,
            details={"errors": [v.model_dump() for v in self.violations]},
        )


class PreconditionError(SubsymError):
    error_code = ErrorCodes.PRECONDITION_FAILED
    exit_code = ExitCodes.VALIDATION


class NotCalibratedError(PreconditionError):
    error_code = ErrorCodes.NOT_CALIBRATED


class NotSymmetricError(PreconditionError):
    error_code = ErrorCodes.NOT_SYMMETRIC


class OffGridError(PreconditionError):
    error_code = ErrorCodes.OFF_GRID


# ═══════════════════════════════════════════════════════════════════════
# NUMERICAL FAILURES (exit 2)
# ═══════════════════════════════════════════════════════════════════════

class NumericalError(SubsymError):
    error_code = ErrorCodes.NUMERICAL_ERROR
    exit_code = ExitCodes.NUMERICAL


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested accuracy."""

    error_code = ErrorCodes.QUADRATURE_FAILED


class DomainError(NumericalError):
    """Argument outside a convergence region (Laplace domain, moment strip)."""

    error_code = ErrorCodes.DOMAIN_ERROR


class NoExponentialMomentError(DomainError):
    error_code = ErrorCodes.NO_EXPONENTIAL_MOMENT


class TruncationError(NumericalError):
    error_code = ErrorCodes.TRUNCATION_ERROR


class ConditioningError(NumericalError):
    error_code = ErrorCodes.ILL_CONDITIONED


class SimulationError(NumericalError):
    error_code = ErrorCodes.SIMULATION_FAILED


# ═══════════════════════════════════════════════════════════════════════
# I/O (exit 3)
# ═══════════════════════════════════════════════════════════════════════

class DataIOError(SubsymError):
    error_code = ErrorCodes.IO_ERROR
    exit_code = ExitCodes.IO
