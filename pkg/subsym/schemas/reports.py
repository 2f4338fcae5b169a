"""Report documents produced by the density, pricing and mc services.

These are the JSON payloads written by the CLI; every report re-parses under
its own schema (``Model.model_validate_json(report.model_dump_json())``).
"""

from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field


SymmetryCriterion = Literal["density-grid", "drift-half", "cgmy-GM", "meixner-2ba"]


class SymmetryReport(BaseModel):
    """Outcome of a symmetry test nu(dx) = exp(-x) nu(-dx)."""

    model_config = ConfigDict(frozen=True)

    symmetric: bool
    sup_residual: float = Field(..., ge=0.0, description="Worst absolute residual on the grid")
    scale: float = Field(..., gt=0.0, description="Normalizer at the worst grid point")
    criterion_used: SymmetryCriterion
    tolerance: Optional[float] = None
    worst_x: Optional[float] = None
    drift: Optional[float] = Field(default=None, description="Drift the criterion was read from")
    normalized_drift: Optional[float] = Field(default=None, description="mu / sigma^2")
    confirmation: Optional["SymmetryReport"] = Field(
        default=None, description="Density-grid confirmation attached to a parameter criterion"
    )

    @property
    def relative_residual(self) -> float:
        return self.sup_residual / self.scale


SymmetryReport.model_rebuild()


class CompleteMonotonicityReport(BaseModel):
    """Finite-difference check of the subordination conditions on (0,1)."""

    model_config = ConfigDict(frozen=True)

    passes: bool
    first_failure: Optional[Tuple[int, float]] = Field(
        default=None, description="(order k, grid point u) of the first sign failure"
    )
    order: int
    grid_step: float
    conditioned: bool = Field(..., description="False when differencing amplifies quadrature noise above tol_k")
    ill_conditioned_order: Optional[int] = None
    absolutely_continuous: bool = True
    condition2_residual: float = Field(..., ge=0.0, description="Relative residual of nu(x)e^{-mu x} = nu(-x)e^{mu x}")
    condition2_holds: bool


class DualityReport(BaseModel):
    """Primal call versus dual put price."""

    model_config = ConfigDict(frozen=True)

    primal: float
    dual: float
    residual: float = Field(..., ge=0.0)
    dual_gamma: float
    dual_mu: float
    dual_triplet_drift: float
    dual_density_residual: float = Field(
        ..., ge=0.0, description="Max relative mismatch between numeric and closed-form dual density"
    )
    dual_drift_residual: float = Field(..., ge=0.0, description="|b| mismatch between numeric and closed-form dual triplet")
    triplet_verified: bool = Field(..., description="Numeric dual triplet matched the dual model in density and drift")


class PriceReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    price: float
    kind: Literal["call", "put"]
    strike: float
    maturity: float
    damping: float
    branch: Literal["call", "shifted", "put"]
    cutoff: float
    grid_points: int


class CalibrationReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    gamma: float
    gap_before: float
    gap_after: float


class EmpiricalCF(BaseModel):
    """Sample mean of exp(i z Y_t) with componentwise standard errors."""

    model_config = ConfigDict(frozen=True)

    z: float
    t: float
    n_paths: int
    estimate_re: float
    estimate_im: float
    stderr_re: float = Field(..., ge=0.0)
    stderr_im: float = Field(..., ge=0.0)

    @property
    def estimate(self) -> complex:
        return complex(self.estimate_re, self.estimate_im)

    @property
    def stderr(self) -> float:
        """Combined standard error of the complex estimate."""
        return (self.stderr_re**2 + self.stderr_im**2) ** 0.5


class ExponentValue(BaseModel):
    model_config = ConfigDict(frozen=True)

    z_re: float
    z_im: float
    re: float
    im: float


class ExponentReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    model_type: str
    values: List[ExponentValue]


class MonteCarloEstimate(BaseModel):
    """Sample mean with its standard error."""

    model_config = ConfigDict(frozen=True)

    value: float
    stderr: float = Field(..., ge=0.0)
    n_paths: int
