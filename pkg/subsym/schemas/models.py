"""Domain types for subordinated-Brownian market models.

All types are frozen pydantic models: immutable after construction, safe to
share between threads, and serialisable to the JSON model document

    {"type": "tcbm" | "cgmy" | "meixner", ...fields}

with lowercase field names. Unknown fields are rejected, non-finite numbers
are rejected, and every bound is checked by a validator whose message names
the field and the bound (e.g. "alpha out of (0,1)").
"""

import math
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.special import gamma as gamma_fn

from subsym.core.quadrature import integrate


_STRICT = ConfigDict(
    extra="forbid",
    frozen=True,
    allow_inf_nan=False,
    populate_by_name=True,
)


def _positive(name: str, v: float) -> float:
    if v <= 0:
        raise ValueError(f"{name} must be > 0, got {v}")
    return v


def _unit_interval(name: str, v: float) -> float:
    if not 0.0 < v < 1.0:
        raise ValueError(f"{name} out of (0,1), got {v}")
    return v


# Bounds by field name, reported alongside violations.
FIELD_BOUNDS = {
    "mu": "finite",
    "sigma": "> 0",
    "gamma": "finite",
    "a": "> 0",
    "alpha": "(0,1)",
    "c": "> 0",
    "lambda": "> 0",
    "lam": "> 0",
    "g": "> 0",
    "m": "> 0",
    "y": "(0,1)",
    "b": "|b| < pi",
    "d": "> 0",
    "r": ">= 0",
    "delta": ">= 0",
    "spot": "> 0",
    "strike": "> 0",
    "maturity": "> 0",
}


# ═══════════════════════════════════════════════════════════════════════
# BROWNIAN PART
# ═══════════════════════════════════════════════════════════════════════

class BrownianDrift(BaseModel):
    """Drift and volatility per unit of subordinated time: X_s = mu*s + sigma*W_s."""

    model_config = _STRICT

    mu: float = Field(..., description="Drift per unit subordinated time")
    sigma: float = Field(..., description="Volatility per unit subordinated time (> 0)")

    @field_validator("sigma")
    @classmethod
    def validate_sigma(cls, v: float) -> float:
        return _positive("sigma", v)

    @property
    def normalized_drift(self) -> float:
        """Drift of the unit-volatility reduction (clock rescaled by sigma^2)."""
        return self.mu / self.sigma**2


# ═══════════════════════════════════════════════════════════════════════
# SUBORDINATORS
# ═══════════════════════════════════════════════════════════════════════

class _Subordinator(BaseModel):
    model_config = _STRICT

    @model_validator(mode="after")
    def check_levy_measure(self):
        mass = self.truncated_mass()
        if not math.isfinite(mass) or mass <= 0:
            raise ValueError(f"Levy measure does not integrate (x ^ 1): got {mass}")
        return self

    def regular_part(self, x: float) -> float:
        """rho(x) * x^(1+alpha): bounded as x -> 0."""
        raise NotImplementedError

    def truncated_mass(self) -> float:
        """Numerical value of the integral of min(x, 1)*rho(x) over (0, inf)."""
        alpha = self.alpha
        # On (0,1) the x^(-alpha) singularity is handled by the algebraic weight.
        near, _ = integrate(
            self.regular_part,
            0.0,
            1.0,
            epsabs=1e-12,
            epsrel=1e-10,
            weight="alg",
            wvar=(-alpha, 0.0),
            label="subordinator_mass_near",
        )
        far, _ = integrate(
            lambda x: float(self.levy_density(x)),
            1.0,
            math.inf,
            epsabs=1e-12,
            epsrel=1e-10,
            label="subordinator_mass_far",
        )
        return near + far


class Stable(_Subordinator):
    """alpha-stable subordinator with zero drift, rho(x) = A x^(-1-alpha) on x > 0."""

    kind: Literal["stable"] = "stable"
    a: float = Field(..., description="Scale A of the Levy density (> 0)")
    alpha: float = Field(..., description="Stability index in (0,1)")

    @field_validator("a")
    @classmethod
    def validate_a(cls, v: float) -> float:
        return _positive("a", v)

    @field_validator("alpha")
    @classmethod
    def validate_alpha(cls, v: float) -> float:
        return _unit_interval("alpha", v)

    def levy_density(self, x):
        x = np.asarray(x, dtype=float)
        safe = np.where(x > 0, x, 1.0)
        return np.where(x > 0, self.a * np.power(safe, -1.0 - self.alpha), 0.0)

    def regular_part(self, x: float) -> float:
        return self.a

    @property
    def exponent_scale(self) -> float:
        """c in E exp(-s T_1) = exp(-c s^alpha); c = A Gamma(1-alpha) / alpha."""
        return self.a * gamma_fn(1.0 - self.alpha) / self.alpha


class TemperedStable(_Subordinator):
    """Tempered-stable subordinator, rho(x) = C exp(-lambda x) x^(-1-alpha) on x > 0."""

    kind: Literal["tempered_stable"] = "tempered_stable"
    c: float = Field(..., description="Scale C of the Levy density (> 0)")
    lam: float = Field(..., alias="lambda", description="Tempering rate (> 0)")
    alpha: float = Field(..., description="Stability index in (0,1)")

    @field_validator("c")
    @classmethod
    def validate_c(cls, v: float) -> float:
        return _positive("c", v)

    @field_validator("lam")
    @classmethod
    def validate_lambda(cls, v: float) -> float:
        return _positive("lambda", v)

    @field_validator("alpha")
    @classmethod
    def validate_alpha(cls, v: float) -> float:
        return _unit_interval("alpha", v)

    def levy_density(self, x):
        x = np.asarray(x, dtype=float)
        safe = np.where(x > 0, x, 1.0)
        return np.where(
            x > 0,
            self.c * np.exp(-self.lam * safe) * np.power(safe, -1.0 - self.alpha),
            0.0,
        )

    def regular_part(self, x: float) -> float:
        return self.c * math.exp(-self.lam * x)

    def untempered(self) -> Stable:
        """The stable subordinator with the same C and alpha (lambda -> 0)."""
        return Stable(a=self.c, alpha=self.alpha)


SubordinatorSpec = Annotated[Union[Stable, TemperedStable], Field(discriminator="kind")]


# ═══════════════════════════════════════════════════════════════════════
# MODELS
# ═══════════════════════════════════════════════════════════════════════

class TcbmModel(BaseModel):
    """Time-changed Brownian motion Y_t = gamma*t + mu*T_t + sigma*W(T_t).

    ``gamma`` is the calendar-time drift used for the martingale correction;
    symmetry only depends on ``bm``.
    """

    model_config = _STRICT

    type: Literal["tcbm"] = "tcbm"
    bm: BrownianDrift
    subordinator: SubordinatorSpec
    gamma: float = Field(default=0.0, description="Extra linear drift per unit calendar time")


class CGMY(BaseModel):
    """CGMY parameter set, restricted to Y in (0,1)."""

    model_config = _STRICT

    type: Literal["cgmy"] = "cgmy"
    c: float
    g: float
    m: float
    y: float

    @field_validator("c", "g", "m")
    @classmethod
    def validate_positive(cls, v: float, info) -> float:
        return _positive(info.field_name, v)

    @field_validator("y")
    @classmethod
    def validate_y(cls, v: float) -> float:
        return _unit_interval("y", v)


class Meixner(BaseModel):
    """Meixner parameter set (a > 0, |b| < pi, d > 0)."""

    model_config = _STRICT

    type: Literal["meixner"] = "meixner"
    a: float
    b: float
    d: float

    @field_validator("a", "d")
    @classmethod
    def validate_positive(cls, v: float, info) -> float:
        return _positive(info.field_name, v)

    @field_validator("b")
    @classmethod
    def validate_b(cls, v: float) -> float:
        if not abs(v) < math.pi:
            raise ValueError(f"b out of (-pi, pi), got {v}")
        return v


NamedModel = Union[CGMY, Meixner]
ModelDocument = Annotated[Union[TcbmModel, CGMY, Meixner], Field(discriminator="type")]


# ═══════════════════════════════════════════════════════════════════════
# MARKET AND INSTRUMENTS
# ═══════════════════════════════════════════════════════════════════════

class MarketSpec(BaseModel):
    """Riskless rate r, dividend rate delta and spot price."""

    model_config = _STRICT

    r: float = Field(..., description="Riskless rate per unit time (>= 0)")
    delta: float = Field(..., description="Dividend rate per unit time (>= 0)")
    spot: float = Field(..., description="Spot price (> 0)")

    @field_validator("r", "delta")
    @classmethod
    def validate_rate(cls, v: float, info) -> float:
        if v < 0:
            raise ValueError(f"{info.field_name} must be >= 0, got {v}")
        return v

    @field_validator("spot")
    @classmethod
    def validate_spot(cls, v: float) -> float:
        return _positive("spot", v)

    def dual(self, spot: Optional[float] = None) -> "MarketSpec":
        """The dual market: rates swapped, optionally a new spot."""
        return MarketSpec(r=self.delta, delta=self.r, spot=self.spot if spot is None else spot)


class OptionSpec(BaseModel):
    """European option."""

    model_config = _STRICT

    strike: float
    maturity: float
    kind: Literal["call", "put"]

    @field_validator("strike", "maturity")
    @classmethod
    def validate_positive(cls, v: float, info) -> float:
        return _positive(info.field_name, v)
