"""Thin wrapper around ``scipy.integrate.quad`` with structured failures.

QUADPACK signals trouble through ``IntegrationWarning``. The wrapper records
those warnings and only escalates to ``QuadratureError`` when the achieved
error estimate is also above the requested tolerance, so benign warnings on
well-resolved integrals are logged instead of aborting a sweep.
"""

import math
import warnings
from typing import Callable, Optional, Sequence, Tuple

import structlog
from scipy.integrate import IntegrationWarning, quad

from subsym.core.errors import QuadratureError

logger = structlog.get_logger(__name__)


def integrate(
    func: Callable[[float], float],
    a: float,
    b: float,
    *,
    epsabs: float,
    epsrel: float,
    limit: int = 200,
    points: Optional[Sequence[float]] = None,
    weight: Optional[str] = None,
    wvar=None,
    label: str = "integral",
) -> Tuple[float, float]:
    """Integrate ``func`` over [a, b]; returns (value, abserr).

    Raises:
        QuadratureError: non-finite result, or a QUADPACK warning together
            with an error estimate above max(epsabs, epsrel*|value|).
    """
    kwargs = {"epsabs": epsabs, "epsrel": epsrel, "limit": limit}
    if points is not None:
        kwargs["points"] = points
    if weight is not None:
        kwargs["weight"] = weight
        kwargs["wvar"] = wvar
        if weight in ("cos", "sin") and math.isinf(b):
            # QAWF: absolute accuracy only, controlled per cycle
            kwargs["limlst"] = 100

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", IntegrationWarning)
        value, abserr = quad(func, a, b, **kwargs)[:2]

    if not (math.isfinite(value) and math.isfinite(abserr)):
        raise QuadratureError(
            f"{label}: quadrature returned a non-finite value",
            details={"value": repr(value), "achieved_error": repr(abserr), "lower": a, "upper": b},
        )

    if caught:
        target = max(epsabs, epsrel * abs(value))
        if abserr > target:
            raise QuadratureError(
                f"{label}: quadrature did not converge "
                f"(achieved error {abserr:.3e} > target {target:.3e})",
                details={
                    "achieved_error": abserr,
                    "target": target,
                    "lower": a,
                    "upper": b,
                    "warning": str(caught[0].message).strip().splitlines()[0],
                },
            )
        logger.debug(
            "quadrature_warning",
            label=label,
            achieved_error=abserr,
            warning=str(caught[0].message).strip().splitlines()[0],
        )

    return value, abserr
