"""Levy densities, the symmetry criterion and the subordination check.

The density of a subordinated Brownian motion is the mixture

    nu(x) = int_0^inf N(x; mu y, sigma^2 y) rho(y) dy

over the clock's Levy density rho. For the stable and tempered-stable clocks
this is K / sqrt(2 pi sigma^2) * int y^(-alpha-3/2) exp(-a/y - b y) dy with
a = x^2 / (2 sigma^2), b = mu^2 / (2 sigma^2) + lambda, times exp(mu x / sigma^2).
The quadrature runs in u = log y, split at the analytic peak of the integrand.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from scipy.special import gamma as gamma_fn
from scipy.special import kve
from scipy.stats import norm

from subsym.core.config import settings
from subsym.core.errors import (
    NoExponentialMomentError,
    ParameterValidationError,
    Violation,
)
from subsym.core.quadrature import integrate
from subsym.schemas.models import (
    CGMY,
    MarketSpec,
    Meixner,
    NamedModel,
    Stable,
    TcbmModel,
    TemperedStable,
)
from subsym.schemas.reports import CompleteMonotonicityReport, SymmetryReport
from subsym.services.charfn import (
    LevyTriplet1D,
    exp_tilt,
    laplace_exponent,
    levy_khintchine_cumulant,
)
from subsym.services.models import madan_yor_drift, validate

logger = structlog.get_logger(__name__)

AnyModel = Union[TcbmModel, CGMY, Meixner]

# Parameter criteria (mu/sigma^2 = -1/2, G - M = -1, 2b + a = 0) are tested
# to this absolute tolerance.
PARAMETER_CRITERION_TOL = 1e-12


@dataclass(frozen=True)
class LevyDensity1D:
    """A two-sided Levy density x -> nu(x), x != 0.

    ``drift`` is the exponential tilt with nu(x) = exp(drift * x) f(x) for an
    even f; for subordinated models it is the normalized Brownian drift.
    """

    eval: Callable[[float], float]
    support: str = "two-sided"
    drift: float = 0.0

    def __call__(self, x: float) -> float:
        return self.eval(x)

    def even_part(self, x: float) -> float:
        return self.eval(x) * math.exp(-self.drift * x)


def _require_nonzero(x: float) -> float:
    x = float(x)
    if x == 0.0 or not math.isfinite(x):
        raise ParameterValidationError(
            [Violation(field="x", message=f"x must be finite and nonzero, got {x}", bound="!= 0")]
        )
    return x


# ═══════════════════════════════════════════════════════════════════════
# MIXTURE INTEGRAL
# ═══════════════════════════════════════════════════════════════════════

def _clock_parameters(sub: Union[Stable, TemperedStable]) -> Tuple[float, float, float]:
    """(K, lambda, alpha) with rho(y) = K exp(-lambda y) y^(-1-alpha)."""
    if isinstance(sub, Stable):
        return sub.a, 0.0, sub.alpha
    return sub.c, sub.lam, sub.alpha


def _peak(a: float, b: float, q: float) -> float:
    """argmax over u of -q u - a e^-u - b e^u, i.e. log of the root of b t^2 + q t - a = 0."""
    return math.log(2.0 * a / (q + math.sqrt(q * q + 4.0 * a * b)))


def _clipped_exp(u: float) -> float:
    return math.exp(min(max(u, -700.0), 700.0))


def _log_mixture(log_h: Callable[[float], float], u_star: float, epsrel: float, limit: int, label: str) -> float:
    """log of int exp(log_h(u)) du over the real line, log_h unimodal with mode u_star."""
    top = log_h(u_star)

    def scaled(u: float) -> float:
        return math.exp(log_h(u) - top)

    left, _ = integrate(scaled, -math.inf, u_star, epsabs=0.0, epsrel=epsrel, limit=limit, label=f"{label}_left")
    right, _ = integrate(scaled, u_star, math.inf, epsabs=0.0, epsrel=epsrel, limit=limit, label=f"{label}_right")
    return top + math.log(left + right)


def _mixture_setup(model: TcbmModel, x: float):
    k, lam, alpha = _clock_parameters(model.subordinator)
    s2 = model.bm.sigma**2
    mu = model.bm.mu
    q = alpha + 0.5
    a = x * x / (2.0 * s2)
    b = mu * mu / (2.0 * s2) + lam
    log_norm = math.log(k) - 0.5 * math.log(2.0 * math.pi * s2)
    return q, a, b, lam, mu, s2, log_norm


def subordinated_levy_density(
    model: TcbmModel,
    x: float,
    *,
    epsrel: Optional[float] = None,
    limit: Optional[int] = None,
) -> float:
    """nu(x) from the Gaussian mixture kernel exp(-(x - mu y)^2 / (2 sigma^2 y)).

    Raises:
        ParameterValidationError: x is zero or not finite.
        QuadratureError: with the achieved error estimate.
    """
    x = _require_nonzero(x)
    epsrel = settings.QUAD_EPSREL if epsrel is None else epsrel
    limit = settings.QUAD_LIMIT if limit is None else limit
    q, a, b, lam, mu, s2, log_norm = _mixture_setup(model, x)

    def log_h(u: float) -> float:
        y = _clipped_exp(u)
        dev = x - mu * y
        return -q * u - dev * dev / (2.0 * s2 * y) - lam * y

    return math.exp(log_norm + _log_mixture(log_h, _peak(a, b, q), epsrel, limit, "mixture_direct"))


def even_factor(
    model: TcbmModel,
    x: float,
    *,
    epsrel: Optional[float] = None,
    limit: Optional[int] = None,
) -> float:
    """f(x) with nu(x) = exp(mu x / sigma^2) f(x); even in x."""
    x = _require_nonzero(x)
    epsrel = settings.QUAD_EPSREL if epsrel is None else epsrel
    limit = settings.QUAD_LIMIT if limit is None else limit
    q, a, b, _, _, _, log_norm = _mixture_setup(model, x)

    def log_h(u: float) -> float:
        y = _clipped_exp(u)
        return -q * u - a / y - b * y

    return math.exp(log_norm + _log_mixture(log_h, _peak(a, b, q), epsrel, limit, "mixture_even"))


def closed_form_levy_density(model: TcbmModel, x: float) -> float:
    """Bessel-function form of the mixture:

        int y^(p-1) exp(-a/y - b y) dy = 2 (a/b)^(p/2) K_p(2 sqrt(a b)),  p = -alpha - 1/2

    degenerating to Gamma(-p) a^p when b = 0 (stable clock, mu = 0).
    """
    x = _require_nonzero(x)
    q, a, b, _, mu, s2, log_norm = _mixture_setup(model, x)
    p = -q
    if b == 0.0:
        log_int = math.log(gamma_fn(q)) + p * math.log(a)
    else:
        z = 2.0 * math.sqrt(a * b)
        log_int = math.log(2.0) + 0.5 * p * math.log(a / b) + math.log(kve(p, z)) - z
    return math.exp(log_norm + mu * x / s2 + log_int)


# ═══════════════════════════════════════════════════════════════════════
# NAMED DENSITIES AND TRIPLETS
# ═══════════════════════════════════════════════════════════════════════

def _cgmy_density(named: CGMY, x: float) -> float:
    rate = named.m if x > 0 else named.g
    ax = abs(x)
    return named.c * math.exp(-rate * ax) * ax ** (-1.0 - named.y)


def _meixner_density(named: Meixner, x: float) -> float:
    # d e^{bx/a} / (x sinh(pi x / a)), written without overflow
    a, b, d = named.a, named.b, named.d
    ax = abs(x)
    return 2.0 * d * math.exp(b * x / a - math.pi * ax / a) / (ax * -math.expm1(-2.0 * math.pi * ax / a))


def levy_density(model: AnyModel) -> LevyDensity1D:
    """The Levy density of any supported model, memoised per evaluation point."""
    model = validate(model)
    if isinstance(model, TcbmModel):
        raw = lambda x: subordinated_levy_density(model, x)  # noqa: E731
        drift = model.bm.normalized_drift
    elif isinstance(model, CGMY):
        raw = lambda x: _cgmy_density(model, _require_nonzero(x))  # noqa: E731
        drift = madan_yor_drift(model)
    else:
        raw = lambda x: _meixner_density(model, _require_nonzero(x))  # noqa: E731
        drift = madan_yor_drift(model)
    cached = lru_cache(maxsize=65536)(lambda x: raw(x))
    return LevyDensity1D(eval=lambda x: cached(float(x)), drift=drift)


def _truncated_gaussian_mean(mu: float, sigma: float, y: float) -> float:
    """E[X 1{|X| <= 1}] for X ~ N(mu y, sigma^2 y)."""
    m, s = mu * y, sigma * math.sqrt(y)
    lo, hi = (-1.0 - m) / s, (1.0 - m) / s
    return m * (norm.cdf(hi) - norm.cdf(lo)) + s * (norm.pdf(lo) - norm.pdf(hi))


def tcbm_levy_triplet(model: TcbmModel) -> LevyTriplet1D:
    """(b, 0, nu) of Y_t = gamma t + mu T_t + sigma W(T_t).

    b = gamma + int_0^inf E[X_y 1{|X_y| <= 1}] rho(y) dy.
    """
    model = validate(model)
    sub = model.subordinator
    mu, sigma = model.bm.mu, model.bm.sigma

    def near(y: float) -> float:
        # E[...] / y -> mu as y -> 0; rho(y) y = regular_part(y) y^(-alpha)
        if y <= 0.0:
            return mu * sub.regular_part(0.0)
        return _truncated_gaussian_mean(mu, sigma, y) / y * sub.regular_part(y)

    lk = dict(epsabs=settings.LK_EPSABS, epsrel=settings.LK_EPSREL)
    inner, _ = integrate(near, 0.0, 1.0, weight="alg", wvar=(-sub.alpha, 0.0), label="tcbm_drift_near", **lk)
    outer, _ = integrate(
        lambda y: _truncated_gaussian_mean(mu, sigma, y) * float(sub.levy_density(y)),
        1.0, math.inf, label="tcbm_drift_far", **lk,
    )
    return LevyTriplet1D(b=model.gamma + inner + outer, sigma2=0.0, nu=levy_density(model).eval)


def named_levy_triplet(named: NamedModel) -> LevyTriplet1D:
    """(b, 0, nu) matching the closed-form exponents of CGMY and Meixner."""
    named = validate(named)
    lk = dict(epsabs=settings.LK_EPSABS, epsrel=settings.LK_EPSREL)
    if isinstance(named, CGMY):
        # finite variation with no drift: b = int_{|y|<=1} y nu(y) dy
        b, _ = integrate(
            lambda y: named.c * (math.exp(-named.m * y) - math.exp(-named.g * y)),
            0.0, 1.0, weight="alg", wvar=(-named.y, 0.0), label="cgmy_drift", **lk,
        )
    else:
        a, bb, d = named.a, named.b, named.d
        mean = a * d * math.tan(bb / 2.0)

        def odd_tail(y: float) -> float:
            # y (nu(y) - nu(-y)) = 2 d sinh(b y / a) / sinh(pi y / a)
            return 2.0 * d * (math.exp((bb - math.pi) * y / a) - math.exp((-bb - math.pi) * y / a)) / (
                -math.expm1(-2.0 * math.pi * y / a)
            )

        tail, _ = integrate(odd_tail, 1.0, math.inf, label="meixner_drift", **lk)
        b = mean - tail
    return LevyTriplet1D(b=b, sigma2=0.0, nu=levy_density(named).eval)


# ═══════════════════════════════════════════════════════════════════════
# SYMMETRY
# ═══════════════════════════════════════════════════════════════════════

def default_symmetry_grid() -> List[float]:
    return list(
        np.geomspace(settings.SYMMETRY_GRID_MIN, settings.SYMMETRY_GRID_MAX, settings.SYMMETRY_GRID_POINTS)
    )


def _sweep(func: Callable[[float], float], points: Sequence[float], workers: Optional[int]) -> List[float]:
    workers = settings.MC_WORKERS if workers is None else workers
    if workers <= 1:
        return [func(p) for p in points]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, points))


def _checked_grid(grid: Optional[Iterable[float]]) -> List[float]:
    points = default_symmetry_grid() if grid is None else [float(x) for x in grid]
    if not points:
        raise ParameterValidationError([Violation(field="grid", message="grid must be nonempty", bound="nonempty")])
    bad = [x for x in points if not (math.isfinite(x) and x > 0)]
    if bad:
        raise ParameterValidationError(
            [Violation(field="grid", message=f"grid points must be positive and finite, got {bad[0]}", bound="> 0")]
        )
    return sorted(points)


def symmetry_residual(
    nu: LevyDensity1D,
    grid: Optional[Iterable[float]] = None,
    *,
    tol: Optional[float] = None,
    floor: Optional[float] = None,
    workers: Optional[int] = None,
) -> SymmetryReport:
    """Test nu(x) = exp(-x) nu(-x) on a grid of positive points.

    Per point both directions are scored, |nu(x) - e^-x nu(-x)| against
    max(nu(x), e^-x nu(-x), floor) and |nu(-x) - e^x nu(x)| against
    max(nu(-x), e^x nu(x), floor). The report carries the raw residual and
    the scale at the point with the largest relative residual.
    """
    tol = settings.SYMMETRY_TOL if tol is None else tol
    floor = settings.SYMMETRY_FLOOR if floor is None else floor
    points = _checked_grid(grid)

    def score(x: float) -> Tuple[float, float]:
        right, left = nu(x), nu(-x)
        pairs = ((right, exp_tilt(-x, left)), (left, exp_tilt(x, right)))
        candidates = [(abs(lhs - rhs), max(lhs, rhs, floor)) for lhs, rhs in pairs]
        return max(candidates, key=lambda rs: rs[0] / rs[1])

    scores = _sweep(score, points, workers)
    worst = max(range(len(points)), key=lambda i: (scores[i][0] / scores[i][1], -points[i]))
    residual, scale = scores[worst]
    return SymmetryReport(
        symmetric=residual / scale < tol,
        sup_residual=residual,
        scale=scale,
        criterion_used="density-grid",
        tolerance=tol,
        worst_x=points[worst],
    )


def classify_symmetry(
    model: AnyModel,
    grid: Optional[Iterable[float]] = None,
    *,
    tol: Optional[float] = None,
    workers: Optional[int] = None,
) -> SymmetryReport:
    """Classify by parameters, with a density-grid confirmation attached.

    TcbmModel: mu / sigma^2 = -1/2 (equal to mu for sigma = 1).
    CGMY: G - M = -1.  Meixner: 2b + a = 0.

    Each equality holds to an absolute PARAMETER_CRITERION_TOL (1e-12), not
    exactly: mu = -0.02, sigma = 0.2 gives a float mu / sigma^2 a few ulps off -1/2.
    """
    model = validate(model)
    if isinstance(model, TcbmModel):
        criterion, drift, normalized = "drift-half", model.bm.mu, model.bm.normalized_drift
        symmetric = abs(normalized + 0.5) <= PARAMETER_CRITERION_TOL
    elif isinstance(model, CGMY):
        criterion = "cgmy-GM"
        drift = normalized = madan_yor_drift(model)
        symmetric = abs(model.g - model.m + 1.0) <= PARAMETER_CRITERION_TOL
    else:
        criterion = "meixner-2ba"
        drift = normalized = madan_yor_drift(model)
        symmetric = abs(2.0 * model.b + model.a) <= PARAMETER_CRITERION_TOL

    confirmation = symmetry_residual(levy_density(model), grid, tol=tol, workers=workers)
    if confirmation.symmetric != symmetric:
        logger.warning(
            "symmetry_criteria_disagree",
            model_type=model.type,
            criterion=criterion,
            relative_residual=confirmation.relative_residual,
        )
    return SymmetryReport(
        symmetric=symmetric,
        sup_residual=confirmation.sup_residual,
        scale=confirmation.scale,
        criterion_used=criterion,
        tolerance=PARAMETER_CRITERION_TOL,
        worst_x=confirmation.worst_x,
        drift=drift,
        normalized_drift=normalized,
        confirmation=confirmation,
    )


# ═══════════════════════════════════════════════════════════════════════
# DUAL MARKET
# ═══════════════════════════════════════════════════════════════════════

def dual_density(nu: Callable[[float], float]) -> Callable[[float], float]:
    """x -> exp(-x) nu(-x)."""
    return lambda x: exp_tilt(-x, nu(-x))


def dual_triplet(triplet: LevyTriplet1D, r: float, delta: float) -> LevyTriplet1D:
    """Triplet of the dual market: nu~(x) = e^-x nu(-x), sigma~ = sigma, and b~
    such that kappa~(1) = delta - r (rates swapped).

    Raises:
        NoExponentialMomentError: E exp(Y_1) is infinite.
    """
    nu_dual = dual_density(triplet.nu)
    jumps = levy_khintchine_cumulant(LevyTriplet1D(b=0.0, sigma2=0.0, nu=nu_dual), 1.0)
    b_dual = (delta - r) - 0.5 * triplet.sigma2 - jumps
    logger.debug("dual_triplet_built", b=triplet.b, b_dual=b_dual, jump_cumulant=jumps)
    return LevyTriplet1D(b=b_dual, sigma2=triplet.sigma2, nu=nu_dual)


def dual_model(model: TcbmModel, market: Optional[MarketSpec] = None) -> TcbmModel:
    """The dual of a subordinated model, again a subordinated model.

    mu~ = -mu - sigma^2 and the clock is tilted by exp((mu + sigma^2/2) y):
    lambda~ = lambda - (mu + sigma^2/2). A stable clock stays stable only when
    mu + sigma^2/2 = 0. gamma~ makes the dual model a martingale in the dual
    market (r and delta swapped); without a market, r = delta.

    Raises:
        NoExponentialMomentError: lambda~ <= 0 (E exp(Y_1) infinite or the
            tilted clock not a tempered-stable clock).
    """
    model = validate(model)
    mu, sigma = model.bm.mu, model.bm.sigma
    tilt = mu + 0.5 * sigma**2
    k, lam, alpha = _clock_parameters(model.subordinator)
    lam_dual = lam - tilt
    if isinstance(model.subordinator, Stable) and tilt == 0.0:
        sub_dual = model.subordinator
    elif lam_dual > 0.0:
        sub_dual = TemperedStable(c=k, lam=lam_dual, alpha=alpha)
    else:
        raise NoExponentialMomentError(
            f"dual model requires mu + sigma^2/2 < lambda, got {tilt} >= {lam}",
            details={"tilt": tilt, "lambda": lam},
        )

    r, delta = (0.0, 0.0) if market is None else (market.r, market.delta)
    bm_dual = model.bm.model_copy(update={"mu": -mu - sigma**2})
    # the dual clock's exponent at -tilt is minus the primal one at tilt
    gamma_dual = (delta - r) + laplace_exponent(model.subordinator, tilt).real
    return TcbmModel(bm=bm_dual, subordinator=sub_dual, gamma=gamma_dual)


# ═══════════════════════════════════════════════════════════════════════
# SUBORDINATION CHECK
# ═══════════════════════════════════════════════════════════════════════

def complete_monotonicity_check(
    model: AnyModel,
    order: int = 6,
    grid_step: float = 1e-3,
    *,
    tol: Optional[float] = None,
    condition2_tol: float = 1e-10,
    workers: Optional[int] = None,
) -> CompleteMonotonicityReport:
    """Finite-difference test that a model is subordinated Brownian motion.

    Conditions checked:
    1. nu is absolutely continuous (always true for the densities built here).
    2. nu(x) e^{-m x} = nu(-x) e^{m x} on the symmetric grid, m the normalized drift.
    3. g(u) = nu(sqrt u) e^{-m sqrt u} is completely monotone on (0,1):
       (-1)^k Delta^k g >= -tol_k for k = 1..order, tol_k = tol * k! * max|g|.

    The difference test is reported as ill-conditioned when 2^k times the
    quadrature noise exceeds tol_k.
    """
    model = validate(model)
    tol = settings.CM_TOL if tol is None else tol
    violations = []
    if not 1 <= order <= settings.CM_MAX_ORDER:
        violations.append(
            Violation(field="order", message=f"order out of [1, {settings.CM_MAX_ORDER}], got {order}",
                      bound=f"[1, {settings.CM_MAX_ORDER}]")
        )
    if not 0.0 < grid_step < 1.0 / (order + 2):
        violations.append(
            Violation(field="grid_step", message=f"grid_step out of (0, 1/(order+2)), got {grid_step}",
                      bound="(0, 1/(order+2))")
        )
    if violations:
        raise ParameterValidationError(violations)

    nu = levy_density(model)
    m = nu.drift
    n_points = int(math.floor(1.0 / grid_step)) - 1
    u = grid_step * np.arange(1, n_points + 1)
    g = np.array(_sweep(lambda v: nu(math.sqrt(v)) * math.exp(-m * math.sqrt(v)), list(u), workers))
    scale = float(np.max(np.abs(g)))
    noise = settings.QUAD_EPSREL * scale

    first_failure = None
    ill_conditioned = None
    diffs = g
    for k in range(1, order + 1):
        diffs = np.diff(diffs)
        tol_k = tol * math.factorial(k) * scale
        if ill_conditioned is None and 2**k * noise > tol_k:
            ill_conditioned = k
        signed = (-1) ** k * diffs
        bad = np.nonzero(signed < -tol_k)[0]
        if first_failure is None and bad.size:
            first_failure = (k, float(u[bad[0]]))

    x = _checked_grid(None)
    lhs = np.array(_sweep(lambda v: nu(v) * math.exp(-m * v), x, workers))
    rhs = np.array(_sweep(lambda v: nu(-v) * math.exp(m * v), x, workers))
    cond2 = float(np.max(np.abs(lhs - rhs) / np.maximum(np.maximum(lhs, rhs), settings.SYMMETRY_FLOOR)))

    conditioned = ill_conditioned is None
    report = CompleteMonotonicityReport(
        passes=conditioned and first_failure is None and cond2 <= condition2_tol,
        first_failure=first_failure,
        order=order,
        grid_step=grid_step,
        conditioned=conditioned,
        ill_conditioned_order=ill_conditioned,
        absolutely_continuous=True,
        condition2_residual=cond2,
        condition2_holds=cond2 <= condition2_tol,
    )
    logger.info("cm_check_completed", passes=report.passes, order=order, first_failure=first_failure)
    return report
