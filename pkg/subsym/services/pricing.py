"""Martingale calibration, Fourier pricing and the put-call duality check.

Prices use the damped-transform representation at a single log-strike
k = log K:

    V = R + S0 exp(alpha x) exp(-rT) / pi * int_0^inf Re[exp(i v x + T psi(v - (alpha+1) i))
                                                 / ((alpha + i v)(alpha + 1 + i v))] dv

with x = log(S0/K). alpha > 0 prices the call (R = 0), alpha in (-1, 0) the
call with R = S0 exp(-delta T), alpha < -1 the put (R = 0). The integral runs
on a uniform grid with Simpson weights up to the frequency where
|exp(T psi(v))| drops below the cutoff tolerance.
"""

import math
from typing import Dict, Literal, Optional, Tuple

import numpy as np
import structlog

from subsym.core.config import settings
from subsym.core.errors import (
    DomainError,
    NoExponentialMomentError,
    NotCalibratedError,
    NotSymmetricError,
    NumericalError,
    TruncationError,
)
from subsym.schemas.models import MarketSpec, OptionSpec, TcbmModel
from subsym.schemas.reports import CalibrationReport, DualityReport, MonteCarloEstimate, PriceReport
from subsym.services.charfn import LevyTriplet1D, char_exponent, laplace_exponent, levy_khintchine_cumulant, moment_strip
from subsym.services.density import (
    classify_symmetry,
    default_symmetry_grid,
    dual_model,
    dual_triplet,
    levy_density,
    tcbm_levy_triplet,
)
from subsym.services.mc import simulate_terminal
from subsym.services.models import validate

logger = structlog.get_logger(__name__)


# ═══════════════════════════════════════════════════════════════════════
# MARTINGALE CONDITION
# ═══════════════════════════════════════════════════════════════════════

def _exponential_moment(model: TcbmModel) -> float:
    """l(mu + sigma^2/2), the log of E exp(mu T_1 + sigma W(T_1))."""
    w = model.bm.mu + 0.5 * model.bm.sigma**2
    try:
        return laplace_exponent(model.subordinator, w).real
    except DomainError as exc:
        raise NoExponentialMomentError(
            f"E exp(Y_1) is infinite: mu + sigma^2/2 = {w} outside the clock's Laplace domain",
            details={"w": w, **exc.details},
        ) from exc


def martingale_gap(model: TcbmModel, market: MarketSpec) -> float:
    """gamma + l(mu + sigma^2/2) - (r - delta); zero for a martingale model.

    Raises:
        NoExponentialMomentError: mu + sigma^2/2 outside the Laplace domain.
    """
    model = validate(model)
    market = validate(market, kind=MarketSpec)
    return model.gamma + _exponential_moment(model) - (market.r - market.delta)


def calibrate_drift(model: TcbmModel, market: MarketSpec) -> TcbmModel:
    """Set gamma = (r - delta) - l(mu + sigma^2/2); mu, sigma and the clock are kept."""
    model = validate(model)
    market = validate(market, kind=MarketSpec)
    gamma = (market.r - market.delta) - _exponential_moment(model)
    if gamma == model.gamma:
        return model
    logger.info("drift_calibrated", gamma_before=model.gamma, gamma_after=gamma)
    return model.model_copy(update={"gamma": gamma})


def calibration_report(model: TcbmModel, market: MarketSpec) -> Tuple[TcbmModel, CalibrationReport]:
    before = martingale_gap(model, market)
    calibrated = calibrate_drift(model, market)
    return calibrated, CalibrationReport(
        gamma=calibrated.gamma, gap_before=before, gap_after=martingale_gap(calibrated, market)
    )


def triplet_martingale_gap(triplet: LevyTriplet1D, market: MarketSpec) -> float:
    """kappa(1) - (r - delta) computed from a Levy triplet by quadrature."""
    market = validate(market, kind=MarketSpec)
    return levy_khintchine_cumulant(triplet, 1.0) - (market.r - market.delta)


def _require_calibrated(model: TcbmModel, market: MarketSpec) -> None:
    gap = martingale_gap(model, market)
    if abs(gap) >= settings.CALIBRATION_TOL:
        raise NotCalibratedError(
            f"model is not a martingale in this market: |martingale_gap| = {abs(gap):.3e} "
            f">= {settings.CALIBRATION_TOL:.1e}; run calibrate_drift first",
            details={"martingale_gap": gap},
        )


# ═══════════════════════════════════════════════════════════════════════
# FOURIER PRICING
# ═══════════════════════════════════════════════════════════════════════

def _simpson_weights(n: int) -> np.ndarray:
    weights = (3.0 + (-1.0) ** np.arange(1, n + 1)) / 3.0
    weights[0] = 1.0 / 3.0
    return weights


Branch = Literal["call", "shifted", "put"]


def _admissible_branches(model: TcbmModel, damping: float) -> Dict[str, float]:
    """Damping alpha per branch for which alpha + 1 lies strictly inside the moment strip."""
    strip = moment_strip(model)
    lower, upper = strip.lower, strip.upper
    branches: Dict[str, float] = {}
    if upper > 1.0:
        branches["call"] = min(damping, 0.5 * (upper - 1.0))
    if lower < 0.0:
        branches["put"] = -1.0 - min(damping, -0.5 * lower)
    lo, hi = max(lower, 0.0), min(upper, 1.0)
    if hi > lo:
        branches["shifted"] = 0.5 * (lo + hi) - 1.0
    if not branches:
        raise DomainError(
            f"moment strip ({lower}, {upper}) leaves no admissible damping",
            details={"strip_lower": lower, "strip_upper": upper},
        )
    return branches


def _choose_damping(model: TcbmModel, x: float, damping: float, branch: Optional[str]) -> Tuple[float, str]:
    """Damping alpha and branch; by default the one keeping exp(alpha x) <= 1."""
    branches = _admissible_branches(model, damping)
    if branch is None:
        preferred = ("put", "shifted", "call") if x >= 0.0 else ("call", "shifted", "put")
    else:
        preferred = (branch, "shifted")
    for name in preferred:
        if name in branches:
            return branches[name], name
    raise DomainError(
        f"damping branch {branch!r} is not admissible for this model",
        details={"branch": branch, "admissible": sorted(branches)},
    )


def _cutoff(model: TcbmModel, maturity: float, tol: float, max_frequency: float) -> float:
    v = 8.0
    while v <= max_frequency:
        if abs(np.exp(maturity * char_exponent(model, v))) < tol:
            return v
        v *= 2.0
    raise TruncationError(
        f"|exp(T psi(v))| stays above {tol:.1e} up to frequency {max_frequency:.1e}",
        details={"max_frequency": max_frequency, "tolerance": tol},
    )


def _grid_size(cutoff: float, grid_points: int, max_step: float) -> int:
    """Points needed so the Simpson step stays at or below ``max_step``."""
    n = max(grid_points, int(math.ceil(cutoff / max_step)) + 1)
    if n > settings.PRICING_MAX_GRID_POINTS:
        raise TruncationError(
            f"frequency cutoff {cutoff:.1e} needs {n} grid points at step {max_step}, "
            f"above PRICING_MAX_GRID_POINTS = {settings.PRICING_MAX_GRID_POINTS}",
            details={"cutoff": cutoff, "grid_points": n, "max_step": max_step},
        )
    return n


def _damped_integral(model: TcbmModel, maturity: float, x: float, alpha: float, cutoff: float, n: int) -> float:
    v = np.linspace(0.0, cutoff, n)
    shifted = v - (alpha + 1.0) * 1j
    log_cf = 1j * v * x + maturity * np.asarray(char_exponent(model, shifted))
    values = np.real(np.exp(log_cf) / ((alpha + 1j * v) * (alpha + 1.0 + 1j * v)))
    eta = cutoff / (n - 1)
    return float(np.sum(_simpson_weights(n) * values) * eta)


def price_european(
    model: TcbmModel,
    market: MarketSpec,
    opt: OptionSpec,
    *,
    damping: Optional[float] = None,
    grid_points: Optional[int] = None,
    cutoff_tol: Optional[float] = None,
    max_step: Optional[float] = None,
    branch: Optional[Branch] = None,
) -> PriceReport:
    """European price by damped Fourier inversion of exp(T psi).

    The transform is taken on the branch whose damping factor exp(alpha x)
    stays below one (put side in the money, call side out of it) and the
    requested kind follows by put-call parity. ``branch`` forces a branch,
    falling back to the shifted call when it is not admissible.

    The grid has at least ``grid_points`` points and is refined until its
    step is at most ``max_step``; short maturities push the cutoff out and
    get proportionally more points.

    Raises:
        NotCalibratedError: |martingale_gap| >= CALIBRATION_TOL.
        DomainError: the moment strip admits no damping.
        TruncationError: the characteristic function does not decay below
            the cutoff tolerance before PRICING_MAX_FREQUENCY, or the grid
            would need more than PRICING_MAX_GRID_POINTS points.
    """
    model = validate(model)
    market = validate(market, kind=MarketSpec)
    opt = validate(opt, kind=OptionSpec)
    damping = settings.PRICING_DAMPING if damping is None else damping
    grid_points = settings.PRICING_GRID_POINTS if grid_points is None else grid_points
    cutoff_tol = settings.PRICING_CUTOFF_TOL if cutoff_tol is None else cutoff_tol
    max_step = settings.PRICING_MAX_STEP if max_step is None else max_step
    _require_calibrated(model, market)

    T, K, S0 = opt.maturity, opt.strike, market.spot
    x = math.log(S0 / K)
    alpha, used = _choose_damping(model, x, damping, branch)
    cutoff = _cutoff(model, T, cutoff_tol, settings.PRICING_MAX_FREQUENCY)
    n = _grid_size(cutoff, grid_points, max_step)
    forward_pv = S0 * math.exp(-market.delta * T)
    strike_pv = K * math.exp(-market.r * T)

    integral = _damped_integral(model, T, x, alpha, cutoff, n)
    value = S0 * math.exp(alpha * x - market.r * T) / math.pi * integral
    if used == "shifted":
        value += forward_pv
    priced_kind = "put" if used == "put" else "call"
    if priced_kind != opt.kind:
        value += forward_pv - strike_pv if opt.kind == "call" else strike_pv - forward_pv

    logger.debug(
        "option_priced", kind=opt.kind, strike=K, maturity=T, damping=alpha, branch=used, cutoff=cutoff, grid_points=n
    )
    return PriceReport(
        price=value,
        kind=opt.kind,
        strike=K,
        maturity=T,
        damping=alpha,
        branch=used,
        cutoff=cutoff,
        grid_points=n,
    )


def put_call_parity_residual(model: TcbmModel, market: MarketSpec, strike: float, maturity: float, **kwargs) -> float:
    """|C - P - (S0 exp(-delta T) - K exp(-r T))| with the call and the put on their own branches."""
    call = price_european(
        model, market, OptionSpec(strike=strike, maturity=maturity, kind="call"), branch="call", **kwargs
    )
    put = price_european(
        model, market, OptionSpec(strike=strike, maturity=maturity, kind="put"), branch="put", **kwargs
    )
    parity = market.spot * math.exp(-market.delta * maturity) - strike * math.exp(-market.r * maturity)
    return abs(call.price - put.price - parity)


# ═══════════════════════════════════════════════════════════════════════
# DUALITY
# ═══════════════════════════════════════════════════════════════════════

DUAL_DENSITY_TOL = 1e-6
DUAL_DRIFT_TOL = 1e-6


def duality_check(
    model: TcbmModel,
    market: MarketSpec,
    opt: OptionSpec,
    *,
    grid_points: Optional[int] = None,
) -> DualityReport:
    """Call in the primal market against the put on the dual triplet.

    The dual put has spot K and strike S0 in the market with r and delta
    swapped; its model is the subordinated representation of the numerically
    built dual triplet, cross-checked point by point on the symmetry grid.

    Raises:
        NotSymmetricError: the model fails the symmetry criterion.
        NotCalibratedError: the model is not a martingale in ``market``.
        NumericalError: the numerical dual triplet disagrees with the
            subordinated dual model in its density or its drift. The dual
            put is priced only once both agree.
    """
    model = validate(model)
    market = validate(market, kind=MarketSpec)
    opt = validate(opt, kind=OptionSpec)

    symmetry = classify_symmetry(model)
    if not symmetry.symmetric:
        raise NotSymmetricError(
            f"duality check needs a symmetric model: mu/sigma^2 = {symmetry.normalized_drift} != -1/2",
            details={"mu": symmetry.drift, "normalized_drift": symmetry.normalized_drift},
        )
    _require_calibrated(model, market)

    numeric = dual_triplet(tcbm_levy_triplet(model), market.r, market.delta)
    dual = dual_model(model, market)
    dual_nu = levy_density(dual)
    points = default_symmetry_grid()
    mismatch = max(
        abs(numeric.nu(x) - dual_nu(x)) / max(numeric.nu(x), dual_nu(x))
        for x in points + [-p for p in points]
    )
    if mismatch > DUAL_DENSITY_TOL:
        raise NumericalError(
            f"dual triplet density disagrees with the dual model: relative mismatch {mismatch:.3e}",
            details={"mismatch": mismatch, "tolerance": DUAL_DENSITY_TOL},
        )
    drift_from_model = tcbm_levy_triplet(dual).b
    drift_residual = abs(drift_from_model - numeric.b)
    if drift_residual > DUAL_DRIFT_TOL * max(1.0, abs(numeric.b)):
        raise NumericalError(
            f"dual triplet drift {numeric.b} disagrees with the dual model drift {drift_from_model}",
            details={"triplet_drift": numeric.b, "model_drift": drift_from_model, "tolerance": DUAL_DRIFT_TOL},
        )

    primal = price_european(model, market, opt.model_copy(update={"kind": "call"}), grid_points=grid_points)
    dual_put = OptionSpec(strike=market.spot, maturity=opt.maturity, kind="put")
    dual_price = price_european(dual, market.dual(spot=opt.strike), dual_put, grid_points=grid_points)

    residual = abs(primal.price - dual_price.price)
    logger.info("duality_checked", primal=primal.price, dual=dual_price.price, residual=residual)
    return DualityReport(
        primal=primal.price,
        dual=dual_price.price,
        residual=residual,
        dual_gamma=dual.gamma,
        dual_mu=dual.bm.mu,
        dual_triplet_drift=numeric.b,
        dual_density_residual=mismatch,
        dual_drift_residual=drift_residual,
        triplet_verified=True,
    )


# ═══════════════════════════════════════════════════════════════════════
# MONTE CARLO ORACLES
# ═══════════════════════════════════════════════════════════════════════

def _mean_and_stderr(samples: np.ndarray) -> Tuple[float, float]:
    n = samples.size
    mean = math.fsum(samples) / n
    var = math.fsum((samples - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def mc_price_european(
    model: TcbmModel,
    market: MarketSpec,
    opt: OptionSpec,
    n_paths: int,
    seed: int,
    *,
    workers: Optional[int] = None,
) -> MonteCarloEstimate:
    """Discounted payoff averaged over exact draws of Y_T."""
    model = validate(model)
    market = validate(market, kind=MarketSpec)
    opt = validate(opt, kind=OptionSpec)
    y = simulate_terminal(model, opt.maturity, n_paths, seed, workers=workers)
    spot_t = market.spot * np.exp(y)
    payoff = np.maximum(spot_t - opt.strike, 0.0) if opt.kind == "call" else np.maximum(opt.strike - spot_t, 0.0)
    value, stderr = _mean_and_stderr(math.exp(-market.r * opt.maturity) * payoff)
    return MonteCarloEstimate(value=value, stderr=stderr, n_paths=n_paths)


def mc_martingale_mean(
    model: TcbmModel,
    market: MarketSpec,
    maturity: float,
    n_paths: int,
    seed: int,
    *,
    workers: Optional[int] = None,
) -> MonteCarloEstimate:
    """Sample mean of exp(-(r - delta) T + Y_T); 1 for a calibrated model."""
    model = validate(model)
    market = validate(market, kind=MarketSpec)
    y = simulate_terminal(model, maturity, n_paths, seed, workers=workers)
    value, stderr = _mean_and_stderr(np.exp(y - (market.r - market.delta) * maturity))
    return MonteCarloEstimate(value=value, stderr=stderr, n_paths=n_paths)
