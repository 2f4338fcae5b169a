"""Characteristic and Laplace exponents.

Conventions:
- Everything is a per-unit-time EXPONENT: E exp(i z Y_t) = exp(t * psi(z)),
  E exp(w T_t) = exp(t * l(w)). Characteristic functions are exp(t * psi).
- Complex powers and logarithms use the principal branch.
- Exponents accept scalars or numpy arrays; scalars come back as ``complex``.

The subordinated exponent is the composition psi_Y(z) = i*gamma*z + l(psi_BM(z)).
``levy_khintchine_exponent`` evaluates the Levy-Khintchine integral directly
from a (b, sigma^2, nu) triplet and serves as an independent oracle.
"""

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Union

import numpy as np
import structlog
from scipy.integrate import trapezoid
from scipy.special import gamma as gamma_fn

from subsym.core.config import settings
from subsym.core.errors import (
    DomainError,
    NoExponentialMomentError,
    ParameterValidationError,
    QuadratureError,
    Violation,
)
from subsym.core.quadrature import integrate
from subsym.schemas.models import (
    CGMY,
    BrownianDrift,
    Meixner,
    NamedModel,
    Stable,
    TcbmModel,
    TemperedStable,
)

logger = structlog.get_logger(__name__)

ComplexScalar = complex
ComplexLike = Union[complex, float, np.ndarray]


def _as_complex(z: ComplexLike) -> np.ndarray:
    return np.asarray(z, dtype=complex)


def _out(values: np.ndarray) -> ComplexLike:
    return complex(values) if values.ndim == 0 else values


# ═══════════════════════════════════════════════════════════════════════
# LEVY TRIPLETS
# ═══════════════════════════════════════════════════════════════════════

# Fixed grid for the construction-time integrability check of nu.
_TRIPLET_CHECK_GRID = np.geomspace(1e-4, 50.0, 24)


@dataclass(frozen=True)
class LevyTriplet1D:
    """One-dimensional Levy triplet (b, sigma^2, nu), truncation at |y| <= 1."""

    b: float
    sigma2: float
    nu: Callable[[float], float]

    def __post_init__(self):
        violations = []
        if not math.isfinite(self.b):
            violations.append(Violation(field="b", message="b must be finite", bound="finite"))
        if not (math.isfinite(self.sigma2) and self.sigma2 >= 0):
            violations.append(Violation(field="sigma2", message=f"sigma2 must be >= 0, got {self.sigma2}", bound=">= 0"))
        if not violations:
            grid = _TRIPLET_CHECK_GRID
            values = np.array([[self.nu(x), self.nu(-x)] for x in grid], dtype=float)
            if not np.all(np.isfinite(values)) or np.any(values < 0):
                violations.append(
                    Violation(field="nu", message="nu must be finite and nonnegative on the check grid", bound=">= 0")
                )
            else:
                weights = np.minimum(grid**2, 1.0)[:, None] * values
                mass = float(np.sum(trapezoid(weights, grid, axis=0)))
                if not math.isfinite(mass):
                    violations.append(
                        Violation(field="nu", message="integral of (x^2 ^ 1) nu is not finite", bound="finite")
                    )
        if violations:
            raise ParameterValidationError(violations)


# ═══════════════════════════════════════════════════════════════════════
# EXPONENTS
# ═══════════════════════════════════════════════════════════════════════

def bm_char_exponent(bm: BrownianDrift, z: ComplexLike) -> ComplexLike:
    """i mu z - sigma^2 z^2 / 2 (entire in z)."""
    z = _as_complex(z)
    return _out(1j * bm.mu * z - 0.5 * bm.sigma**2 * z * z)


def laplace_exponent(sub: Union[Stable, TemperedStable], w: ComplexLike) -> ComplexLike:
    """Per-unit-time Laplace exponent l(w), E exp(w T_t) = exp(t l(w)).

    Stable:         -A Gamma(1-alpha)/alpha (-w)^alpha,      Re(w) <= 0
    TemperedStable: C Gamma(-alpha) [(lambda-w)^alpha - lambda^alpha], Re(w) < lambda

    Raises:
        DomainError: w outside the convergence region.
    """
    w = _as_complex(w)
    if isinstance(sub, Stable):
        if np.any(w.real > 0):
            raise DomainError(
                "stable Laplace exponent requires Re(w) <= 0",
                details={"max_re_w": float(np.max(w.real)), "bound": 0.0},
            )
        with np.errstate(invalid="ignore", divide="ignore"):
            values = -sub.exponent_scale * np.power(-w, sub.alpha)
    elif isinstance(sub, TemperedStable):
        if np.any(w.real >= sub.lam):
            raise DomainError(
                f"tempered-stable Laplace exponent requires Re(w) < lambda = {sub.lam}",
                details={"max_re_w": float(np.max(w.real)), "bound": sub.lam},
            )
        values = sub.c * gamma_fn(-sub.alpha) * (np.power(sub.lam - w, sub.alpha) - sub.lam**sub.alpha)
    else:
        raise TypeError(f"unsupported subordinator {type(sub).__name__}")
    return _out(np.where(w == 0, 0j, values))


def tcbm_char_exponent(model: TcbmModel, z: ComplexLike) -> ComplexLike:
    """i gamma z + l(psi_BM(z)): the subordinated characteristic exponent."""
    z = _as_complex(z)
    inner = _as_complex(bm_char_exponent(model.bm, z))
    try:
        outer = _as_complex(laplace_exponent(model.subordinator, inner))
    except DomainError as exc:
        raise DomainError(
            f"psi_BM(z) outside the subordinator's Laplace domain: {exc.message}",
            details=exc.details,
        ) from exc
    return _out(1j * model.gamma * z + outer)


def _log_cosh(w: np.ndarray) -> np.ndarray:
    # log cosh w = |w| + log1p(exp(-2|w|)) - log 2, with |w| meaning w sign-flipped to Re >= 0
    w = np.where(w.real >= 0, w, -w)
    return w + np.log1p(np.exp(-2.0 * w)) - math.log(2.0)


def named_char_exponent(named: NamedModel, z: ComplexLike) -> ComplexLike:
    """Closed-form exponents of the named models.

    CGMY:    C Gamma(-Y) [(M - iz)^Y - M^Y + (G + iz)^Y - G^Y],  Im(z) in (-M, G)
    Meixner: 2d [log cos(b/2) - log cosh((a z - i b)/2)],      Im(z) in ((b-pi)/a, (b+pi)/a)
    """
    z = _as_complex(z)
    if isinstance(named, CGMY):
        if np.any(z.imag <= -named.m) or np.any(z.imag >= named.g):
            raise DomainError(
                f"CGMY exponent requires Im(z) in (-M, G) = ({-named.m}, {named.g})",
                details={"min_im_z": float(np.min(z.imag)), "max_im_z": float(np.max(z.imag))},
            )
        c, g, m, y = named.c, named.g, named.m, named.y
        values = c * gamma_fn(-y) * (
            np.power(m - 1j * z, y) - m**y + np.power(g + 1j * z, y) - g**y
        )
        return _out(values)
    if isinstance(named, Meixner):
        a, b, d = named.a, named.b, named.d
        lower, upper = (b - math.pi) / a, (b + math.pi) / a
        if np.any(z.imag <= lower) or np.any(z.imag >= upper):
            raise DomainError(
                f"Meixner exponent requires Im(z) in ({lower}, {upper})",
                details={"min_im_z": float(np.min(z.imag)), "max_im_z": float(np.max(z.imag))},
            )
        values = 2.0 * d * (math.log(math.cos(b / 2.0)) - _log_cosh((a * z - 1j * b) / 2.0))
        return _out(values)
    raise TypeError(f"unsupported named model {type(named).__name__}")


def char_exponent(model: Union[TcbmModel, NamedModel], z: ComplexLike) -> ComplexLike:
    """Dispatch to the subordinated or named closed-form exponent."""
    if isinstance(model, TcbmModel):
        return tcbm_char_exponent(model, z)
    return named_char_exponent(model, z)


def characteristic_function(model: Union[TcbmModel, NamedModel], z: ComplexLike, t: float) -> ComplexLike:
    """E exp(i z Y_t) = exp(t psi(z))."""
    return _out(np.exp(t * _as_complex(char_exponent(model, z))))


def dual_char_exponent(model: Union[TcbmModel, NamedModel], z: ComplexLike) -> ComplexLike:
    """Exponent of the dual process, psi(-z - i) - psi(-i).

    Requires E exp(Y_1) < inf; the result is the exponent of -Y under the
    measure tilted by exp(Y).
    """
    z = _as_complex(z)
    shifted = _as_complex(char_exponent(model, -z - 1j))
    return _out(shifted - complex(char_exponent(model, -1j)))


class MomentStrip(NamedTuple):
    """Real s with E exp(s Y_1) finite: (lower, upper), endpoints included iff closed."""

    lower: float
    upper: float
    closed: bool

    def contains(self, s: float) -> bool:
        if self.closed:
            return self.lower <= s <= self.upper
        return self.lower < s < self.upper


def moment_strip(model: Union[TcbmModel, NamedModel]) -> MomentStrip:
    """Exponential-moment interval of Y_1.

    For a subordinated model E exp(s Y_1) is finite iff psi_BM(-is) =
    mu s + sigma^2 s^2 / 2 lies in the Laplace domain of the clock.
    """
    if isinstance(model, CGMY):
        return MomentStrip(-model.g, model.m, False)
    if isinstance(model, Meixner):
        return MomentStrip(-(math.pi + model.b) / model.a, (math.pi - model.b) / model.a, False)

    mu, s2 = model.bm.mu, model.bm.sigma**2
    sub = model.subordinator
    if isinstance(sub, Stable):
        root = -2.0 * mu / s2
        return MomentStrip(min(0.0, root), max(0.0, root), True)
    # s2/2 s^2 + mu s - lambda = 0
    disc = math.sqrt(mu * mu + 2.0 * s2 * sub.lam)
    return MomentStrip((-mu - disc) / s2, (-mu + disc) / s2, False)


# ═══════════════════════════════════════════════════════════════════════
# STABLE CLOSURE
# ═══════════════════════════════════════════════════════════════════════

def stable_closure_constant(sub: Stable, B: float) -> float:
    """C = A B^alpha Gamma(1-alpha)/alpha for a stable clock over psi = -B|z|^beta."""
    return sub.a * B**sub.alpha * gamma_fn(1.0 - sub.alpha) / sub.alpha


def symmetric_stable_char_exponent(sub: Stable, B: float, beta: float, z: ComplexLike) -> ComplexLike:
    """Exponent of a symmetric beta-stable process (psi = -B|z|^beta) run on a stable clock.

    The result is symmetric (beta*alpha)-stable: -C |z|^(beta*alpha).
    """
    z = np.asarray(z, dtype=float)
    return _out(_as_complex(laplace_exponent(sub, -B * np.abs(z) ** beta)))


# ═══════════════════════════════════════════════════════════════════════
# LEVY-KHINTCHINE QUADRATURE
# ═══════════════════════════════════════════════════════════════════════

def _small_jump_moments(triplet: LevyTriplet1D, eps: float, epsabs: float, epsrel: float):
    """Integrals of y^2 (nu(y) + nu(-y)) and y^3 (nu(y) - nu(-y)) over (0, eps)."""
    nu = triplet.nu
    m2, _ = integrate(
        lambda y: y * y * (nu(y) + nu(-y)), 0.0, eps, epsabs=epsabs * 1e-3, epsrel=epsrel, label="lk_small_m2"
    )
    m3, _ = integrate(
        lambda y: y**3 * (nu(y) - nu(-y)), 0.0, eps, epsabs=epsabs * 1e-3, epsrel=epsrel, label="lk_small_m3"
    )
    return m2, m3


def levy_khintchine_exponent(
    triplet: LevyTriplet1D,
    z: ComplexLike,
    *,
    epsabs: Optional[float] = None,
    epsrel: Optional[float] = None,
    small_jump_cutoff: Optional[float] = None,
) -> complex:
    """i b z - sigma^2 z^2/2 + integral (e^{izy} - 1 - izy 1_{|y|<=1}) nu(y) dy, real z.

    The integral is split at y in {-1, 0, 1}:
    - |y| < eps: second/third-order small-jump expansion
    - eps <= |y| <= 1: adaptive quadrature
    - |y| > 1: QUADPACK Fourier-weight integration on [1, inf)

    Raises:
        DomainError: z has a nonzero imaginary part.
        QuadratureError: with the achieved error estimate.
    """
    epsabs = settings.LK_EPSABS if epsabs is None else epsabs
    epsrel = settings.LK_EPSREL if epsrel is None else epsrel
    eps = settings.LK_SMALL_JUMP_CUTOFF if small_jump_cutoff is None else small_jump_cutoff

    z = complex(z)
    if z.imag != 0.0:
        raise DomainError(
            "levy_khintchine_exponent takes real z; use levy_khintchine_cumulant for real exponential moments",
            details={"z_im": z.imag},
        )
    z = z.real
    if z == 0.0:
        return 0j

    nu = triplet.nu
    even = lambda y: nu(y) + nu(-y)  # noqa: E731
    odd = lambda y: nu(y) - nu(-y)  # noqa: E731

    m2, m3 = _small_jump_moments(triplet, eps, epsabs, epsrel)
    small = complex(-0.5 * z * z * m2, -(z**3) * m3 / 6.0)

    inner_re, _ = integrate(
        lambda y: -2.0 * math.sin(0.5 * z * y) ** 2 * even(y), eps, 1.0,
        epsabs=epsabs, epsrel=epsrel, label="lk_inner_re",
    )
    inner_im, _ = integrate(
        lambda y: (math.sin(z * y) - z * y) * odd(y), eps, 1.0,
        epsabs=epsabs, epsrel=epsrel, label="lk_inner_im",
    )

    az, sign = abs(z), math.copysign(1.0, z)
    cos_tail, _ = integrate(even, 1.0, math.inf, epsabs=epsabs, epsrel=epsrel, weight="cos", wvar=az, label="lk_tail_cos")
    sin_tail, _ = integrate(odd, 1.0, math.inf, epsabs=epsabs, epsrel=epsrel, weight="sin", wvar=az, label="lk_tail_sin")
    mass_tail, _ = integrate(even, 1.0, math.inf, epsabs=epsabs, epsrel=epsrel, label="lk_tail_mass")

    value = complex(
        -0.5 * triplet.sigma2 * z * z + inner_re + cos_tail - mass_tail,
        triplet.b * z + inner_im + sign * sin_tail,
    )
    return value + small


def exp_tilt(log_weight: float, value: float) -> float:
    """exp(log_weight) * value, computed in log space and capped below overflow."""
    if value <= 0.0:
        return 0.0
    return math.exp(min(log_weight + math.log(value), 700.0))


def _assert_tail_decays(triplet: LevyTriplet1D, s: float) -> None:
    """Cheap divergence test of exp(s y) nu(y) on the side selected by sign(s)."""
    side = 1.0 if s > 0 else -1.0
    tail_values = [exp_tilt(abs(s) * y, triplet.nu(side * y)) for y in (20.0, 40.0, 80.0)]
    if tail_values[2] >= tail_values[1] >= tail_values[0] > 0:
        raise NoExponentialMomentError(
            f"exponential moment E exp({s} Y) does not exist: exp(s y) nu(y) does not decay",
            details={"s": s, "tail_values": tail_values},
        )


def levy_khintchine_cumulant(
    triplet: LevyTriplet1D,
    s: float,
    *,
    epsabs: Optional[float] = None,
    epsrel: Optional[float] = None,
    small_jump_cutoff: Optional[float] = None,
) -> float:
    """kappa(s) = log E exp(s Y_1) = b s + sigma^2 s^2/2 + integral (e^{sy} - 1 - sy 1_{|y|<=1}) nu dy.

    Equivalently the characteristic exponent at z = -i s.

    Raises:
        NoExponentialMomentError: the exponential tail integral diverges.
    """
    epsabs = settings.LK_EPSABS if epsabs is None else epsabs
    epsrel = settings.LK_EPSREL if epsrel is None else epsrel
    eps = settings.LK_SMALL_JUMP_CUTOFF if small_jump_cutoff is None else small_jump_cutoff
    s = float(s)
    if s == 0.0:
        return 0.0
    _assert_tail_decays(triplet, s)

    nu = triplet.nu
    m2, m3 = _small_jump_moments(triplet, eps, epsabs, epsrel)
    small = 0.5 * s * s * m2 + s**3 * m3 / 6.0

    inner, _ = integrate(
        lambda y: (math.expm1(s * y) - s * y) * nu(y) + (math.expm1(-s * y) + s * y) * nu(-y),
        eps, 1.0, epsabs=epsabs, epsrel=epsrel, label="cumulant_inner",
    )

    def tail(y: float) -> float:
        right, left = nu(y), nu(-y)
        return (exp_tilt(s * y, right) - right) + (exp_tilt(-s * y, left) - left)

    try:
        outer, _ = integrate(tail, 1.0, math.inf, epsabs=epsabs, epsrel=epsrel, label="cumulant_tail")
    except QuadratureError as exc:
        raise NoExponentialMomentError(
            f"exponential moment E exp({s} Y) could not be integrated: {exc}",
            details={"s": s},
        ) from exc

    return triplet.b * s + 0.5 * triplet.sigma2 * s * s + small + inner + outer
