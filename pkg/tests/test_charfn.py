"""
Tests for characteristic and Laplace exponents.

Tests verify:
- Stable clocks over symmetric stable motion stay stable (closed-form constant)
- The tempered-stable composition matches its closed form
- Exponents vanish at zero, are Hermitian and have nonpositive real part
- Domain errors outside the Laplace domain and the named-model strips
- Moment strips of every family
- The Levy-Khintchine quadrature reproduces the composed exponents
- The dual exponent agrees with the dual subordinated model
"""
import math

import numpy as np
import pytest
from scipy.special import gamma as gamma_fn

from subsym.core.errors import DomainError, NoExponentialMomentError, ParameterValidationError
from subsym.schemas.models import CGMY, BrownianDrift, MarketSpec, Meixner, Stable, TcbmModel, TemperedStable
from subsym.services.charfn import (
    LevyTriplet1D,
    char_exponent,
    characteristic_function,
    dual_char_exponent,
    laplace_exponent,
    levy_khintchine_cumulant,
    levy_khintchine_exponent,
    moment_strip,
    named_char_exponent,
    stable_closure_constant,
    symmetric_stable_char_exponent,
)
from subsym.services.density import dual_model, named_levy_triplet, tcbm_levy_triplet
from subsym.services.pricing import calibrate_drift

Z_GRID = [z for z in np.linspace(-10.0, 10.0, 51) if z != 0.0]


def tcbm(mu, sigma, sub, gamma=0.0):
    return TcbmModel(bm=BrownianDrift(mu=mu, sigma=sigma), subordinator=sub, gamma=gamma)


class TestStableClosure:
    """Test stable clocks over symmetric stable motion."""

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7])
    @pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
    def test_brownian_motion_on_stable_clock(self, alpha, a):
        """Test psi(z) = -C|z|^(2 alpha), C = A (sigma^2/2)^alpha Gamma(1-alpha)/alpha."""
        sub = Stable(a=a, alpha=alpha)
        model = tcbm(0.0, math.sqrt(2.0), sub)
        constant = stable_closure_constant(sub, 1.0)

        for z in Z_GRID:
            expected = -constant * abs(z) ** (2.0 * alpha)
            value = complex(char_exponent(model, z))
            assert abs(value - expected) <= 1e-10 * abs(expected)

    def test_closure_constant(self):
        """Test C = A B^alpha Gamma(1-alpha)/alpha."""
        sub = Stable(a=2.0, alpha=0.5)

        assert stable_closure_constant(sub, 4.0) == pytest.approx(2.0 * 2.0 * math.sqrt(math.pi) / 0.5, rel=1e-14)

    @pytest.mark.parametrize("beta", [0.5, 1.0, 1.5, 2.0])
    def test_symmetric_stable_inner_process(self, beta):
        """Test a symmetric beta-stable motion on a stable clock is (beta alpha)-stable."""
        sub = Stable(a=0.7, alpha=0.6)
        B = 1.3
        constant = stable_closure_constant(sub, B)

        for z in (-4.0, -0.3, 0.8, 6.0):
            value = complex(symmetric_stable_char_exponent(sub, B, beta, z))
            expected = -constant * abs(z) ** (beta * sub.alpha)
            assert value.real == pytest.approx(expected, rel=1e-12)
            assert value.imag == pytest.approx(0.0, abs=1e-12 * abs(expected))


class TestTemperedComposition:
    """Test the tempered-stable subordinated exponent."""

    @pytest.mark.parametrize("lam", [0.5, 1.0, 3.0])
    @pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
    def test_matches_closed_form(self, lam, alpha):
        """Test psi(z) = C Gamma(-alpha) [(lambda + sigma^2 z^2/2 - i mu z)^alpha - lambda^alpha]."""
        model = tcbm(-0.5, 1.0, TemperedStable(c=1.0, lam=lam, alpha=alpha))

        for z in (-3.0, 0.5, 1.0, 2.0, 5.0):
            inner = complex(lam + 0.5 * z * z, 0.5 * z)
            expected = gamma_fn(-alpha) * (inner**alpha - lam**alpha)
            value = complex(char_exponent(model, z))
            assert abs(value - expected) <= 1e-12 * abs(expected)

    def test_gamma_adds_linear_term(self, symmetric_tempered_model):
        """Test gamma contributes i gamma z."""
        shifted = symmetric_tempered_model.model_copy(update={"gamma": 0.3})

        for z in (0.5, 2.0):
            delta = complex(char_exponent(shifted, z)) - complex(char_exponent(symmetric_tempered_model, z))
            assert delta == pytest.approx(0.3j * z, abs=1e-14)


class TestExponentProperties:
    """Test structural properties shared by every family."""

    MODELS = [
        tcbm(0.0, 1.0, Stable(a=1.0, alpha=0.5)),
        tcbm(-0.5, 1.0, TemperedStable(c=1.0, lam=1.0, alpha=0.5)),
        tcbm(0.3, 0.4, TemperedStable(c=2.0, lam=4.0, alpha=0.8), gamma=0.1),
        CGMY(c=1.0, g=2.0, m=3.0, y=0.5),
        Meixner(a=2.0, b=-1.0, d=0.5),
    ]

    @pytest.mark.parametrize("model", MODELS)
    def test_zero_at_origin(self, model):
        """Test psi(0) = 0."""
        assert complex(char_exponent(model, 0.0)) == pytest.approx(0j, abs=1e-14)

    @pytest.mark.parametrize("model", MODELS)
    def test_hermitian(self, model):
        """Test psi(-z) = conj(psi(z)) for real z."""
        z = np.array([0.1, 0.7, 2.0, 9.0])
        np.testing.assert_allclose(char_exponent(model, -z), np.conj(char_exponent(model, z)), rtol=1e-12)

    @pytest.mark.parametrize("model", MODELS)
    def test_real_part_nonpositive(self, model):
        """Test |E exp(i z Y_1)| <= 1."""
        z = np.linspace(-20.0, 20.0, 81)

        assert np.all(np.real(char_exponent(model, z)) <= 1e-14)

    def test_array_and_scalar_agree(self, symmetric_tempered_model):
        """Test vectorised evaluation equals pointwise evaluation."""
        z = np.array([0.5, 1.0, 2.0])
        vector = char_exponent(symmetric_tempered_model, z)

        for zi, value in zip(z, vector):
            scalar = complex(char_exponent(symmetric_tempered_model, float(zi)))
            assert scalar == pytest.approx(complex(value), rel=1e-15)

    def test_characteristic_function_is_exp_t_psi(self, symmetric_tempered_model):
        """Test E exp(i z Y_t) = exp(t psi(z))."""
        psi = complex(char_exponent(symmetric_tempered_model, 1.5))

        assert complex(characteristic_function(symmetric_tempered_model, 1.5, 2.0)) == pytest.approx(
            np.exp(2.0 * psi), rel=1e-14
        )


class TestDomains:
    """Test Laplace domains, named-model strips and moment strips."""

    def test_stable_laplace_domain(self):
        """Test Re(w) > 0 is outside the stable Laplace domain."""
        sub = Stable(a=1.0, alpha=0.5)

        assert complex(laplace_exponent(sub, 0.0)) == 0j
        assert complex(laplace_exponent(sub, -1.0)).real < 0
        with pytest.raises(DomainError) as exc_info:
            laplace_exponent(sub, 0.1)
        assert "Re(w) <= 0" in exc_info.value.message

    def test_tempered_laplace_domain_is_open(self):
        """Test Re(w) = lambda is rejected, Re(w) < lambda accepted."""
        sub = TemperedStable(c=1.0, lam=2.0, alpha=0.5)

        assert np.isfinite(complex(laplace_exponent(sub, 1.999)))
        with pytest.raises(DomainError):
            laplace_exponent(sub, 2.0)

    def test_tcbm_outside_domain(self, stable_model):
        """Test psi(-i s) with psi_BM outside the clock's domain raises."""
        with pytest.raises(DomainError):
            char_exponent(stable_model, -1j)

    def test_cgmy_strip(self, symmetric_cgmy):
        """Test Im(z) must lie in (-M, G)."""
        assert np.isfinite(complex(named_char_exponent(symmetric_cgmy, 1.0 + 1.9j)))
        with pytest.raises(DomainError):
            named_char_exponent(symmetric_cgmy, 2.0j)
        with pytest.raises(DomainError):
            named_char_exponent(symmetric_cgmy, -3.0j)

    def test_cgmy_closed_form(self, symmetric_cgmy):
        """Test the CGMY exponent against its defining formula."""
        z = 1.7
        expected = gamma_fn(-0.5) * ((3.0 - 1j * z) ** 0.5 - 3.0**0.5 + (2.0 + 1j * z) ** 0.5 - 2.0**0.5)

        assert complex(char_exponent(symmetric_cgmy, z)) == pytest.approx(expected, rel=1e-13)

    def test_meixner_strip(self, symmetric_meixner):
        """Test Im(z) must lie in ((b-pi)/a, (b+pi)/a)."""
        upper = (-1.0 + math.pi) / 2.0
        with pytest.raises(DomainError):
            named_char_exponent(symmetric_meixner, upper * 1j)

    def test_meixner_mean(self):
        """Test -i psi'(0) = a d tan(b/2)."""
        named = Meixner(a=1.5, b=0.7, d=2.0)
        h = 1e-5
        slope = (complex(char_exponent(named, h)) - complex(char_exponent(named, -h))) / (2.0 * h)

        assert (slope / 1j).real == pytest.approx(1.5 * 2.0 * math.tan(0.35), rel=1e-7)

    def test_moment_strips(self, stable_model, symmetric_tempered_model, symmetric_cgmy, symmetric_meixner):
        """Test the exponential-moment intervals of every family."""
        assert moment_strip(stable_model) == (0.0, 0.0, True)
        assert moment_strip(tcbm(-0.5, 1.0, Stable(a=1.0, alpha=0.5))) == (0.0, 1.0, True)

        strip = moment_strip(symmetric_tempered_model)
        assert (strip.lower, strip.upper, strip.closed) == (pytest.approx(-1.0), pytest.approx(2.0), False)

        assert moment_strip(symmetric_cgmy) == (-2.0, 3.0, False)
        strip = moment_strip(symmetric_meixner)
        assert strip.lower == pytest.approx(-(math.pi - 1.0) / 2.0)
        assert strip.upper == pytest.approx((math.pi + 1.0) / 2.0)

    def test_moment_strip_matches_exponent_domain(self, symmetric_tempered_model):
        """Test psi(-i s) is finite inside the strip and raises past it."""
        strip = moment_strip(symmetric_tempered_model)

        assert np.isfinite(complex(char_exponent(symmetric_tempered_model, -1j * (strip.upper - 1e-6))))
        with pytest.raises(DomainError):
            char_exponent(symmetric_tempered_model, -1j * (strip.upper + 1e-6))


class TestLevyKhintchine:
    """Test the Levy-Khintchine quadrature oracle."""

    def test_gaussian_triplet(self):
        """Test i b z - sigma^2 z^2/2 for a triplet without jumps."""
        triplet = LevyTriplet1D(b=0.3, sigma2=2.0, nu=lambda x: 0.0)

        assert levy_khintchine_exponent(triplet, 1.5) == pytest.approx(complex(-2.25, 0.45), abs=1e-12)

    def test_complex_argument_rejected(self):
        """Test the oracle only takes real z."""
        triplet = LevyTriplet1D(b=0.0, sigma2=1.0, nu=lambda x: 0.0)

        with pytest.raises(DomainError):
            levy_khintchine_exponent(triplet, 1.0 + 0.5j)

    def test_triplet_rejects_negative_density(self):
        """Test nu must be nonnegative."""
        with pytest.raises(ParameterValidationError) as exc_info:
            LevyTriplet1D(b=0.0, sigma2=0.0, nu=lambda x: -1.0)

        assert exc_info.value.violations[0].field == "nu"

    @pytest.mark.parametrize(
        "model",
        [
            tcbm(0.0, 1.0, Stable(a=1.0, alpha=0.5)),
            tcbm(-0.5, 1.0, TemperedStable(c=1.0, lam=1.0, alpha=0.5)),
        ],
        ids=["stable", "tempered"],
    )
    def test_density_reproduces_composed_exponent(self, model):
        """Test the LK integral of the mixture density equals l(psi_BM(z))."""
        triplet = tcbm_levy_triplet(model)

        for z in (0.5, 1.0, 2.0, 5.0):
            expected = complex(char_exponent(model, z))
            value = levy_khintchine_exponent(triplet, z)
            assert abs(value - expected) <= 1e-4 * abs(expected)

    def test_cgmy_triplet(self, symmetric_cgmy):
        """Test the CGMY triplet reproduces the closed form."""
        triplet = named_levy_triplet(symmetric_cgmy)

        for z in (0.5, 2.0):
            expected = complex(char_exponent(symmetric_cgmy, z))
            assert abs(levy_khintchine_exponent(triplet, z) - expected) <= 1e-6 * abs(expected)

    def test_meixner_triplet(self):
        """Test the Meixner triplet reproduces the closed form, drift included."""
        named = Meixner(a=1.0, b=0.5, d=1.0)
        triplet = named_levy_triplet(named)

        for z in (0.5, 2.0):
            expected = complex(char_exponent(named, z))
            assert abs(levy_khintchine_exponent(triplet, z) - expected) <= 1e-6 * abs(expected)

    def test_cumulant_matches_exponent(self, symmetric_cgmy):
        """Test kappa(s) = psi(-i s) inside the moment strip."""
        triplet = named_levy_triplet(symmetric_cgmy)

        for s in (-1.0, 1.0, 2.5):
            expected = complex(char_exponent(symmetric_cgmy, -1j * s)).real
            assert levy_khintchine_cumulant(triplet, s) == pytest.approx(expected, rel=1e-6)

    def test_cumulant_outside_strip(self, symmetric_cgmy):
        """Test a divergent exponential moment is reported, not integrated."""
        triplet = named_levy_triplet(symmetric_cgmy)

        with pytest.raises(NoExponentialMomentError):
            levy_khintchine_cumulant(triplet, 4.0)


class TestDualExponent:
    """Test psi~(z) = psi(-z - i) - psi(-i)."""

    def test_zero_at_origin(self, symmetric_tempered_model):
        """Test the dual exponent vanishes at 0."""
        assert complex(dual_char_exponent(symmetric_tempered_model, 0.0)) == pytest.approx(0j, abs=1e-15)

    def test_symmetric_model_is_self_dual(self, symmetric_tempered_model):
        """Test psi~ = psi when mu = -sigma^2/2 and gamma = 0."""
        for z in (0.5, 1.0, 3.0):
            assert complex(dual_char_exponent(symmetric_tempered_model, z)) == pytest.approx(
                complex(char_exponent(symmetric_tempered_model, z)), rel=1e-12
            )

    def test_matches_dual_model(self):
        """Test the dual exponent equals the exponent of the dual subordinated model once calibrated."""
        market = MarketSpec(r=0.0, delta=0.0, spot=1.0)
        model = calibrate_drift(tcbm(0.2, 0.8, TemperedStable(c=0.5, lam=3.0, alpha=0.4)), market)
        dual = dual_model(model, market)

        assert dual.gamma == pytest.approx(-model.gamma, rel=1e-12)
        for z in (0.5, 1.0, 4.0):
            assert complex(char_exponent(dual, z)) == pytest.approx(
                complex(dual_char_exponent(model, z)), rel=1e-10
            )
