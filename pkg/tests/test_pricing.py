"""
Tests for martingale calibration, Fourier pricing and the duality check.

Tests verify:
- The martingale gap matches its closed form and calibration closes it
- Calibration is a fixed point and keeps mu, sigma and the clock
- Missing exponential moments are reported
- Fourier prices respect no-arbitrage bounds, monotonicity and put-call parity
- Fourier prices agree with Monte Carlo within 4 standard errors, short maturities included
- The Simpson grid grows with the frequency cutoff and is capped
- Primal calls equal dual puts for symmetric calibrated models
- A dual triplet that disagrees with the dual model stops the duality check
"""
import dataclasses
import math

import pytest

from subsym.core.config import settings
from subsym.core.errors import (
    ExitCodes,
    NoExponentialMomentError,
    NotCalibratedError,
    NotSymmetricError,
    NumericalError,
    TruncationError,
)
from subsym.schemas.models import BrownianDrift, MarketSpec, OptionSpec, Stable, TcbmModel, TemperedStable
from subsym.services import pricing
from subsym.services.density import classify_symmetry, tcbm_levy_triplet
from subsym.services.pricing import (
    calibrate_drift,
    calibration_report,
    duality_check,
    martingale_gap,
    mc_martingale_mean,
    mc_price_european,
    price_european,
    put_call_parity_residual,
    triplet_martingale_gap,
)

STRIKES = [60.0, 80.0, 95.0, 100.0, 105.0, 120.0, 160.0]


def tcbm(mu, sigma, sub, gamma=0.0):
    return TcbmModel(bm=BrownianDrift(mu=mu, sigma=sigma), subordinator=sub, gamma=gamma)


def call(strike, maturity=1.0):
    return OptionSpec(strike=strike, maturity=maturity, kind="call")


def put(strike, maturity=1.0):
    return OptionSpec(strike=strike, maturity=maturity, kind="put")


@pytest.fixture
def calibrated(desk_model, market):
    return calibrate_drift(desk_model, market)


class TestMartingaleCalibration:
    """Test martingale_gap / calibrate_drift."""

    def test_symmetric_model_in_flat_market(self, symmetric_tempered_model, flat_market):
        """Test mu = -sigma^2/2, gamma = 0, r = delta is already a martingale."""
        assert martingale_gap(symmetric_tempered_model, flat_market) == 0.0

    def test_gap_closed_form(self, flat_market):
        """Test gap = C Gamma(-alpha) [(lambda - 1/2)^alpha - lambda^alpha] for mu = 0, sigma = 1."""
        model = tcbm(0.0, 1.0, TemperedStable(c=1.0, lam=2.0, alpha=0.5))

        expected = math.gamma(-0.5) * (math.sqrt(1.5) - math.sqrt(2.0))
        assert martingale_gap(model, flat_market) == pytest.approx(expected, abs=1e-12)

    def test_calibration_closes_gap(self, market):
        """Test |gap| < 1e-12 after calibration."""
        model = tcbm(0.0, 1.0, TemperedStable(c=1.0, lam=2.0, alpha=0.5))

        calibrated = calibrate_drift(model, market)

        assert abs(martingale_gap(calibrated, market)) < 1e-12
        assert calibrated.bm == model.bm
        assert calibrated.subordinator == model.subordinator

    def test_calibration_is_fixed_point(self, calibrated, market):
        """Test calibrating a calibrated model returns it unchanged."""
        assert calibrate_drift(calibrated, market) is calibrated

    def test_calibration_keeps_symmetry(self, desk_model, market):
        """Test gamma does not enter the symmetry classification."""
        before = classify_symmetry(desk_model)
        after = classify_symmetry(calibrate_drift(desk_model, market))

        assert before.symmetric == after.symmetric
        assert before.normalized_drift == after.normalized_drift

    def test_calibration_report(self, desk_model, market):
        """Test the report carries gamma and the gap before and after."""
        model, report = calibration_report(desk_model, market)

        assert report.gamma == model.gamma
        assert report.gap_before == pytest.approx(martingale_gap(desk_model, market), abs=1e-15)
        assert abs(report.gap_after) < 1e-12

    @pytest.mark.parametrize(
        "model",
        [
            tcbm(0.0, 1.0, Stable(a=1.0, alpha=0.5)),
            tcbm(2.0, 1.0, TemperedStable(c=1.0, lam=2.0, alpha=0.5)),
        ],
        ids=["stable", "tempered-past-lambda"],
    )
    def test_no_exponential_moment(self, model, market):
        """Test E exp(Y_1) = inf cannot be calibrated."""
        with pytest.raises(NoExponentialMomentError) as exc_info:
            calibrate_drift(model, market)

        assert exc_info.value.exit_code == ExitCodes.NUMERICAL
        assert "E exp(Y_1) is infinite" in exc_info.value.message

    def test_triplet_gap(self, calibrated, market):
        """Test the quadrature gap of the calibrated triplet vanishes."""
        assert triplet_martingale_gap(tcbm_levy_triplet(calibrated), market) == pytest.approx(0.0, abs=1e-7)


class TestFourierPricing:
    """Test price_european."""

    def test_requires_calibration(self, desk_model, market):
        """Test an uncalibrated model is refused."""
        with pytest.raises(NotCalibratedError) as exc_info:
            price_european(desk_model, market, call(100.0))

        assert exc_info.value.exit_code == ExitCodes.VALIDATION
        assert "calibrate_drift" in exc_info.value.message

    def test_no_arbitrage_bounds(self, calibrated, market):
        """Test intrinsic <= price <= discounted underlying / strike."""
        T = 1.0
        forward_pv = market.spot * math.exp(-market.delta * T)
        for K in STRIKES:
            strike_pv = K * math.exp(-market.r * T)
            c = price_european(calibrated, market, call(K, T)).price
            p = price_european(calibrated, market, put(K, T)).price
            assert max(0.0, forward_pv - strike_pv) - 1e-9 <= c <= forward_pv
            assert max(0.0, strike_pv - forward_pv) - 1e-9 <= p <= strike_pv

    def test_monotone_in_strike(self, calibrated, market):
        """Test calls decrease and puts increase with the strike."""
        calls = [price_european(calibrated, market, call(K)).price for K in STRIKES]
        puts = [price_european(calibrated, market, put(K)).price for K in STRIKES]

        assert all(a > b for a, b in zip(calls, calls[1:]))
        assert all(a < b for a, b in zip(puts, puts[1:]))

    @pytest.mark.parametrize("strike", [70.0, 85.0, 100.0, 115.0, 130.0])
    def test_put_call_parity(self, calibrated, market, strike):
        """Test parity between independently transformed calls and puts."""
        assert put_call_parity_residual(calibrated, market, strike, 1.0) < 1e-6

    def test_branch_follows_moneyness(self, calibrated, market):
        """Test in-the-money calls go through the put transform and parity."""
        itm = price_european(calibrated, market, call(80.0))
        otm = price_european(calibrated, market, call(120.0))

        assert itm.branch == "put" and itm.damping < -1.0
        assert otm.branch == "call" and otm.damping > 0.0

    def test_damping_shrunk_into_strip(self, calibrated, market):
        """Test alpha + 1 stays strictly inside the moment strip."""
        report = price_european(calibrated, market, call(120.0), damping=5.0)

        upper = (0.5 + math.sqrt(0.25 + 2.0 * 1.5))
        assert 0.0 < report.damping < upper - 1.0

    def test_vanishing_strike(self, calibrated, market):
        """Test C(K) -> S0 exp(-delta T) as K -> 0."""
        report = price_european(calibrated, market, call(1e-7))

        assert report.price == pytest.approx(market.spot * math.exp(-market.delta), abs=1e-6)

    def test_grid_refinement(self, calibrated, market):
        """Test the finer Simpson grid is at least as close to a reference."""
        def price(n):
            return price_european(calibrated, market, call(110.0), grid_points=n, max_step=1.0).price

        reference, coarse, fine = price(16385), price(257), price(4097)

        assert abs(fine - reference) <= abs(coarse - reference) + 1e-12
        assert abs(fine - reference) < 1e-8

    def test_short_maturity_grid_follows_cutoff(self, calibrated, market):
        """Test the Simpson step stays at PRICING_MAX_STEP when the cutoff moves out."""
        report = price_european(calibrated, market, call(100.0, 0.01))

        assert report.cutoff > 1000.0
        assert report.cutoff / (report.grid_points - 1) <= settings.PRICING_MAX_STEP

    @pytest.mark.parametrize("strike, maturity", [(100.0, 0.01), (110.0, 0.01), (100.0, 0.05)])
    def test_short_maturity_agrees_with_monte_carlo(self, calibrated, market, strike, maturity):
        """Test short-dated Fourier prices lie within 4 standard errors of Monte Carlo."""
        fourier = price_european(calibrated, market, call(strike, maturity)).price

        estimate = mc_price_european(calibrated, market, call(strike, maturity), n_paths=100_000, seed=23)

        assert abs(estimate.value - fourier) < 4.0 * estimate.stderr

    def test_grid_too_large(self, calibrated, market, monkeypatch):
        """Test a grid above PRICING_MAX_GRID_POINTS is a truncation failure."""
        monkeypatch.setattr(settings, "PRICING_MAX_GRID_POINTS", 10_000)

        with pytest.raises(TruncationError) as exc_info:
            price_european(calibrated, market, call(100.0, 0.01))

        assert exc_info.value.exit_code == ExitCodes.NUMERICAL
        assert "PRICING_MAX_GRID_POINTS" in exc_info.value.message

    def test_stable_clock_uses_shifted_branch(self, flat_market):
        """Test the closed moment strip [0, 1] is priced on the (-1, 0) branch."""
        model = calibrate_drift(tcbm(-0.5, 1.0, Stable(a=0.2, alpha=0.5)), flat_market)

        report = price_european(model, flat_market, call(100.0))

        assert report.branch == "shifted"
        assert -1.0 < report.damping < 0.0
        assert 0.0 < report.price < flat_market.spot * math.exp(-flat_market.delta)

    def test_agrees_with_monte_carlo(self, calibrated, market):
        """Test the Fourier price lies within 4 standard errors of Monte Carlo."""
        fourier = price_european(calibrated, market, call(105.0)).price

        estimate = mc_price_european(calibrated, market, call(105.0), n_paths=100_000, seed=11)

        assert abs(estimate.value - fourier) < 4.0 * estimate.stderr
        assert estimate.n_paths == 100_000


class TestMartingaleMonteCarlo:
    """Test the simulated martingale property."""

    def test_discounted_price_has_unit_mean(self, calibrated, market):
        """Test E exp(-(r - delta) T + Y_T) = 1 within 4 standard errors."""
        estimate = mc_martingale_mean(calibrated, market, 1.0, n_paths=100_000, seed=3)

        assert abs(estimate.value - 1.0) < 4.0 * estimate.stderr


class TestDuality:
    """Test duality_check."""

    @pytest.mark.parametrize("strike", [90.0, 110.0])
    def test_call_equals_dual_put(self, calibrated, market, strike):
        """Test primal call and dual put agree to 1e-4 relative."""
        report = duality_check(calibrated, market, call(strike))

        assert report.residual < 1e-4 * report.primal
        assert report.dual_mu == calibrated.bm.mu
        assert report.dual_gamma == pytest.approx(-calibrated.gamma, rel=1e-12)
        assert report.dual_density_residual < 1e-6
        assert report.dual_drift_residual < 1e-6
        assert report.triplet_verified

    def test_at_the_money_flat_market(self, desk_model):
        """Test S0 = K and r = delta give call = put = dual put."""
        flat = MarketSpec(r=0.03, delta=0.03, spot=100.0)
        model = calibrate_drift(desk_model, flat)

        report = duality_check(model, flat, call(100.0))
        put_price = price_european(model, flat, put(100.0)).price

        assert report.residual < 1e-6
        assert abs(report.primal - put_price) < 1e-6

    def test_requires_symmetry(self, market):
        """Test a non-symmetric model is refused."""
        model = calibrate_drift(tcbm(0.0, 1.0, TemperedStable(c=0.2, lam=1.5, alpha=0.5)), market)

        with pytest.raises(NotSymmetricError) as exc_info:
            duality_check(model, market, call(100.0))

        assert exc_info.value.details["normalized_drift"] == 0.0

    def test_dual_drift_mismatch_is_an_error(self, calibrated, market, monkeypatch):
        """Test a numerical dual triplet with the wrong drift stops the check."""
        real_dual_triplet = pricing.dual_triplet

        def shifted_drift(triplet, r, delta):
            dual = real_dual_triplet(triplet, r, delta)
            return dataclasses.replace(dual, b=dual.b + 0.1)

        monkeypatch.setattr(pricing, "dual_triplet", shifted_drift)

        with pytest.raises(NumericalError) as exc_info:
            duality_check(calibrated, market, call(100.0))

        assert "drift" in exc_info.value.message
        assert exc_info.value.details["tolerance"] == pricing.DUAL_DRIFT_TOL
