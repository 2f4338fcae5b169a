"""Global pytest configuration for subsym.

This file sets up fixtures shared by all tests:
1. Structured logging is configured once per session (JSON to stderr)
2. The reference models used across the suite
3. A flat market with r = delta
"""

import pytest

from subsym.core.logging_config import configure_logging
from subsym.schemas.models import (
    CGMY,
    BrownianDrift,
    MarketSpec,
    Meixner,
    Stable,
    TcbmModel,
    TemperedStable,
)


@pytest.fixture(scope="session", autouse=True)
def structured_logging():
    """Configure structlog once per test session.

    Scope: session (runs once per pytest session, not per test)
    """
    configure_logging(level="WARNING")
    yield


@pytest.fixture
def stable_model() -> TcbmModel:
    """Stable clock A=1, alpha=1/2 under standard Brownian motion (mu=0)."""
    return TcbmModel(bm=BrownianDrift(mu=0.0, sigma=1.0), subordinator=Stable(a=1.0, alpha=0.5))


@pytest.fixture
def symmetric_tempered_model() -> TcbmModel:
    """Tempered clock C=1, lambda=1, alpha=1/2 with mu = -sigma^2/2."""
    return TcbmModel(
        bm=BrownianDrift(mu=-0.5, sigma=1.0),
        subordinator=TemperedStable(c=1.0, lam=1.0, alpha=0.5),
    )


@pytest.fixture
def desk_model() -> TcbmModel:
    """Moderate-volatility symmetric model used for pricing."""
    return TcbmModel(
        bm=BrownianDrift(mu=-0.5, sigma=1.0),
        subordinator=TemperedStable(c=0.2, lam=1.5, alpha=0.5),
    )


@pytest.fixture
def symmetric_cgmy() -> CGMY:
    return CGMY(c=1.0, g=2.0, m=3.0, y=0.5)


@pytest.fixture
def symmetric_meixner() -> Meixner:
    return Meixner(a=2.0, b=-1.0, d=0.5)


@pytest.fixture
def flat_market() -> MarketSpec:
    return MarketSpec(r=0.03, delta=0.03, spot=100.0)


@pytest.fixture
def market() -> MarketSpec:
    return MarketSpec(r=0.05, delta=0.02, spot=100.0)
