from pydantic_settings import BaseSettings
from pydantic import ConfigDict


class Settings(BaseSettings):
    model_config = ConfigDict(
        env_prefix="SUBSYM_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    APP_NAME: str = "subsym"
    APP_VERSION: str = "0.1.0"
    LOG_LEVEL: str = "WARNING"
    ENVIRONMENT: str = "development"

    # Mixture-integral density quadrature (relative accuracy only)
    QUAD_EPSABS: float = 0.0
    QUAD_EPSREL: float = 1e-11
    QUAD_LIMIT: int = 200

    # Levy-Khintchine quadrature
    LK_EPSABS: float = 1e-10
    LK_EPSREL: float = 1e-8
    LK_SMALL_JUMP_CUTOFF: float = 1e-4

    # Symmetry residual
    SYMMETRY_TOL: float = 1e-6
    SYMMETRY_GRID_MIN: float = 0.05
    SYMMETRY_GRID_MAX: float = 5.0
    SYMMETRY_GRID_POINTS: int = 20
    SYMMETRY_FLOOR: float = 1e-300

    # Complete monotonicity
    CM_TOL: float = 1e-8
    CM_MAX_ORDER: int = 8

    # Fourier pricing
    PRICING_DAMPING: float = 0.75
    PRICING_GRID_POINTS: int = 4096
    PRICING_MAX_STEP: float = 0.05
    PRICING_MAX_GRID_POINTS: int = 2**21
    PRICING_CUTOFF_TOL: float = 1e-12
    PRICING_MAX_FREQUENCY: float = 1e5
    CALIBRATION_TOL: float = 1e-10

    # Monte Carlo
    MC_MAX_REJECTION_ROUNDS: int = 10_000
    MC_WORKERS: int = 1


settings = Settings()
