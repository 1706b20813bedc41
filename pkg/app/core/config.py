from pydantic_settings import BaseSettings
from pydantic import BaseModel, ConfigDict
from typing import Optional


class Settings(BaseSettings):
    """Application settings"""

    # Application
    APP_NAME: str = "MACLab"
    APP_VERSION: str = "1.0.0"
    ENVIRONMENT: str = "development"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # Runner
    MACLAB_THREADS: Optional[int] = None
    OUTPUT_DIR: str = "results"
    HORIZON_CAP: int = 10_000

    # Graph quantities
    INDEPENDENCE_EXACT_LIMIT: int = 24

    model_config = ConfigDict(
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )


class Tolerances(BaseModel):
    """Numeric tolerances shared by every solver and invariant check"""

    model_config = ConfigDict(frozen=True)

    simplex_sum: float = 1e-12
    kkt_residual: float = 1e-10
    eigen: float = 1e-9
    bisection_steps: int = 200
    newton_steps: int = 100
    probability_floor: float = 1e-12
    tsallis_bracket_offset: float = 1e-15


# Create settings instance
settings = Settings()
tolerances = Tolerances()
