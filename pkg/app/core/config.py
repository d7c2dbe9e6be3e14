from typing import Tuple, Type

from pydantic import PositiveFloat, PositiveInt, model_validator
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict


class Settings(BaseSettings):
    """Numerical defaults and service metadata, loadable from the environment."""

    # API Configuration
    PROJECT_NAME: str = "NLS Graph Stability"
    VERSION: str = "1.0.0"
    API_V1_STR: str = "/api/v1"

    # Scalar model
    TOL_ROOT: PositiveFloat = 1e-12
    TOL_SERIES: PositiveFloat = 1e-4

    # Singular quadrature
    QUAD_TOL: PositiveFloat = 1e-10
    QUAD_MAX_SUBDIVISIONS: PositiveInt = 2000
    PEAK_DEGENERATE_GAP: PositiveFloat = 1e-6

    # Ground state
    TOL_Z: PositiveFloat = 1e-10

    # Stability classification
    EPS_SIGN: PositiveFloat = 1e-9
    DELTA_STAR: PositiveFloat = 1e-3

    # Transition scan
    SCAN_LAMBDA_MIN: PositiveFloat = 1e-4
    SCAN_LAMBDA_MAX: PositiveFloat = 1e4
    SCAN_POINTS: PositiveInt = 128
    REFINE_MAX_ITER: PositiveInt = 60
    REFINE_RTOL: PositiveFloat = 1e-6
    MIN_REGIME_POINTS: PositiveInt = 2

    # Phase diagram
    DIAGRAM_LAMBDA_MIN: PositiveFloat = 1e-2
    DIAGRAM_LAMBDA_MAX: PositiveFloat = 1e2
    DIAGRAM_P_MIN: PositiveFloat = 2.2
    DIAGRAM_P_MAX: PositiveFloat = 10.0
    DIAGRAM_NX: PositiveInt = 200
    DIAGRAM_NY: PositiveInt = 200

    # Shooting oracle
    ODE_RTOL: PositiveFloat = 1e-12
    ODE_ATOL: PositiveFloat = 1e-14
    ODE_SAMPLES: PositiveInt = 257

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    @model_validator(mode="after")
    def _check_ranges(self) -> "Settings":
        if self.SCAN_POINTS < 16:
            raise ValueError("SCAN_POINTS must be at least 16")
        if self.SCAN_LAMBDA_MIN >= self.SCAN_LAMBDA_MAX:
            raise ValueError("SCAN_LAMBDA_MIN must be below SCAN_LAMBDA_MAX")
        if self.DIAGRAM_LAMBDA_MIN >= self.DIAGRAM_LAMBDA_MAX:
            raise ValueError("DIAGRAM_LAMBDA_MIN must be below DIAGRAM_LAMBDA_MAX")
        if not 2.0 < self.DIAGRAM_P_MIN < self.DIAGRAM_P_MAX:
            raise ValueError("diagram p-range must satisfy 2 < DIAGRAM_P_MIN < DIAGRAM_P_MAX")
        return self

    def tolerances(self) -> dict:
        """Tolerance fields, for provenance headers."""
        return {
            name: getattr(self, name)
            for name in (
                "TOL_ROOT", "TOL_SERIES", "QUAD_TOL", "QUAD_MAX_SUBDIVISIONS",
                "PEAK_DEGENERATE_GAP", "TOL_Z", "EPS_SIGN", "DELTA_STAR",
                "REFINE_RTOL", "ODE_RTOL", "ODE_ATOL",
            )
        }

    def grid_ranges(self) -> dict:
        """Scan and phase-diagram grids, for provenance headers."""
        return {
            name: getattr(self, name)
            for name in (
                "SCAN_LAMBDA_MIN", "SCAN_LAMBDA_MAX", "SCAN_POINTS",
                "DIAGRAM_LAMBDA_MIN", "DIAGRAM_LAMBDA_MAX", "DIAGRAM_NX",
                "DIAGRAM_P_MIN", "DIAGRAM_P_MAX", "DIAGRAM_NY",
            )
        }


class CliSettings(Settings):
    """Settings built from command-line flags only; environment and .env are ignored."""

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        return (init_settings,)


settings = Settings()
