"""Centralized configuration loaded from environment variables.

Uses Pydantic BaseSettings for validation and type safety. Every field can be
set through an ``REEB_VOLUME_``-prefixed environment variable or a ``.env``
file; CLI flags override individual values per run.
"""

from __future__ import annotations

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables / .env file."""

    model_config = SettingsConfigDict(
        env_prefix="REEB_VOLUME_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    seed: int = Field(
        default=20240611,
        ge=0,
        lt=2**64,
        description="Default seed for Monte-Carlo oracles and random property checks.",
    )

    grad_tol: float = Field(default=1e-10, gt=0, description="Newton stopping tolerance")
    max_iter: int = Field(default=100, gt=0, description="Maximum Newton iterations")
    backtrack_factor: float = Field(
        default=0.5, gt=0, lt=1, description="Step shrink factor during backtracking"
    )
    max_backtracks: int = Field(
        default=60, gt=0, description="Backtracking halvings before a step is abandoned"
    )
    min_feasibility_margin: float = Field(
        default=1e-14,
        gt=0,
        description=(
            "Smallest accepted ray pairing. Iterates whose margin falls below this "
            "are reported as escaping to the boundary of the Reeb slice."
        ),
    )

    minkowski_tol: float = Field(
        default=1e-9, gt=0, description="Vertex tolerance when comparing float polytopes"
    )
    float_identity_tol: float = Field(
        default=1e-10, gt=0, description="Relative tolerance for float identity residuals"
    )
    certificate_max_denominator: int = Field(
        default=10**12,
        gt=0,
        description="Denominator bound used to rationalize a float minimizer for exact certificates.",
    )

    oracle_samples: int = Field(default=1_000_000, gt=0, description="Monte-Carlo sample count")
    mc_batch_size: int = Field(default=100_000, gt=0, description="Samples per Monte-Carlo batch")
    mc_sigma_level: float = Field(
        default=3.0,
        gt=0,
        description=(
            "Monte-Carlo agreement level in standard errors, family-wise over the "
            "entries of M0, M1 and M2"
        ),
    )
    grid_resolution: int = Field(
        default=51, ge=2, description="Grid points per chart axis when --grid-certify has no value"
    )
    fd_step: float = Field(default=1e-5, gt=0, description="Finite-difference step")
    workers: int = Field(
        default=4, gt=0, description="Threads for grid sweeps and Monte-Carlo batches"
    )

    log_level: str = Field(default="WARNING", description="Logging level")


def load_settings() -> Settings:
    """Load settings from environment, with clear error on invalid values."""
    return Settings()
