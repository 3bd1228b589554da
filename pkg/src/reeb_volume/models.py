"""Data models for cone/decomposition specs, optimizer results and run reports."""

from __future__ import annotations

from enum import StrEnum
from typing import TYPE_CHECKING, Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .numeric import parse_rational

if TYPE_CHECKING:
    from .config import Settings

Mode = Literal["single", "coupled"]
NumericMode = Literal["exact", "float"]


class Status(StrEnum):
    CONVERGED = "Converged"
    DIVERGED_TO_BOUNDARY = "DivergedToBoundary"
    MAX_ITER = "MaxIter"


class Verdict(StrEnum):
    TRANSVERSE_KE = "TransverseKE"
    TRANSVERSE_COUPLED_KE = "TransverseCoupledKE"
    HYPOTHESIS_FAILS = "HypothesisFails"
    NO_CRITICAL_POINT = "NoCriticalPoint"
    UNKNOWN = "Unknown"


class _Report(BaseModel):
    model_config = ConfigDict(allow_inf_nan=False, extra="forbid")


# ---------------- input specs ----------------


class ConeSpec(BaseModel):
    """A cone spec file: integer facet normals of a moment cone."""

    model_config = ConfigDict(extra="forbid")

    dim: int = Field(ge=2, description="Ambient dimension n = m + 1")
    facet_normals: list[list[int]] = Field(
        min_length=1, description="Inward facet normals; integers only"
    )

    @field_validator("facet_normals", mode="before")
    @classmethod
    def _integers_only(cls, value: Any) -> Any:
        if isinstance(value, list):
            for row in value:
                if isinstance(row, list) and any(
                    isinstance(x, bool) or not isinstance(x, int) for x in row
                ):
                    raise ValueError("facet normal entries must be integers")
        return value

    @model_validator(mode="after")
    def _lengths_match_dim(self) -> ConeSpec:
        for index, normal in enumerate(self.facet_normals):
            if len(normal) != self.dim:
                raise ValueError(f"facet_normals[{index}] has length {len(normal)}, expected {self.dim}")
        return self


def _check_rational_strings(values: list[str]) -> list[str]:
    for text in values:
        parse_rational(text)
    return values


class PieceSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    vertices: list[list[str]] = Field(
        min_length=1, description="Vertices on the base slice as 'p/q' strings"
    )

    @field_validator("vertices")
    @classmethod
    def _rationals(cls, value: list[list[str]]) -> list[list[str]]:
        for row in value:
            _check_rational_strings(row)
        return value


class DecompositionSpec(BaseModel):
    """A Minkowski decomposition of the slice at ``base_reeb``."""

    model_config = ConfigDict(extra="forbid")

    base_reeb: list[str] = Field(min_length=2, description="Base Reeb covector as 'p/q' strings")
    pieces: list[PieceSpec] = Field(min_length=1)

    @field_validator("base_reeb")
    @classmethod
    def _rationals(cls, value: list[str]) -> list[str]:
        return _check_rational_strings(value)


# ---------------- optimizer ----------------


class MinimizationConfig(BaseModel):
    """Newton minimizer settings."""

    model_config = ConfigDict(frozen=True)

    grad_tol: float = Field(default=1e-10, gt=0)
    max_iter: int = Field(default=100, gt=0)
    backtrack_factor: float = Field(default=0.5, gt=0, lt=1)
    max_backtracks: int = Field(default=60, gt=0)
    min_feasibility_margin: float = Field(default=1e-14, gt=0)
    boundary_margin_ratio: float = Field(
        default=1e-8,
        gt=0,
        lt=1,
        description=(
            "An iterate whose ray-pairing margin falls below this fraction of the "
            "starting margin is treated as escaping to the boundary."
        ),
    )
    minkowski_tol: float = Field(default=1e-9, gt=0)
    mode: Mode = "single"

    @classmethod
    def from_settings(cls, settings: Settings, mode: Mode = "single") -> MinimizationConfig:
        return cls(
            grad_tol=settings.grad_tol,
            max_iter=settings.max_iter,
            backtrack_factor=settings.backtrack_factor,
            max_backtracks=settings.max_backtracks,
            min_feasibility_margin=settings.min_feasibility_margin,
            minkowski_tol=settings.minkowski_tol,
            mode=mode,
        )


class MinimizationResult(_Report):
    xi_star: list[float]
    W_star: float
    grad_norm: float
    hess_min_eig: float
    status: Status
    iterations: int
    stalled: bool = Field(
        default=False,
        description="the line search found no decrease at float resolution; status stays MaxIter",
    )
    feasibility_margin: float
    per_piece_volumes: list[float]
    minkowski_holds: bool | None = None
    minkowski_discrepancy: float | None = None
    existence_verdict: Verdict
    start: list[float] = Field(description="Start covector (analytic center unless overridden)")
    history: list[float] = Field(description="W after the start and after every accepted step")


class GridCertificate(_Report):
    resolution: int
    evaluated: int
    grid_min: float
    grid_argmin: list[float]
    W_star: float
    margin: float = Field(description="grid_min - W_star; negative beyond tolerance fails")
    passes: bool
    within_one_cell: bool


# ---------------- reports ----------------


class ConeReport(_Report):
    dim: int
    facet_normals: list[list[int]]
    rays: list[list[int]]
    warnings: list[str] = Field(default_factory=list)


class FaceGoodness(_Report):
    rays: list[list[int]]
    active_normals: list[list[int]]
    dimension: int
    elementary_divisors: list[int]
    saturated: bool
    is_apex: bool


class GoodnessReport(_Report):
    faces: list[FaceGoodness]
    good: bool
    good_away_from_apex: bool


class CalabiYauReport(_Report):
    gamma: list[str]
    origin: list[str]
    m: int


class StokesReport(_Report):
    exact: bool
    volume_residual: float
    first_moment_residual: list[float]
    cone_slice_residuals: dict[str, float] = Field(default_factory=dict)
    max_relative: float
    holds: bool = Field(description="residuals vanish (exact) or stay within ``tolerance``")
    tolerance: float | None = None
    exact_values: dict[str, Any] | None = None


class ObstructionReport(_Report):
    xi: list[float]
    xi_exact: list[str] | None = None
    futaki_vector: list[float] | None = None
    futaki_norm: float | None = None
    coupled_vector: list[float] | None = None
    coupled_norm: float | None = None
    barycenter_offset: float | None = Field(
        default=None, description="|barycenter(P) - o| for the whole slice"
    )
    volume_exact: str | None = None
    exact: dict[str, Any] | None = None


class MomentComparison(_Report):
    name: str
    exact: list[float]
    estimate: list[float]
    std_error: list[float]
    max_sigma: float
    sigma_threshold: float = Field(description="per-entry bound in standard errors")
    agrees: bool


class DerivativeComparison(_Report):
    xi: list[float]
    gradient_error: float
    hessian_error: float
    agrees: bool


class OracleReport(_Report):
    seed: int
    samples: int
    xi: list[float]
    moments: list[MomentComparison]
    derivatives: list[DerivativeComparison] = Field(default_factory=list)
    agrees: bool


class TwistReport(_Report):
    base_reeb: list[str]
    xi_prime: list[str]
    twisted_pieces: list[list[list[float]]]
    twisted_sum: list[list[float]]
    true_slice: list[list[float]]
    discrepancy: float
    witness: list[float] | None = None
    witness_in: Literal["sum", "slice"] | None = None
    holds: bool


class ErrorReport(_Report):
    type: str
    message: str
    exit_code: int
    details: dict[str, Any] = Field(default_factory=dict)


class RunReport(_Report):
    """Everything a CLI command emits on stdout."""

    command: Literal["validate", "minimize", "twist-demo", "oracle"] | None = None
    tool_version: str
    cone: ConeReport | None = None
    calabi_yau: CalabiYauReport | None = None
    goodness: GoodnessReport | None = None
    minimization: MinimizationResult | None = None
    obstruction: ObstructionReport | None = None
    stokes: StokesReport | None = None
    grid: GridCertificate | None = None
    oracle: OracleReport | None = None
    twist: TwistReport | None = None
    timing: dict[str, float] | None = None
    error: ErrorReport | None = None
    exit_code: int = 0
