"""Unit tests for the Pydantic config and data models."""

from __future__ import annotations

import pytest
from pydantic import ValidationError

from reeb_volume.config import Settings, load_settings
from reeb_volume.models import (
    ConeSpec,
    DecompositionSpec,
    ErrorReport,
    MinimizationConfig,
    PieceSpec,
    RunReport,
    Status,
    Verdict,
)
from tests.conftest import NoEnvSettings


def test_settings_defaults(test_settings: Settings):
    """Defaults apart from the fixture's own overrides."""
    assert test_settings.seed == 20240611
    assert test_settings.grad_tol == 1e-10
    assert test_settings.max_iter == 100
    assert test_settings.backtrack_factor == 0.5
    assert test_settings.certificate_max_denominator == 10**12
    assert test_settings.grid_resolution == 51
    assert test_settings.fd_step == 1e-5
    assert test_settings.log_level == "WARNING"
    assert test_settings.oracle_samples == 20_000


def test_settings_override_from_env(monkeypatch: pytest.MonkeyPatch):
    """Prefixed environment variables override defaults."""
    monkeypatch.setenv("REEB_VOLUME_SEED", "7")
    monkeypatch.setenv("REEB_VOLUME_MAX_ITER", "12")
    monkeypatch.setenv("REEB_VOLUME_LOG_LEVEL", "DEBUG")

    s = load_settings()
    assert s.seed == 7
    assert s.max_iter == 12
    assert s.log_level == "DEBUG"


def test_settings_ignore_unprefixed_env(monkeypatch: pytest.MonkeyPatch):
    monkeypatch.delenv("REEB_VOLUME_SEED", raising=False)
    monkeypatch.setenv("SEED", "7")
    assert NoEnvSettings().seed == 20240611


@pytest.mark.parametrize(
    "field,value",
    [("grad_tol", 0), ("max_iter", 0), ("backtrack_factor", 1.0), ("seed", -1), ("grid_resolution", 1)],
)
def test_settings_reject_out_of_range_values(field, value):
    with pytest.raises(ValidationError):
        NoEnvSettings(**{field: value})


def test_minimization_config_from_settings(test_settings: Settings):
    config = MinimizationConfig.from_settings(test_settings, mode="coupled")
    assert config.mode == "coupled"
    assert config.grad_tol == test_settings.grad_tol
    assert config.max_backtracks == test_settings.max_backtracks


def test_minimization_config_is_frozen():
    config = MinimizationConfig()
    with pytest.raises(ValidationError):
        config.max_iter = 5  # type: ignore[misc]


# ---------------- input specs ----------------


def test_cone_spec_validates():
    spec = ConeSpec(dim=2, facet_normals=[[1, 0], [0, 1]])
    assert spec.facet_normals == [[1, 0], [0, 1]]


def test_cone_spec_rejects_non_integer_entries():
    with pytest.raises(ValidationError, match="integers"):
        ConeSpec.model_validate({"dim": 2, "facet_normals": [[1.5, 0], [0, 1]]})


def test_cone_spec_rejects_booleans():
    with pytest.raises(ValidationError, match="integers"):
        ConeSpec.model_validate({"dim": 2, "facet_normals": [[True, 0], [0, 1]]})


def test_cone_spec_rejects_wrong_lengths():
    with pytest.raises(ValidationError, match=r"facet_normals\[1\] has length 3"):
        ConeSpec(dim=2, facet_normals=[[1, 0], [0, 1, 0]])


def test_cone_spec_forbids_unknown_fields():
    with pytest.raises(ValidationError):
        ConeSpec.model_validate({"dim": 2, "facet_normals": [[1, 0]], "name": "x"})


def test_decomposition_spec_accepts_rational_strings():
    spec = DecompositionSpec(base_reeb=["4/3", "2/3"], pieces=[PieceSpec(vertices=[["1/4", "1"]])])
    assert spec.pieces[0].vertices == [["1/4", "1"]]


def test_decomposition_spec_rejects_bad_rationals():
    with pytest.raises(ValidationError):
        DecompositionSpec(base_reeb=["4/3", "two"], pieces=[PieceSpec(vertices=[["1", "0"]])])
    with pytest.raises(ValidationError):
        PieceSpec(vertices=[["1/0", "1"]])


def test_decomposition_spec_needs_pieces():
    with pytest.raises(ValidationError):
        DecompositionSpec(base_reeb=["1", "1"], pieces=[])


# ---------------- reports ----------------


def test_enums_serialize_as_their_names():
    assert Status.DIVERGED_TO_BOUNDARY == "DivergedToBoundary"
    assert Verdict.HYPOTHESIS_FAILS.value == "HypothesisFails"


def test_reports_reject_non_finite_floats():
    with pytest.raises(ValidationError):
        RunReport(tool_version="1", timing={"total": float("nan")})


def test_run_report_defaults():
    report = RunReport(tool_version="1.0.0")
    assert report.exit_code == 0
    assert report.command is None
    assert report.error is None


def test_error_report_details_default_factory_is_independent():
    a = ErrorReport(type="X", message="m", exit_code=2)
    b = ErrorReport(type="X", message="m", exit_code=2)
    a.details["k"] = 1
    assert b.details == {}
