"""Integration tests for the command-line surface: one run() per test, JSON on stdout."""

from __future__ import annotations

import json
from unittest.mock import patch

import pytest

from reeb_volume import __main__ as cli
from reeb_volume.config import Settings
from tests.conftest import unchecked_decomposition

# ---------------- helpers ----------------


def _run(capsys: pytest.CaptureFixture[str], settings: Settings, *argv: str) -> tuple[int, dict]:
    code = cli.run(list(argv), settings=settings)
    out = capsys.readouterr().out
    return code, json.loads(out)


# ---------------- validate ----------------


def test_validate_good_cone(capsys, test_settings):
    code, report = _run(capsys, test_settings, "validate", "corpus:conifold")
    assert code == 0
    assert report["command"] == "validate"
    assert report["goodness"]["good"] is True
    assert report["calabi_yau"]["gamma"] == ["-1", "0", "0"]
    assert report["calabi_yau"]["origin"] == ["1/3", "0", "0"]
    assert report["cone"]["rays"] == [[0, 0, 1], [0, 1, 0], [1, -1, 0], [1, 0, -1]]
    assert "error" not in report


def test_validate_cone_not_good(capsys, test_settings):
    code, report = _run(capsys, test_settings, "validate", "corpus:dp0")
    assert code == 2
    assert report["error"]["type"] == "ConeNotGood"
    assert report["error"]["details"]["elementary_divisors"] == [[1, 1, 3]]
    assert report["goodness"]["good_away_from_apex"] is True


def test_validate_without_calabi_yau_vector(capsys, test_settings):
    code, report = _run(capsys, test_settings, "validate", "corpus:non_cy")
    assert code == 3
    assert report["error"]["type"] == "NoCalabiYauVector"
    assert "calabi_yau" not in report


def test_validate_spec_file(capsys, test_settings, tmp_path):
    path = tmp_path / "orthant.json"
    path.write_text(json.dumps({"dim": 2, "facet_normals": [[1, 0], [0, 1]]}))
    code, report = _run(capsys, test_settings, "validate", str(path))
    assert code == 0
    assert report["calabi_yau"]["origin"] == ["1/2", "1/2"]


def test_invalid_spec_file_reports_location(capsys, test_settings, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"dim": 2,\n "facet_normals": [[1, 0] [0, 1]]}')
    code, report = _run(capsys, test_settings, "validate", str(path))
    assert code == 2
    assert report["error"]["type"] == "InvalidSpec"
    assert report["error"]["details"]["line"] == 2


def test_zero_normal_is_invalid_input(capsys, test_settings, tmp_path):
    path = tmp_path / "zero.json"
    path.write_text(json.dumps({"dim": 2, "facet_normals": [[1, 0], [0, 0]]}))
    code, report = _run(capsys, test_settings, "validate", str(path))
    assert code == 2
    assert report["error"]["exit_code"] == 2


# ---------------- minimize ----------------


def test_minimize_conifold(capsys, test_settings):
    code, report = _run(capsys, test_settings, "minimize", "corpus:conifold")
    assert code == 0
    result = report["minimization"]
    assert result["status"] == "Converged"
    assert result["existence_verdict"] == "TransverseKE"
    assert result["xi_star"] == pytest.approx([3.0, 1.5, 1.5])
    assert report["obstruction"]["futaki_norm"] == pytest.approx(0.0, abs=1e-9)
    assert report["stokes"]["max_relative"] < 1e-10


def test_minimize_exact_certificate(capsys, test_settings):
    code, report = _run(capsys, test_settings, "minimize", "corpus:conifold", "--mode", "exact")
    assert code == 0
    assert report["obstruction"]["xi_exact"] == ["3", "3/2", "3/2"]
    assert report["obstruction"]["volume_exact"] == "8/27"
    assert report["stokes"]["exact"] is True
    assert report["stokes"]["exact_values"]["volume"] == "0"


def test_minimize_balanced_decomposition(capsys, test_settings):
    code, report = _run(
        capsys, test_settings, "minimize", "corpus:conifold", "--decomposition", "corpus:conifold-balanced"
    )
    assert code == 0
    assert report["minimization"]["existence_verdict"] == "TransverseCoupledKE"
    assert report["obstruction"]["coupled_norm"] == pytest.approx(0.0, abs=1e-9)


def test_minimize_skewed_decomposition_fails_the_hypothesis(capsys, test_settings):
    code, report = _run(
        capsys, test_settings, "minimize", "corpus:orthant2", "--decomposition", "corpus:orthant2-skewed"
    )
    assert code == 4
    assert report["minimization"]["existence_verdict"] == "HypothesisFails"
    assert report["minimization"]["minkowski_holds"] is False


def test_minimize_boundary_escape_exits_diverged(capsys, test_settings, tmp_path):
    path = tmp_path / "inner.json"
    path.write_text(json.dumps({"base_reeb": ["1", "1"], "pieces": [{"vertices": [["3/5", "2/5"], ["4/5", "1/5"]]}]}))

    def unchecked(cone, cy, base, pieces):
        return unchecked_decomposition(cone, ["1", "1"], *[[[str(x) for x in v] for v in p] for p in pieces])

    with patch("reeb_volume.__main__.build_decomposition", side_effect=unchecked):
        code, report = _run(capsys, test_settings, "minimize", "corpus:orthant2", "--decomposition", str(path))
    assert code == 5
    assert report["minimization"]["status"] == "DivergedToBoundary"
    assert report["minimization"]["existence_verdict"] == "NoCriticalPoint"
    assert "obstruction" not in report


def test_minimize_rejects_pieces_that_miss_the_slice(capsys, test_settings, tmp_path):
    path = tmp_path / "inner.json"
    path.write_text(json.dumps({"base_reeb": ["1", "1"], "pieces": [{"vertices": [["3/5", "2/5"], ["4/5", "1/5"]]}]}))
    code, report = _run(capsys, test_settings, "minimize", "corpus:orthant2", "--decomposition", str(path))
    assert code == 2
    assert report["error"]["type"] == "InvalidDecomposition"
    assert report["error"]["details"]["discrepancy"] > 0


def test_minimize_middle_halves_is_coupled_ke(capsys, test_settings):
    code, report = _run(
        capsys, test_settings, "minimize", "corpus:orthant2", "--decomposition", "corpus:orthant2-halves"
    )
    assert code == 0
    assert report["minimization"]["existence_verdict"] == "TransverseCoupledKE"
    assert report["minimization"]["xi_star"] == pytest.approx([1.0, 1.0])


def test_minimize_iteration_budget(capsys, test_settings):
    code, report = _run(
        capsys, test_settings, "minimize", "corpus:orthant3", "--start", "3/2,6/5,3/10", "--max-iter", "1"
    )
    assert code == 6
    assert report["minimization"]["status"] == "MaxIter"


def test_minimize_rejects_an_infeasible_start(capsys, test_settings):
    code, report = _run(capsys, test_settings, "minimize", "corpus:orthant2", "--start", "3,-1")
    assert code == 2
    assert report["error"]["type"] == "InfeasibleReeb"


def test_minimize_with_grid_certificate(capsys, test_settings):
    code, report = _run(capsys, test_settings, "minimize", "corpus:orthant2", "--grid-certify", "21")
    assert code == 0
    assert report["grid"]["passes"] is True
    assert report["grid"]["resolution"] == 21


def test_grid_certificate_resolution_falls_back_to_settings(capsys, test_settings):
    settings = test_settings.model_copy(update={"grid_resolution": 11})
    code, report = _run(capsys, settings, "minimize", "corpus:orthant2", "--grid-certify")
    assert code == 0
    assert report["grid"]["resolution"] == 11


def test_float_identity_tolerance_comes_from_settings(capsys, test_settings):
    settings = test_settings.model_copy(update={"float_identity_tol": 1e-8})
    code, report = _run(capsys, settings, "minimize", "corpus:conifold")
    assert code == 0
    assert report["stokes"]["tolerance"] == 1e-8
    assert report["stokes"]["holds"] is True


def test_oracle_threshold_follows_the_sigma_level(capsys, test_settings):
    settings = test_settings.model_copy(update={"mc_sigma_level": 5.0})
    code, report = _run(capsys, settings, "oracle", "corpus:orthant2", "--samples", "20000")
    thresholds = {row["sigma_threshold"] for row in report["oracle"]["moments"]}
    assert len(thresholds) == 1
    assert thresholds.pop() > 5.0
    assert code == 0


def test_minimize_with_oracle(capsys, test_settings):
    code, report = _run(
        capsys, test_settings, "minimize", "corpus:orthant3", "--oracle-samples", "20000", "--seed", "3"
    )
    assert code == 0
    assert report["oracle"]["seed"] == 3
    assert [m["name"] for m in report["oracle"]["moments"]] == ["M0", "M1", "M2"]


def test_minimize_invalid_decomposition(capsys, test_settings, tmp_path):
    path = tmp_path / "pieces.json"
    path.write_text(json.dumps({"base_reeb": ["1", "2"], "pieces": [{"vertices": [["1", "0"], ["0", "1"]]}]}))
    code, report = _run(capsys, test_settings, "minimize", "corpus:orthant2", "--decomposition", str(path))
    assert code == 2
    assert report["error"]["type"] == "InvalidDecomposition"


# ---------------- twist-demo and oracle ----------------


def test_twist_demo_shows_the_failed_sum(capsys, test_settings):
    code, report = _run(
        capsys, test_settings, "twist-demo", "corpus:orthant2", "corpus:orthant2-skewed", "2/3,4/3"
    )
    assert code == 0
    twist = report["twist"]
    assert twist["base_reeb"] == ["4/3", "2/3"]
    assert twist["xi_prime"] == ["2/3", "4/3"]
    assert twist["holds"] is False
    assert twist["true_slice"] == [[0.0, 0.75], [1.5, 0.0]]
    assert twist["twisted_pieces"][0] == pytest.approx([[1 / 6, 2 / 3], [5 / 6, 1 / 3]])


def test_twist_demo_off_slice_covector(capsys, test_settings):
    code, report = _run(capsys, test_settings, "twist-demo", "corpus:orthant2", "corpus:orthant2-skewed", "1,2")
    assert code == 2
    assert report["error"]["type"] == "OffSliceReeb"


def test_oracle_at_the_chart_base(capsys, test_settings):
    code, report = _run(capsys, test_settings, "oracle", "corpus:orthant3", "--samples", "20000")
    assert code == 0
    oracle = report["oracle"]
    assert oracle["samples"] == 20000
    assert oracle["xi"] == [1.0, 1.0, 1.0]
    assert oracle["agrees"] is True


def test_oracle_with_pieces_and_finite_differences(capsys, test_settings):
    code, report = _run(
        capsys,
        test_settings,
        "oracle",
        "corpus:conifold",
        "--decomposition",
        "corpus:conifold-balanced",
        "--xi",
        "3,1,2",
        "--samples",
        "20000",
        "--fd-points",
        "2",
    )
    assert code == 0
    names = [m["name"] for m in report["oracle"]["moments"]]
    assert names[3:6] == ["piece1.M0", "piece1.M1", "piece1.M2"]
    assert len(report["oracle"]["derivatives"]) == 2


# ---------------- global flags and errors ----------------


def test_schema(capsys, test_settings):
    code = cli.run(["--schema"], settings=test_settings)
    schema = json.loads(capsys.readouterr().out)
    assert code == 0
    assert "minimization" in schema["properties"]


def test_missing_command_is_a_usage_error(capsys, test_settings):
    code, report = _run(capsys, test_settings)
    assert code == 2
    assert report["error"]["type"] == "UsageError"


def test_unknown_flag_is_a_usage_error(capsys, test_settings):
    code, report = _run(capsys, test_settings, "minimize", "corpus:conifold", "--bogus")
    assert code == 2
    assert report["error"]["type"] == "UsageError"


def test_invalid_override_is_a_usage_error(capsys, test_settings):
    code, report = _run(capsys, test_settings, "minimize", "corpus:conifold", "--max-iter", "0")
    assert code == 2
    assert report["error"]["message"] == "invalid configuration"


def test_unexpected_exception_is_an_internal_error(capsys, test_settings):
    with patch("reeb_volume.__main__.minimize", side_effect=RuntimeError("boom")):
        code, report = _run(capsys, test_settings, "minimize", "corpus:conifold")
    assert code == 1
    assert report["error"] == {"type": "InternalError", "message": "boom", "exit_code": 1, "details": {}}


def test_output_is_byte_stable(capsys, test_settings):
    argv = ["minimize", "corpus:conifold", "--decomposition", "corpus:conifold-balanced"]
    cli.run(argv, settings=test_settings)
    first = capsys.readouterr().out
    cli.run(argv, settings=test_settings)
    assert capsys.readouterr().out == first


def test_timing_only_on_request(capsys, test_settings):
    _, plain = _run(capsys, test_settings, "validate", "corpus:conifold")
    _, timed = _run(capsys, test_settings, "--timing", "validate", "corpus:conifold")
    assert "timing" not in plain
    assert set(timed["timing"]) == {"validate"}


def test_text_format(capsys, test_settings):
    code = cli.run(["--format", "text", "minimize", "corpus:conifold"], settings=test_settings)
    out = capsys.readouterr().out
    assert code == 0
    assert out.startswith("reeb-volume 1.0.0 :: minimize")
    assert "verdict:    TransverseKE" in out
    assert out.rstrip().endswith("exit code 0")
