"""Unit tests for moment cones: validation, rays, goodness, gamma and the Reeb slice."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from reeb_volume.errors import (
    InfeasibleReeb,
    InvalidCone,
    NoCalabiYauVector,
    NotFullDimensional,
    NotPointed,
    OffSliceReeb,
)
from reeb_volume.lattice_cone import (
    dual_round_trip,
    enumerate_rays,
    face_lattice,
    goodness_check,
    is_feasible_reeb,
    make_reeb_covector,
    project_to_slice,
    reeb_slice_basis,
    solve_gamma,
    validate_cone,
)
from reeb_volume.numeric import exact
from tests.conftest import corpus_cone

# ---------------- validation ----------------


def test_validate_sorts_normals(conifold):
    assert conifold.facet_normals == ((1, 0, 0), (1, 0, 1), (1, 1, 0), (1, 1, 1))
    assert conifold.m == 2
    assert conifold.warnings == ()


def test_validate_primitivizes_and_dedupes_with_warnings(caplog):
    cone = validate_cone([[2, 0], [0, 1], [1, 0]])
    assert cone.facet_normals == ((0, 1), (1, 0))
    assert any("primitivized" in w for w in cone.warnings)
    assert any("duplicate" in w for w in cone.warnings)
    assert "Cone canonicalization" in caplog.text


def test_validate_drops_redundant_normal():
    # (1, 1) only touches the orthant at the apex
    cone = validate_cone([[1, 0], [0, 1], [1, 1]])
    assert cone.facet_normals == ((0, 1), (1, 0))
    assert any("redundant" in w for w in cone.warnings)


def test_validated_cones_are_hashable_and_compare_by_normals():
    a = validate_cone([[1, 0], [0, 1]])
    b = validate_cone([[0, 1], [2, 0]])
    assert a == b
    assert len({a, b}) == 1


@pytest.mark.parametrize(
    "normals,match",
    [
        ([], "no facet normals"),
        ([[1, 0], [0, 1, 0]], "length"),
        ([[1, 0], [0, 0]], "zero"),
        ([[1, 0, 0], [0, 1, 0]], "at least 3"),
        ([[1, 0], [0, 1.5]], "non-integer"),
    ],
)
def test_validate_rejects_malformed_normals(normals, match):
    with pytest.raises(InvalidCone, match=match):
        validate_cone(normals)


def test_validate_rejects_non_pointed_cone():
    with pytest.raises(NotPointed):
        validate_cone([[1, 0, 0], [-1, 0, 0], [0, 1, 0]])


def test_validate_rejects_lower_dimensional_cone():
    with pytest.raises(NotFullDimensional):
        validate_cone([[1, 0], [-1, 0], [0, 1]])


# ---------------- rays and faces ----------------


def test_conifold_rays(conifold):
    assert enumerate_rays(conifold) == [(0, 0, 1), (0, 1, 0), (1, -1, 0), (1, 0, -1)]


@pytest.mark.parametrize("name", ["orthant2", "orthant3", "conifold", "dp0", "spp", "index2"])
def test_rays_pair_nonnegatively_and_dualize_back(name):
    cone = corpus_cone(name)
    pairings = cone.rays_array @ cone.normals_array.T
    assert all(v >= 0 for v in pairings.ravel())
    assert dual_round_trip(cone) == tuple(sorted(cone.facet_normals))


def test_face_lattice_of_conifold(conifold):
    faces = face_lattice(conifold)
    by_dim = {d: [f for f in faces if f.dimension == d and not f.is_apex] for d in (1, 2)}
    assert len(by_dim[2]) == 4
    assert len(by_dim[1]) == 4
    assert sum(f.is_apex for f in faces) == 1
    assert all(len(f.normals) == 2 for f in by_dim[1])


# ---------------- goodness ----------------


@pytest.mark.parametrize("name", ["orthant2", "orthant3", "conifold"])
def test_smooth_cones_are_good(name):
    report = goodness_check(corpus_cone(name))
    assert report.good
    assert report.good_away_from_apex


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_orthants_are_good_in_every_dimension(n):
    cone = validate_cone([[1 if i == j else 0 for j in range(n)] for i in range(n)])
    report = goodness_check(cone)
    assert report.good
    assert all(f.saturated for f in report.faces)
    assert len(report.faces) == 2**n - 1


def test_index_two_cone_is_not_good_at_the_apex():
    report = goodness_check(corpus_cone("index2"))
    assert not report.good
    assert report.good_away_from_apex
    apex = next(f for f in report.faces if f.is_apex)
    assert apex.elementary_divisors == [1, 2]


def test_orbifold_quotient_fails_only_at_the_apex(dp0):
    report = goodness_check(dp0)
    assert report.good_away_from_apex
    assert not report.good
    apex = next(f for f in report.faces if f.is_apex)
    assert apex.elementary_divisors == [1, 1, 3]


def test_suspended_pinch_point_has_a_singular_edge():
    report = goodness_check(corpus_cone("spp"))
    assert not report.good_away_from_apex
    assert any(f.elementary_divisors == [1, 2] for f in report.faces if not f.is_apex)


# ---------------- Calabi-Yau vector ----------------


def test_gamma_of_orthant(orthant3):
    cy = solve_gamma(orthant3)
    assert cy.gamma == (-1, -1, -1)
    assert cy.origin == (Fraction(1, 3),) * 3
    assert cy.m == 2


def test_gamma_of_conifold(conifold_cy):
    assert conifold_cy.gamma == (-1, 0, 0)
    assert conifold_cy.origin == (Fraction(1, 3), 0, 0)


def test_gamma_missing_raises():
    with pytest.raises(NoCalabiYauVector):
        solve_gamma(corpus_cone("non_cy"))


@pytest.mark.parametrize("name", ["orthant2", "orthant3", "conifold", "dp0", "spp", "index2"])
def test_gamma_pairs_to_minus_one_with_every_normal(name):
    cone = corpus_cone(name)
    cy = solve_gamma(cone)
    assert all(v == -1 for v in cone.normals_array @ cy.gamma_array)


# ---------------- Reeb slice ----------------


def test_slice_chart_of_conifold(conifold, conifold_cy):
    chart = reeb_slice_basis(conifold, conifold_cy)
    assert list(chart.base) == [3, Fraction(3, 2), Fraction(3, 2)]
    assert chart.m == 2
    assert all(v == 0 for v in chart.basis @ conifold_cy.origin_array)
    t = exact(["1/4", "-1/2"])
    assert list(chart.coordinates(chart.point(t))) == list(t)


def test_chart_float_round_trip(orthant3):
    chart = reeb_slice_basis(orthant3, solve_gamma(orthant3))
    t = np.array([0.1, -0.2])
    assert np.allclose(chart.coordinates(chart.point(t)), t)


def test_feasibility_margin(conifold):
    check = is_feasible_reeb(conifold, exact([3, "3/2", "3/2"]))
    assert check.feasible
    assert check.margin == Fraction(3, 2)
    assert not is_feasible_reeb(conifold, exact([3, 3, 0])).feasible


def test_project_to_slice_lands_exactly_on_the_slice(conifold_cy):
    xi = project_to_slice(conifold_cy, [2.9, 1.5, 1.5])
    assert xi @ conifold_cy.origin_array == 1


def test_make_reeb_covector_checks_slice_and_feasibility(conifold, conifold_cy):
    covector = make_reeb_covector(conifold, conifold_cy, exact([3, 1, 2]))
    assert covector.slice_coords is None
    with pytest.raises(OffSliceReeb, match="not on the slice"):
        make_reeb_covector(conifold, conifold_cy, exact([2, 1, 1]))
    with pytest.raises(InfeasibleReeb):
        make_reeb_covector(conifold, conifold_cy, exact([3, 4, 0]))
