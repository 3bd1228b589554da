"""Shared pytest fixtures and test helpers."""

from __future__ import annotations

import pytest

from reeb_volume.config import Settings
from reeb_volume.corpus import default_registry
from reeb_volume.lattice_cone import CalabiYauData, MomentCone, solve_gamma, validate_cone
from reeb_volume.numeric import exact
from reeb_volume.polytope_slice import Decomposition, build_decomposition, polytope_from_points


class NoEnvSettings(Settings):
    """Settings that ignore any local .env file."""

    model_config = {"env_file": None, "extra": "ignore"}


def corpus_cone(name: str) -> MomentCone:
    return validate_cone(default_registry.get_cone(name).facet_normals)


def corpus_decomposition(name: str) -> tuple[MomentCone, CalabiYauData, Decomposition]:
    entry = default_registry.get_decomposition(name)
    cone = corpus_cone(entry.cone)
    cy = solve_gamma(cone)
    decomposition = build_decomposition(
        cone,
        cy,
        exact(entry.spec.base_reeb),
        [exact(piece.vertices) for piece in entry.spec.pieces],
    )
    return cone, cy, decomposition


@pytest.fixture
def test_settings(monkeypatch: pytest.MonkeyPatch) -> Settings:
    """Settings with defaults only, unaffected by the caller's environment."""
    for var in ("REEB_VOLUME_SEED", "REEB_VOLUME_LOG_LEVEL", "REEB_VOLUME_WORKERS"):
        monkeypatch.delenv(var, raising=False)
    return NoEnvSettings(oracle_samples=20_000, mc_batch_size=5_000, workers=2)


@pytest.fixture
def orthant2() -> MomentCone:
    return corpus_cone("orthant2")


@pytest.fixture
def orthant3() -> MomentCone:
    return corpus_cone("orthant3")


@pytest.fixture
def conifold() -> MomentCone:
    """Cone over the square with normals (1,0,0), (1,1,0), (1,1,1), (1,0,1)."""
    return corpus_cone("conifold")


@pytest.fixture
def dp0() -> MomentCone:
    return corpus_cone("dp0")


@pytest.fixture
def conifold_cy(conifold: MomentCone) -> CalabiYauData:
    return solve_gamma(conifold)


@pytest.fixture
def balanced() -> tuple[MomentCone, CalabiYauData, Decomposition]:
    """Two parallelograms summing to the conifold slice at (3, 3/2, 3/2)."""
    return corpus_decomposition("conifold-balanced")


@pytest.fixture
def skewed() -> tuple[MomentCone, CalabiYauData, Decomposition]:
    """Two equal segments of the orthant2 slice at (4/3, 2/3)."""
    return corpus_decomposition("orthant2-skewed")


@pytest.fixture
def halves() -> tuple[MomentCone, CalabiYauData, Decomposition]:
    return corpus_decomposition("orthant2-halves")


def unchecked_decomposition(cone: MomentCone, base: list[str], *pieces: list[list[str]]) -> Decomposition:
    """A Decomposition assembled without the Minkowski sum check of build_decomposition."""
    xi = exact(base)
    return Decomposition(
        base_xi=xi,
        pieces=tuple(polytope_from_points(exact(p), xi) for p in pieces),
        offsets=tuple(exact([0] * cone.dim) for _ in pieces),
    )


@pytest.fixture
def inner(orthant2: MomentCone) -> tuple[MomentCone, CalabiYauData, Decomposition]:
    """One interior segment at (1, 1); its W decreases all the way to the boundary."""
    decomposition = unchecked_decomposition(orthant2, ["1", "1"], [["3/5", "2/5"], ["4/5", "1/5"]])
    return orthant2, solve_gamma(orthant2), decomposition
