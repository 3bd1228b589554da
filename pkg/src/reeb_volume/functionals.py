"""The volume functional, its coupled sum W, and the obstruction vectors.

For a piece with truncated cone Δ at ``xi'`` and moments (M0, M1, M2), the
normalized volume is V = (m+1) M0. Along a direction ν with <ν, o> = 0:

    dV  = -(m+1)(m+2) <M1, ν>
    d²V =  (m+1)(m+2)(m+3) νᵀ M2 ν

so W = Σ log V has gradient -(m+2) N M1 / M0 and Hessian
(m+2)(m+3) N M2 Nᵀ / M0 - g gᵀ per piece, with N the chart basis.

The boundary measure σ is normalized so that ∫_∂P σ = m(m+1) ∫_P dx. For an
affine y this gives ∫_∂P y σ = (m+1) ∫_P (<∇y, x - q> + m y) dx, evaluated
facet by facet as pyramids from q over the boundary triangulation.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from math import factorial

import numpy as np

from .errors import DegeneratePolytope, MixedSlices
from .lattice_cone import MomentCone, ReebChart
from .numeric import Array, Scalar, as_float, det, is_exact, same_mode, sign
from .polytope_slice import (
    ConeLike,
    Decomposition,
    SliceChart,
    SlicePolytope,
    affine_coords,
    moments,
    slice_moments,
    truncate,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FunctionalEvaluation:
    value: float
    gradient: Array
    hessian: Array
    per_piece_volumes: tuple[float, ...]

    @property
    def grad_norm(self) -> float:
        return float(np.linalg.norm(self.gradient))

    @property
    def hess_min_eig(self) -> float:
        return float(np.linalg.eigvalsh(self.hessian).min())


@dataclass(frozen=True, eq=False)
class StokesResiduals:
    """Residuals of ∫_∂P σ = m(m+1)∫_P dx and of the first-moment identity."""

    exact: bool
    volume: Scalar
    first_moment: Array
    max_relative: float


@dataclass(frozen=True, eq=False)
class ConeSliceResiduals:
    exact: bool
    volume: Scalar
    first_moment: Array
    second_moment: Array
    squared_volume: Scalar

    @property
    def max_abs(self) -> float:
        parts = [
            abs(float(self.volume)),
            float(np.max(np.abs(as_float(self.first_moment)))),
            float(np.max(np.abs(as_float(self.second_moment)))),
            abs(float(self.squared_volume)),
        ]
        return max(parts)


@dataclass(frozen=True, eq=False)
class TransverseImage:
    """Image of a slice polytope under p -> ((m+1)/2)(p - origin)."""

    origin: Array
    scale: Scalar
    vertices: Array
    chart_vertices: Array
    facet_levels: tuple[Scalar, ...]

    def apply(self, point: Array) -> Array:
        return np.asarray(self.scale * (same_mode(point, self.origin) - self.origin))


def _pieces(cone: MomentCone, decomposition: Decomposition | None) -> list[ConeLike]:
    if decomposition is None:
        return [cone]
    return list(decomposition.pieces)


# ---------------- volume and W ----------------


def vol(cone_or_piece: ConeLike, xi: Array) -> Scalar:
    """(m+1) Vol(Δ_xi), equal to Vol(P_xi)/|xi|; any feasible ``xi`` is accepted."""
    mom = moments(truncate(cone_or_piece, xi))
    return len(mom.m1) * mom.m0


def evaluate_W(  # noqa: N802
    cone: MomentCone, decomposition: Decomposition | None, xi: Array, chart: ReebChart
) -> FunctionalEvaluation:
    """Value, chart gradient and chart Hessian of W at a feasible ``xi`` on the slice."""
    basis = same_mode(chart.basis, np.asarray(xi))
    m = cone.m
    value = 0.0
    gradient = np.zeros(m)
    hessian = np.zeros((m, m))
    volumes = []
    for piece in _pieces(cone, decomposition):
        mom = moments(truncate(piece, xi))
        if mom.m0 <= 0:
            raise DegeneratePolytope("piece has zero volume at this Reeb covector")
        g = (m + 2) * (basis @ mom.m1) / mom.m0
        h = (m + 2) * (m + 3) * (basis @ mom.m2 @ basis.T) / mom.m0
        g = -as_float(g)
        volume = float((m + 1) * mom.m0)
        value += math.log(volume)
        gradient += g
        hessian += as_float(h) - np.outer(g, g)
        volumes.append(volume)
    return FunctionalEvaluation(value, gradient, hessian, tuple(volumes))


def w_value(cone: MomentCone, decomposition: Decomposition | None, xi: Array) -> float:
    """W alone, for sweeps that do not need derivatives."""
    total = 0.0
    for piece in _pieces(cone, decomposition):
        total += math.log(float(vol(piece, xi)))
    return total


def hessian_floor(
    cone: MomentCone, decomposition: Decomposition | None, xi: Array, chart: ReebChart
) -> Array:
    """Σ (m+2) N M2 Nᵀ / M0; the Hessian of W dominates it."""
    basis = same_mode(chart.basis, np.asarray(xi))
    m = cone.m
    floor = np.zeros((m, m))
    for piece in _pieces(cone, decomposition):
        mom = moments(truncate(piece, xi))
        floor += as_float((m + 2) * (basis @ mom.m2 @ basis.T) / mom.m0)
    return floor


# ---------------- boundary integrals and Futaki ----------------


def boundary_integrals(p: SlicePolytope, chart: SliceChart) -> tuple[Scalar, Array]:
    """(∫_∂P σ, ∫_∂P x σ) in chart coordinates about the chart origin."""
    m = p.m
    coords = chart.coords
    exact_mode = is_exact(coords)
    origin = same_mode(chart.origin, coords) if exact_mode else as_float(chart.origin)
    total: Scalar = 0
    first = np.zeros(m, dtype=coords.dtype)
    for facet_index, simplex in p.cone.boundary:
        normal = same_mode(p.cone.facet_normals[facet_index], coords)
        side = sign(origin @ normal, tol=1e-14 * float(np.max(np.abs(as_float(normal)))))
        if side == 0:
            continue
        face = coords[list(simplex)]
        pyramid = abs(det(face)) / factorial(m)
        total = total + side * pyramid
        first = first + side * pyramid * face.sum(axis=0) / m
    scale = m * (m + 1)
    return scale * total, scale * first


def futaki(slice_poly: SlicePolytope, origin: Array) -> Array:
    """Chart Futaki vector ∫_∂P x σ - m(m+1) ∫_P x dx, i.e. (m+1)(M1 - q M0)."""
    chart = affine_coords(slice_poly, origin)
    _, boundary_first = boundary_integrals(slice_poly, chart)
    interior = slice_moments(slice_poly, chart)
    m = slice_poly.m
    return np.asarray(boundary_first - m * (m + 1) * interior.m1)


def futaki_ambient(slice_poly: SlicePolytope, origin: Array) -> Array:
    chart = affine_coords(slice_poly, origin)
    return chart.to_vector(futaki(slice_poly, origin))


def _relative(residual: Array, *terms: Array) -> float:
    size = max(1e-300, *(float(np.max(np.abs(as_float(t)))) for t in terms))
    return float(np.max(np.abs(as_float(residual)))) / size


def stokes_identities(slice_poly: SlicePolytope, origin: Array) -> StokesResiduals:
    chart = affine_coords(slice_poly, origin)
    boundary_volume, boundary_first = boundary_integrals(slice_poly, chart)
    interior = slice_moments(slice_poly, chart)
    m = slice_poly.m
    volume = boundary_volume - m * (m + 1) * interior.m0
    # chart origin sits at q = 0
    predicted = boundary_first / (m * (m + 1)) - interior.m1 / m
    first = np.asarray(interior.m1 - predicted)
    worst = max(
        _relative(np.array([volume]), np.array([boundary_volume])),
        _relative(first, interior.m1, boundary_first / (m * (m + 1))),
    )
    return StokesResiduals(
        exact=is_exact(chart.coords), volume=volume, first_moment=first, max_relative=worst
    )


def cone_slice_identities(cone_or_piece: ConeLike, xi: Array) -> ConeSliceResiduals:
    """Residuals of the identities relating Δ moments to slice moments.

    (m+1)M0 = (1/|xi|)∫_P dσ, (m+2)M1 = (1/|xi|)∫_P p dσ,
    (m+3)M2 = (1/|xi|)∫_P ppᵀ dσ and Vol_m(P)² = (m+1)² M0² |xi|².
    """
    tc = truncate(cone_or_piece, xi)
    cone_mom = moments(tc)
    p = tc.base
    m = p.m
    chart = affine_coords(p, p.vertices[0])
    mom = slice_moments(p, chart)
    factor = chart.surface_factor
    origin, basis = chart.origin, chart.basis
    shift = basis.T @ mom.m1
    first = origin * mom.m0 + shift
    second = (
        np.outer(origin, origin) * mom.m0
        + np.outer(origin, shift)
        + np.outer(shift, origin)
        + basis.T @ mom.m2 @ basis
    )
    gram_det = det(basis @ basis.T)
    xi_sq = p.xi @ p.xi
    return ConeSliceResiduals(
        exact=p.exact,
        volume=factor * mom.m0 - (m + 1) * cone_mom.m0,
        first_moment=np.asarray(factor * first - (m + 2) * cone_mom.m1),
        second_moment=np.asarray(factor * second - (m + 3) * cone_mom.m2),
        squared_volume=mom.m0**2 * gram_det - (m + 1) ** 2 * cone_mom.m0**2 * xi_sq,
    )


# ---------------- coupled obstruction and transverse map ----------------


def coupled_obstruction(pieces_at_xi: Sequence[SlicePolytope], origin: Array) -> Array:
    """Σ_α (barycenter(P_α) - origin) in chart coordinates."""
    if not pieces_at_xi:
        raise ValueError("coupled_obstruction needs at least one piece")
    xi = pieces_at_xi[0].xi
    total = None
    for index, piece in enumerate(pieces_at_xi):
        same = len(piece.xi) == len(xi) and (
            all(a == b for a, b in zip(piece.xi, xi, strict=True))
            if is_exact(piece.xi) and is_exact(xi)
            else np.allclose(as_float(piece.xi), as_float(xi), rtol=1e-12, atol=0)
        )
        if not same:
            raise MixedSlices("pieces lie on different slice hyperplanes", piece=index)
        chart = affine_coords(piece, origin)
        mom = slice_moments(piece, chart)
        if mom.m0 == 0:
            raise DegeneratePolytope("piece has zero volume", piece=index)
        center = mom.barycenter
        total = center if total is None else total + center
    return np.asarray(total)


def transverse_map(slice_poly: SlicePolytope, origin: Array, m: int) -> TransverseImage:
    """p -> ((m+1)/2)(p - origin); sends origin to 0."""
    origin = same_mode(origin, slice_poly.vertices)
    scale: Scalar = Fraction(m + 1, 2) if slice_poly.exact else (m + 1) / 2
    image = np.asarray(scale * (slice_poly.vertices - origin))
    chart = affine_coords(slice_poly, origin)
    levels = []
    for facet, normal in zip(slice_poly.cone.facets, slice_poly.cone.facet_normals, strict=True):
        levels.append(image[facet[0]] @ same_mode(normal, image))
    return TransverseImage(
        origin=origin,
        scale=scale,
        vertices=image,
        chart_vertices=np.asarray(scale * chart.coords),
        facet_levels=tuple(levels),
    )
