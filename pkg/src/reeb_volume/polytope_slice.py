"""Slices of cones by Reeb hyperplanes, truncated cones and their moments.

A slice ``P = C ∩ {<p, xi> = 1}`` of a cone generated by ``g_1..g_k`` has
vertices ``g_i / <g_i, xi>``. Any two such slices are central projections of
each other, so the facet structure and a triangulation computed once (from
an exact reference slice) serve every feasible ``xi``. That combinatorial
data lives in :class:`GeneratingCone`; a :class:`SlicePolytope` is just the
vertices at one ``xi`` plus a pointer to it.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import factorial
from typing import Literal

import numpy as np
from scipy.linalg import null_space as float_null_space
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import (
    DegeneratePolytope,
    DegenerateSimplex,
    InfeasibleReeb,
    InvalidDecomposition,
    MixedSlices,
    NumericalBreakdown,
)
from .lattice_cone import CalabiYauData, MomentCone, is_feasible_reeb
from .numeric import (
    FLOAT_RTOL,
    Array,
    Scalar,
    as_float,
    det,
    exact,
    integer_kernel_basis,
    inverse,
    is_exact,
    null_space,
    primitive_integer,
    same_mode,
)
from .triangulation import HULL_RTOL, convex_hull, pulling_triangulation

logger = logging.getLogger(__name__)

# Float sum points closer than this, relative to the largest coordinate, are one vertex.
MINKOWSKI_MERGE_RTOL = 1e-7


@dataclass(frozen=True, eq=False)
class GeneratingCone:
    """Combinatorics of a cone shared by all of its slices.

    ``simplices`` index generators, one maximal simplex of the slice per
    entry; ``boundary`` pairs a facet index with an (m-1)-simplex of that
    facet of the slice.
    """

    generators: Array
    facets: tuple[tuple[int, ...], ...]
    facet_normals: Array
    simplices: tuple[tuple[int, ...], ...]
    boundary: tuple[tuple[int, tuple[int, ...]], ...]

    @property
    def dim(self) -> int:
        return int(self.generators.shape[1])


@dataclass(frozen=True, eq=False)
class SlicePolytope:
    xi: Array
    vertices: Array
    cone: GeneratingCone

    @property
    def ambient_dim(self) -> int:
        return int(self.vertices.shape[1])

    @property
    def m(self) -> int:
        return self.ambient_dim - 1

    @property
    def exact(self) -> bool:
        return is_exact(self.vertices)

    @property
    def generating_rays(self) -> Array:
        return self.cone.generators

    @property
    def facet_incidence(self) -> tuple[frozenset[int], ...]:
        return tuple(
            frozenset(f for f, ids in enumerate(self.cone.facets) if i in ids)
            for i in range(len(self.vertices))
        )


@dataclass(frozen=True, eq=False)
class TruncatedCone:
    """``{p in C : <p, xi> <= 1}`` as simplices ``conv(0, base vertices[s])``."""

    base: SlicePolytope
    simplices: tuple[tuple[int, ...], ...]

    @property
    def apex(self) -> Array:
        return same_mode(np.zeros(self.base.ambient_dim, dtype=int), self.base.vertices)


@dataclass(frozen=True, eq=False)
class MomentData:
    m0: Scalar
    m1: Array
    m2: Array

    @property
    def barycenter(self) -> Array:
        return self.m1 / self.m0

    def __add__(self, other: MomentData) -> MomentData:
        return MomentData(self.m0 + other.m0, self.m1 + other.m1, self.m2 + other.m2)


@dataclass(frozen=True, eq=False)
class SliceChart:
    """Affine coordinates on a slice hyperplane with ``origin`` at 0.

    ``surface_factor`` converts chart integrals to the normalized slice
    measure: ``(1/|xi|) ∫_P f dσ = surface_factor * ∫_P f dx``.
    """

    origin: Array
    basis: Array
    gram_inv: Array
    coords: Array
    surface_factor: Scalar

    @property
    def m(self) -> int:
        return int(self.basis.shape[0])

    def to_chart(self, points: Array) -> Array:
        return np.asarray((np.asarray(points) - self.origin) @ self.basis.T @ self.gram_inv)

    def to_vector(self, coords: Array) -> Array:
        return np.asarray(np.asarray(coords) @ self.basis)

    def to_ambient(self, coords: Array) -> Array:
        return np.asarray(self.origin + self.to_vector(coords))


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Pieces of the slice at ``base_xi`` whose Minkowski sum is meant to be the slice."""

    base_xi: Array
    pieces: tuple[SlicePolytope, ...]
    offsets: tuple[Array, ...]

    @property
    def k(self) -> int:
        return len(self.pieces)

    def twisted(self, xi: Array) -> list[SlicePolytope]:
        return [twist(piece, xi) for piece in self.pieces]


@dataclass(frozen=True, eq=False)
class Discrepancy:
    value: float
    witness: Array | None
    witness_in: Literal["first", "second"] | None


ConeLike = MomentCone | SlicePolytope | GeneratingCone


# ---------------- generating-cone combinatorics ----------------


def _cone_facet_normal(on_facet: Array, generators: Array) -> Array:
    kernel = null_space(on_facet)
    if kernel.shape[0] != 1:
        raise NumericalBreakdown("facet generators do not span a hyperplane", size=len(on_facet))
    if is_exact(generators):
        normal = np.array(primitive_integer(kernel[0]), dtype=object)
    else:
        normal = kernel[0] / np.linalg.norm(kernel[0])
    if sum(generators @ normal) < 0:
        normal = -normal
    return normal


def build_generating_cone(generators: Array, reference: Array) -> GeneratingCone:
    """Facets and triangulations of ``cone(generators)`` read off its slice at ``reference``.

    Generators must be extreme and pair positively with ``reference``.
    """
    gens = np.asarray(generators)
    points = gens / (gens @ reference)[:, None]
    hull = convex_hull(points)
    dim = gens.shape[1] - 1
    if hull.dim != dim:
        raise DegeneratePolytope(
            f"polytope has dimension {hull.dim} inside a {dim}-dimensional slice", dimension=hull.dim
        )
    if len(hull.vertices) != len(gens):
        raise ValueError("generators must all be extreme")
    facets = tuple(f.points for f in hull.facets)
    normals = np.vstack([_cone_facet_normal(gens[list(f)], gens) for f in facets])
    simplices = tuple(pulling_triangulation(points))
    boundary = tuple(
        (index, simplex)
        for index, facet in enumerate(facets)
        for simplex in pulling_triangulation(points, facet)
    )
    return GeneratingCone(
        generators=gens, facets=facets, facet_normals=normals, simplices=simplices, boundary=boundary
    )


@lru_cache(maxsize=64)
def moment_cone_combinatorics(cone: MomentCone) -> GeneratingCone:
    """Cached combinatorics of a moment cone, generated by its lexicographically sorted rays."""
    reference = exact(cone.normals_array.sum(axis=0))
    gc = build_generating_cone(exact(cone.rays_array), reference)
    logger.debug(
        "Cone %s: %d facets, %d slice simplices", cone.facet_normals, len(gc.facets), len(gc.simplices)
    )
    return gc


def cone_over(cone_or_piece: ConeLike) -> GeneratingCone:
    if isinstance(cone_or_piece, MomentCone):
        return moment_cone_combinatorics(cone_or_piece)
    if isinstance(cone_or_piece, SlicePolytope):
        return cone_or_piece.cone
    return cone_or_piece


# ---------------- slicing ----------------


def _common_mode(vectors: Array, xi: Array) -> tuple[Array, Array]:
    if is_exact(vectors) and is_exact(xi):
        return vectors, exact(xi)
    return as_float(vectors), as_float(xi)


def slice(cone_or_piece: ConeLike, xi: Array) -> SlicePolytope:
    """The polytope ``C ∩ {<p, xi> = 1}`` with vertices ``g / <g, xi>``."""
    gc = cone_over(cone_or_piece)
    gens, xi = _common_mode(gc.generators, np.asarray(xi))
    pairings = gens @ xi
    if not all(v > 0 for v in pairings):
        raise InfeasibleReeb(
            "Reeb covector pairs non-positively with a generator", margin=str(min(pairings))
        )
    return SlicePolytope(xi=xi, vertices=gens / pairings[:, None], cone=gc)


def truncate(cone_or_piece: ConeLike, xi: Array) -> TruncatedCone:
    base = slice(cone_or_piece, xi)
    return TruncatedCone(base=base, simplices=base.cone.simplices)


def twist(p: SlicePolytope, xi_new: Array) -> SlicePolytope:
    """Carry ``p`` to the ``xi_new`` slice by ``v -> v / <v, xi_new>``."""
    return slice(p, xi_new)


def facet_triangulation(p: SlicePolytope) -> list[tuple[Array, Array]]:
    """Boundary simplices of ``p`` as (cone facet normal, simplex vertices)."""
    return [
        (p.cone.facet_normals[index], p.vertices[list(simplex)]) for index, simplex in p.cone.boundary
    ]


# ---------------- moments ----------------


def simplex_moments(vertices: Array) -> MomentData:
    """Volume, first and second moments of the d-simplex with rows ``v_0..v_d`` in R^d."""
    d = vertices.shape[1]
    volume = abs(det(vertices[1:] - vertices[0])) / factorial(d)
    if volume == 0:
        raise DegenerateSimplex("simplex has zero volume", vertices=vertices.tolist())
    total = vertices.sum(axis=0)
    m1 = volume * total / (d + 1)
    m2 = volume / ((d + 1) * (d + 2)) * (vertices.T @ vertices + np.outer(total, total))
    return MomentData(volume, m1, m2)


def moments(tc: TruncatedCone) -> MomentData:
    verts = tc.base.vertices
    n = tc.base.ambient_dim
    if is_exact(verts):
        zero = tc.apex[None, :]
        total = MomentData(Fraction(0), exact(np.zeros(n)), exact(np.zeros((n, n))))
        for simplex in tc.simplices:
            total = total + simplex_moments(np.vstack([zero, verts[list(simplex)]]))
        return total

    stacked = verts[np.array(tc.simplices)]
    dets = np.abs(np.linalg.det(stacked)) / factorial(n)
    if np.any(dets == 0):
        raise DegenerateSimplex("simplex has zero volume")
    sums = stacked.sum(axis=1)
    m1 = (dets[:, None] * sums).sum(axis=0) / (n + 1)
    second = np.einsum("sij,sik->sjk", stacked, stacked) + np.einsum("si,sj->sij", sums, sums)
    m2 = (dets[:, None, None] * second).sum(axis=0) / ((n + 1) * (n + 2))
    return MomentData(float(dets.sum()), m1, m2)


# ---------------- affine charts ----------------


def _on_hyperplane(points: Array, xi: Array) -> bool:
    values = np.atleast_2d(points) @ xi
    if is_exact(values):
        return all(v == 1 for v in values.ravel())
    scale = max(1.0, float(np.max(np.abs(points))) * float(np.linalg.norm(xi)))
    return bool(np.all(np.abs(values - 1.0) <= 1e3 * FLOAT_RTOL * scale))


def affine_coords(p: SlicePolytope, origin: Array) -> SliceChart:
    """Chart of the slice hyperplane of ``p`` centred at ``origin``.

    Exact slices get a lattice basis of ``ker xi ∩ Z^n``; float slices an
    orthonormal one.
    """
    xi = p.xi
    origin = same_mode(origin, xi)
    if not _on_hyperplane(origin, xi):
        raise MixedSlices("chart origin is not on the slice hyperplane", origin=[str(x) for x in origin])
    if is_exact(xi):
        prim = primitive_integer(xi)
        lead = next(i for i, x in enumerate(prim) if x)
        scale = xi[lead] / prim[lead]
        basis = np.array(integer_kernel_basis(prim), dtype=object)
        gram_inv = inverse(basis @ basis.T)
        factor: Scalar = 1 / scale
    else:
        basis = float_null_space(xi[None, :]).T
        gram_inv = np.eye(basis.shape[0])
        factor = 1.0 / float(np.linalg.norm(xi))
    coords = np.asarray((same_mode(p.vertices, xi) - origin) @ basis.T @ gram_inv)
    return SliceChart(
        origin=origin, basis=basis, gram_inv=gram_inv, coords=coords, surface_factor=factor
    )


def slice_moments(p: SlicePolytope, chart: SliceChart) -> MomentData:
    """m-dimensional chart moments of ``p``."""
    coords = chart.coords
    total: MomentData | None = None
    for simplex in p.cone.simplices:
        part = simplex_moments(coords[list(simplex)])
        total = part if total is None else total + part
    if total is None:
        raise DegeneratePolytope("slice polytope has no simplices")
    return total


def barycenter(p: SlicePolytope) -> Array:
    chart = affine_coords(p, p.vertices[0])
    mom = slice_moments(p, chart)
    if mom.m0 == 0:
        raise DegeneratePolytope("slice polytope has zero volume")
    return chart.to_ambient(mom.barycenter)


# ---------------- polytopes from points, Minkowski sums ----------------


def _distinct(points: Array, rtol: float) -> Array:
    """Drop repeated points; float points closer than ``rtol`` relative are merged."""
    if is_exact(points):
        unique: dict[tuple[object, ...], Array] = {}
        for point in points:
            unique.setdefault(tuple(point), point)
        return np.array(list(unique.values()), dtype=object)
    tol = rtol * max(1.0, float(np.max(np.abs(points))))
    kept: list[Array] = []
    for point in points:
        if all(np.max(np.abs(point - other)) > tol for other in kept):
            kept.append(point)
    return np.array(kept)


def _lex_order(points: Array) -> list[int]:
    if is_exact(points):
        return sorted(range(len(points)), key=lambda i: tuple(points[i]))
    return [int(i) for i in np.lexsort(points.T[::-1])]


def polytope_from_points(points: Array, xi: Array, merge_rtol: float = HULL_RTOL) -> SlicePolytope:
    """The convex hull of points on the ``xi`` slice, keeping extreme points only.

    Float points closer than ``merge_rtol`` (relative to the largest coordinate)
    count as one point.
    """
    points = np.asarray(points)
    xi = same_mode(xi, points)
    if not _on_hyperplane(points, xi):
        raise MixedSlices("points do not lie on the slice hyperplane")
    distinct = _distinct(points, merge_rtol)
    hull = convex_hull(distinct)
    if hull.dim < len(xi) - 1:
        raise DegeneratePolytope(
            f"polytope has dimension {hull.dim} inside a {len(xi) - 1}-dimensional slice",
            dimension=hull.dim,
        )
    extreme = distinct[list(hull.vertices)]
    extreme = extreme[_lex_order(extreme)]
    return SlicePolytope(xi=xi, vertices=extreme, cone=build_generating_cone(extreme, xi))


def _require_common_slice(pieces: Sequence[SlicePolytope]) -> Array:
    xi = pieces[0].xi
    for index, piece in enumerate(pieces):
        if len(piece.xi) != len(xi) or not _on_hyperplane(same_mode(piece.vertices, xi), xi):
            raise MixedSlices("pieces lie on different slice hyperplanes", piece=index)
    return xi


def minkowski_sum(pieces: Sequence[SlicePolytope], origin: Array) -> SlicePolytope:
    """``origin + Σ (P_α - origin)`` from all vertex combinations."""
    if not pieces:
        raise ValueError("minkowski_sum needs at least one piece")
    xi = _require_common_slice(pieces)
    origin = same_mode(origin, xi)
    if not _on_hyperplane(origin, xi):
        raise MixedSlices("Minkowski origin is not on the slice hyperplane")
    vertex_sets = [same_mode(p.vertices, xi) for p in pieces]
    sums = [origin + sum(v - origin for v in combo) for combo in product(*vertex_sets)]
    return polytope_from_points(np.array(sums, dtype=xi.dtype), xi, merge_rtol=MINKOWSKI_MERGE_RTOL)


def polytope_equal(p: SlicePolytope, q: SlicePolytope, tol: float = 0.0) -> bool:
    """Vertex sets equal under an optimal pairing within ``tol``."""
    if p.ambient_dim != q.ambient_dim:
        raise ValueError("polytopes live in different ambient dimensions")
    if len(p.vertices) != len(q.vertices):
        return False
    if tol == 0 and p.exact and q.exact:
        return {tuple(v) for v in p.vertices} == {tuple(v) for v in q.vertices}
    cost = cdist(as_float(p.vertices), as_float(q.vertices))
    rows, cols = linear_sum_assignment(cost)
    return bool(cost[rows, cols].max() <= tol)


def minkowski_discrepancy(p: SlicePolytope, q: SlicePolytope) -> Discrepancy:
    """Largest distance from a vertex of one polytope to the vertex set of the other."""
    dist = cdist(as_float(p.vertices), as_float(q.vertices))
    from_p, from_q = dist.min(axis=1), dist.min(axis=0)
    if max(from_p.max(), from_q.max()) == 0:
        return Discrepancy(value=0.0, witness=None, witness_in=None)
    if from_p.max() >= from_q.max():
        return Discrepancy(float(from_p.max()), p.vertices[int(from_p.argmax())], "first")
    return Discrepancy(float(from_q.max()), q.vertices[int(from_q.argmax())], "second")


# ---------------- decompositions ----------------


def build_decomposition(
    cone: MomentCone, cy: CalabiYauData, base_xi: Array, piece_vertices: Sequence[Array]
) -> Decomposition:
    """Validate user-supplied pieces of the slice at ``base_xi``."""
    base = exact(base_xi)
    if base.shape != (cone.dim,):
        raise InvalidDecomposition(f"base_reeb must have length {cone.dim}", length=len(base))
    if base @ cy.origin_array != 1:
        raise InvalidDecomposition(
            "base Reeb covector is not on the slice <xi, o> = 1", pairing=str(base @ cy.origin_array)
        )
    if not is_feasible_reeb(cone, base).feasible:
        raise InfeasibleReeb("base Reeb covector is not strictly feasible")
    normals = cone.normals_array
    pieces = []
    for index, raw in enumerate(piece_vertices):
        verts = exact(raw)
        if verts.ndim != 2 or verts.shape[1] != cone.dim:
            raise InvalidDecomposition(f"piece {index} vertices must have length {cone.dim}", piece=index)
        if not _on_hyperplane(verts, base):
            raise MixedSlices(f"piece {index} is not on the base slice", piece=index)
        if any(v < 0 for v in (verts @ normals.T).ravel()):
            raise InvalidDecomposition(f"piece {index} leaves the cone", piece=index)
        pieces.append(polytope_from_points(verts, base))
    total = minkowski_sum(pieces, cy.origin_array)
    truth = slice(cone, base)
    if not polytope_equal(total, truth):
        gap = minkowski_discrepancy(total, truth)
        raise InvalidDecomposition(
            "pieces do not sum to the slice at the base Reeb covector",
            discrepancy=gap.value,
            witness=None if gap.witness is None else [str(x) for x in gap.witness],
            witness_in={"first": "sum", "second": "slice"}.get(gap.witness_in or ""),
        )
    zero = exact(np.zeros(cone.dim))
    logger.info("Decomposition with %d pieces at base %s", len(pieces), [str(x) for x in base])
    return Decomposition(base_xi=base, pieces=tuple(pieces), offsets=tuple(zero for _ in pieces))


def whole_slice_decomposition(cone: MomentCone, xi: Array) -> Decomposition:
    """The single-piece decomposition: the slice itself."""
    base = exact(xi)
    piece = slice(cone, base)
    return Decomposition(base_xi=base, pieces=(piece,), offsets=(exact(np.zeros(cone.dim)),))


def translate_pieces(
    cone: MomentCone, decomposition: Decomposition, offsets: Sequence[Array]
) -> Decomposition:
    """Translate piece ``α`` by ``c_α`` with ``Σ c_α = 0`` and every ``c_α`` in ``ker xi``."""
    if len(offsets) != decomposition.k:
        raise InvalidDecomposition("one offset per piece is required", pieces=decomposition.k)
    base = decomposition.base_xi
    shifts = [exact(c) for c in offsets]
    if any(c @ base != 0 for c in shifts):
        raise InvalidDecomposition("offsets must be parallel to the slice hyperplane")
    if any(v != 0 for v in sum(shifts)):
        raise InvalidDecomposition("offsets must sum to zero")
    normals = cone.normals_array
    pieces = []
    for index, (piece, shift) in enumerate(zip(decomposition.pieces, shifts, strict=True)):
        moved = piece.vertices + shift
        if any(v < 0 for v in (moved @ normals.T).ravel()):
            raise InvalidDecomposition(f"translated piece {index} leaves the cone", piece=index)
        pieces.append(polytope_from_points(moved, base))
    applied = tuple(old + new for old, new in zip(decomposition.offsets, shifts, strict=True))
    return Decomposition(base_xi=base, pieces=tuple(pieces), offsets=applied)
