"""Convex hull facets and pulling triangulations with exact certification.

qhull (through scipy) supplies the combinatorics on float coordinates. In
exact mode every facet hyperplane is then recomputed in rational arithmetic
from the qhull simplex and checked against all points, so facet incidence and
the set of extreme points are exact even when qhull reports a point lying on
an edge as a vertex.

Points are passed as rows of an array living in some ambient space; hulls are
taken inside their own affine hull, so a polygon embedded in R^3 is handled
as a 2-dimensional hull.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import NumericalBreakdown
from .numeric import Array, Scalar, as_float, inverse, is_exact, is_zero, null_space, rank, row_basis

logger = logging.getLogger(__name__)

HULL_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class HullFacet:
    """A facet of a hull: the point ids on it and its outward inequality."""

    points: tuple[int, ...]
    normal: Array
    offset: Scalar


@dataclass(frozen=True, eq=False)
class Hull:
    dim: int
    vertices: tuple[int, ...]
    facets: tuple[HullFacet, ...]


def affine_frame(points: Array) -> tuple[Array, Array]:
    """Origin and row basis of the affine hull of ``points``."""
    origin = points[0]
    diffs = points[1:] - origin
    if len(diffs) == 0:
        return origin, np.empty((0, points.shape[1]), dtype=points.dtype)
    return origin, row_basis(diffs)


def frame_coordinates(points: Array, origin: Array, basis: Array) -> Array:
    """Coordinates ``c`` with ``point = origin + c @ basis``.

    Float bases from :func:`row_basis` are orthonormal; exact bases are not,
    so the exact path solves against the Gram matrix.
    """
    if basis.shape[0] == 0:
        return np.zeros((len(points), 0), dtype=points.dtype)
    diffs = points - origin
    if is_exact(points):
        return np.asarray(diffs @ basis.T @ inverse(basis @ basis.T), dtype=object)
    return np.asarray(diffs @ basis.T)


def _tolerance(coords: Array, rtol: float) -> float:
    if is_exact(coords) or coords.size == 0:
        return 0.0
    return rtol * max(1.0, float(np.max(np.abs(coords))))


def _hyperplane_normal(simplex: Array) -> Array | None:
    kernel = null_space(simplex[1:] - simplex[0])
    if kernel.shape[0] != 1:
        return None
    return np.asarray(kernel[0])


def convex_hull(points: Array, rtol: float = HULL_RTOL) -> Hull:
    """Facets and extreme points of the hull of distinct ``points``."""
    pts = np.asarray(points)
    count = len(pts)
    origin, basis = affine_frame(pts)
    dim = basis.shape[0]
    coords = frame_coordinates(pts, origin, basis)
    atol = _tolerance(coords, rtol)

    if dim == 0:
        return Hull(dim=0, vertices=(0,), facets=())

    if dim == 1:
        line = coords[:, 0]
        lo = min(range(count), key=lambda i: line[i])
        hi = max(range(count), key=lambda i: line[i])
        lo_ids = tuple(i for i in range(count) if is_zero(line[i] - line[lo], atol))
        hi_ids = tuple(i for i in range(count) if is_zero(line[i] - line[hi], atol))
        unit = np.ones(1, dtype=coords.dtype)
        facets = (
            HullFacet(points=lo_ids, normal=-unit, offset=-line[lo]),
            HullFacet(points=hi_ids, normal=unit, offset=line[hi]),
        )
        return Hull(dim=1, vertices=tuple(sorted({lo_ids[0], hi_ids[0]})), facets=facets)

    try:
        qhull = ConvexHull(as_float(coords))
    except QhullError as exc:
        raise NumericalBreakdown("qhull failed on a slice polytope", points=count) from exc

    planes: dict[tuple[int, ...], HullFacet] = {}
    for simplex in qhull.simplices:
        normal = _hyperplane_normal(coords[simplex])
        if normal is None:
            continue
        offset = normal @ coords[simplex[0]]
        values = coords @ normal - offset
        if np.all(values <= atol):
            pass
        elif np.all(values >= -atol):
            normal, offset, values = -normal, -offset, -values
        else:
            raise NumericalBreakdown("hull facet failed certification", points=count)
        on = tuple(int(i) for i in np.flatnonzero(is_zero(values, atol)))
        planes.setdefault(on, HullFacet(points=on, normal=normal, offset=offset))

    facets = tuple(planes[key] for key in sorted(planes))
    vertices = []
    for i in range(count):
        incident = [f.normal for f in facets if i in f.points]
        if incident and rank(np.vstack(incident), tol=atol or None) == dim:
            vertices.append(i)
    return Hull(dim=dim, vertices=tuple(vertices), facets=facets)


def pulling_triangulation(
    points: Array, ids: Sequence[int] | None = None, rtol: float = HULL_RTOL
) -> list[tuple[int, ...]]:
    """Triangulate ``conv(points[ids])`` by pulling its lexicographically least vertex.

    That vertex becomes the apex; every facet not containing it is
    triangulated recursively the same way and coned to the apex. Simplices
    are tuples of ids, apex first.
    """
    ids = tuple(range(len(points))) if ids is None else tuple(ids)
    local = np.asarray(points)[list(ids)]
    hull = convex_hull(local, rtol)
    apex_local = min(hull.vertices, key=lambda i: tuple(local[i]))
    apex = ids[apex_local]
    if hull.dim == 0:
        return [(apex,)]
    if hull.dim == 1:
        (other,) = (i for i in hull.vertices if i != apex_local)
        return [(apex, ids[other])]
    simplices: list[tuple[int, ...]] = []
    for facet in hull.facets:
        if apex_local in facet.points:
            continue
        face_ids = [ids[i] for i in facet.points]
        simplices.extend((apex, *tail) for tail in pulling_triangulation(points, face_ids, rtol))
    return simplices
