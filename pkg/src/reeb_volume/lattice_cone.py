"""Exact moment cones: facet/ray duality, goodness, the Calabi-Yau vector and the Reeb slice.

Everything here is rational. Facet normals and rays are tuples of Python ints,
so a :class:`MomentCone` is hashable and can key caches downstream.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

from .errors import (
    AmbiguousGamma,
    EmptyInterior,
    InfeasibleReeb,
    InvalidCone,
    NoCalabiYauVector,
    NotFullDimensional,
    NotPointed,
    OffSliceReeb,
)
from .models import FaceGoodness, GoodnessReport
from .numeric import (
    Array,
    Scalar,
    as_float,
    elementary_divisors,
    exact,
    integer_kernel_basis,
    inverse,
    is_exact,
    null_space,
    primitive_integer,
    rank,
    rationalize,
    to_sympy,
)

logger = logging.getLogger(__name__)

IntVector = tuple[int, ...]


@dataclass(frozen=True)
class MomentCone:
    """A full-dimensional pointed cone ``{p : <p, l_a> >= 0}`` with primitive normals."""

    dim: int
    facet_normals: tuple[IntVector, ...]
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def m(self) -> int:
        return self.dim - 1

    @property
    def normals_array(self) -> Array:
        return np.array(self.facet_normals, dtype=object)

    @cached_property
    def rays(self) -> tuple[IntVector, ...]:
        return _extreme_rays(self.facet_normals, self.dim)

    @property
    def rays_array(self) -> Array:
        return np.array(self.rays, dtype=object)


@dataclass(frozen=True)
class CalabiYauData:
    gamma: tuple[Fraction, ...]
    origin: tuple[Fraction, ...]
    m: int

    @property
    def gamma_array(self) -> Array:
        return np.array(self.gamma, dtype=object)

    @property
    def origin_array(self) -> Array:
        return np.array(self.origin, dtype=object)


@dataclass(frozen=True, eq=False)
class ReebCovector:
    xi: Array
    slice_coords: Array | None = None


@dataclass(frozen=True, eq=False)
class ReebChart:
    """Affine chart ``t -> base + t @ basis`` of the slice ``<xi, o> = 1``."""

    base: Array
    basis: Array

    @property
    def m(self) -> int:
        return int(self.basis.shape[0])

    def point(self, t: Array) -> Array:
        t = np.asarray(t)
        if is_exact(t):
            return np.asarray(self.base + t @ self.basis, dtype=object)
        return as_float(self.base) + t @ as_float(self.basis)

    def coordinates(self, xi: Array) -> Array:
        xi = np.asarray(xi)
        if is_exact(xi):
            gram_inv = inverse(self.basis @ self.basis.T)
            return np.asarray((xi - self.base) @ self.basis.T @ gram_inv, dtype=object)
        basis = as_float(self.basis)
        t, *_ = np.linalg.lstsq(basis.T, xi - as_float(self.base), rcond=None)
        return np.asarray(t)

    def covector(self, t: Array) -> ReebCovector:
        return ReebCovector(xi=self.point(t), slice_coords=np.asarray(t))


@dataclass(frozen=True)
class FeasibilityCheck:
    feasible: bool
    margin: Scalar


@dataclass(frozen=True)
class Face:
    rays: tuple[int, ...]
    normals: tuple[int, ...]
    dimension: int

    @property
    def is_apex(self) -> bool:
        return not self.rays


# ---------------- validation ----------------


def _interior_point(normals: Array) -> Array | None:
    """A rational p with every <p, l_a> > 0, or None.

    Maximizes the smallest pairing t over the box |p_i| <= 1 by linear
    programming, then rounds p to rationals and rechecks exactly.
    """
    d, n = normals.shape
    lhs = np.hstack([-as_float(normals), np.ones((d, 1))])
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    bounds = [(-1.0, 1.0)] * n + [(0.0, 1.0)]
    res = linprog(cost, A_ub=lhs, b_ub=np.zeros(d), bounds=bounds, method="highs")
    if not res.success or res.x[-1] <= 1e-9:
        return None
    for denominator in (10**3, 10**6, 10**9):
        point = rationalize(res.x[:n], denominator)
        if all(v > 0 for v in normals @ point):
            return point
    return None


def _extreme_rays(normals: Sequence[IntVector], n: int) -> tuple[IntVector, ...]:
    matrix = np.array(normals, dtype=object)
    rays: set[IntVector] = set()
    for subset in combinations(range(len(normals)), n - 1):
        sub = matrix[list(subset)]
        kernel = null_space(sub)
        if kernel.shape[0] != 1:
            continue
        ray = primitive_integer(kernel[0])
        pairings = matrix @ np.array(ray, dtype=object)
        if all(v >= 0 for v in pairings):
            rays.add(ray)
        elif all(v <= 0 for v in pairings):
            rays.add(tuple(-x for x in ray))
    return tuple(sorted(rays))


def validate_cone(normals: Sequence[Sequence[int]]) -> MomentCone:
    """Canonicalize facet normals into a :class:`MomentCone`.

    Normals are primitivized and deduplicated; redundant normals (whose
    vanishing set meets the cone in less than a facet) are dropped. Each
    change is recorded as a warning.
    """
    rows = [list(r) for r in normals]
    if not rows:
        raise InvalidCone("no facet normals given")
    n = len(rows[0])
    if n < 2:
        raise InvalidCone("cone dimension must be at least 2", dim=n)
    for index, row in enumerate(rows):
        if len(row) != n:
            raise InvalidCone(f"facet normal {index} has length {len(row)}, expected {n}", index=index)
        if any(isinstance(x, bool) or not isinstance(x, int | np.integer) for x in row):
            raise InvalidCone(f"facet normal {index} has non-integer entries", index=index)
        if not any(row):
            raise InvalidCone(f"facet normal {index} is zero", index=index)
    if len(rows) < n:
        raise InvalidCone(f"need at least {n} facet normals, got {len(rows)}", count=len(rows))

    warnings: list[str] = []
    canonical: list[IntVector] = []
    for row in rows:
        prim = primitive_integer(row)
        if prim != tuple(int(x) for x in row):
            warnings.append(f"normal {list(row)} primitivized to {list(prim)}")
        if prim in canonical:
            warnings.append(f"duplicate normal {list(prim)} dropped")
            continue
        canonical.append(prim)

    matrix = np.array(canonical, dtype=object)
    if rank(matrix) < n:
        raise NotPointed("facet normals do not span the ambient space", rank=rank(matrix), dim=n)
    if _interior_point(matrix) is None:
        raise NotFullDimensional("no point pairs strictly positively with every normal")

    rays = _extreme_rays(canonical, n)
    ray_matrix = np.array(rays, dtype=object)
    kept: list[IntVector] = []
    for normal in canonical:
        on = [r for r, v in zip(rays, ray_matrix @ np.array(normal, dtype=object), strict=True) if v == 0]
        if on and rank(np.array(on, dtype=object)) == n - 1:
            kept.append(normal)
        else:
            warnings.append(f"redundant normal {list(normal)} dropped")

    for message in warnings:
        logger.warning("Cone canonicalization: %s", message)
    return MomentCone(dim=n, facet_normals=tuple(sorted(kept)), warnings=tuple(warnings))


def enumerate_rays(cone: MomentCone) -> list[IntVector]:
    return list(cone.rays)


def dual_round_trip(cone: MomentCone) -> tuple[IntVector, ...]:
    """Facet normals recomputed from the rays by dualizing again."""
    return _extreme_rays(cone.rays, cone.dim)


# ---------------- faces and goodness ----------------


def face_lattice(cone: MomentCone) -> list[Face]:
    """Proper faces of positive dimension plus the apex.

    Faces are closures of intersections of facet ray sets; each carries the
    indices of the normals vanishing on it.
    """
    rays = cone.rays_array
    normals = cone.normals_array
    pairings = rays @ normals.T
    facet_sets = [frozenset(int(i) for i in np.flatnonzero(pairings[:, a] == 0)) for a in range(len(normals))]

    faces: set[frozenset[int]] = set(facet_sets)
    frontier = list(faces)
    while frontier:
        current = frontier.pop()
        for facet in facet_sets:
            meet = current & facet
            if meet and meet not in faces:
                faces.add(meet)
                frontier.append(meet)

    out: list[Face] = []
    for ray_set in faces:
        active = tuple(a for a, fs in enumerate(facet_sets) if ray_set <= fs)
        ids = tuple(sorted(ray_set))
        out.append(Face(rays=ids, normals=active, dimension=rank(rays[list(ids)])))
    out.append(Face(rays=(), normals=tuple(range(len(normals))), dimension=0))
    out.sort(key=lambda f: (-f.dimension, f.rays))
    return out


def goodness_check(cone: MomentCone) -> GoodnessReport:
    faces = []
    for face in face_lattice(cone):
        active = [list(cone.facet_normals[a]) for a in face.normals]
        divisors = elementary_divisors(active)
        faces.append(
            FaceGoodness(
                rays=[list(cone.rays[i]) for i in face.rays],
                active_normals=active,
                dimension=face.dimension,
                elementary_divisors=list(divisors),
                saturated=all(d == 1 for d in divisors),
                is_apex=face.is_apex,
            )
        )
    away = all(f.saturated for f in faces if not f.is_apex)
    return GoodnessReport(
        faces=faces,
        good=away and all(f.saturated for f in faces if f.is_apex),
        good_away_from_apex=away,
    )


# ---------------- Calabi-Yau vector and the Reeb slice ----------------


def solve_gamma(cone: MomentCone) -> CalabiYauData:
    """The unique rational gamma with <gamma, l_a> = -1 for every facet."""
    lhs = to_sympy(cone.normals_array)
    rhs = to_sympy(np.full((len(cone.facet_normals), 1), -1, dtype=object))
    try:
        solution, params = lhs.gauss_jordan_solve(rhs)
    except ValueError as exc:
        raise NoCalabiYauVector(
            "no gamma with <gamma, l_a> = -1 for every facet normal",
            facet_normals=[list(n) for n in cone.facet_normals],
        ) from exc
    if params.shape[0] > 0:
        raise AmbiguousGamma("gamma is not unique", free_parameters=int(params.shape[0]))
    gamma = tuple(Fraction(int(x.p), int(x.q)) for x in solution)
    origin = tuple(-g / cone.dim for g in gamma)
    logger.info("Calabi-Yau vector gamma=%s origin=%s", [str(g) for g in gamma], [str(o) for o in origin])
    return CalabiYauData(gamma=gamma, origin=origin, m=cone.m)


def is_feasible_reeb(cone: MomentCone, xi: Array) -> FeasibilityCheck:
    xi = np.asarray(xi)
    rays = cone.rays_array if is_exact(xi) else as_float(cone.rays_array)
    margin = min(rays @ xi)
    return FeasibilityCheck(feasible=bool(margin > 0), margin=margin)


def reeb_slice_basis(cone: MomentCone, cy: CalabiYauData) -> ReebChart:
    """Base point and integer basis of the slice ``<xi, o> = 1``.

    The base point rescales the sum of the facet normals, an interior point
    of the dual cone, onto the slice; it pairs with o to d/(m+1).
    """
    normals = cone.normals_array
    base = exact(normals.sum(axis=0) * Fraction(cone.dim, len(cone.facet_normals)))
    if not is_feasible_reeb(cone, base).feasible:
        raise EmptyInterior("no strictly feasible Reeb covector on the slice")
    basis = np.array(integer_kernel_basis(primitive_integer(cy.origin)), dtype=object)
    return ReebChart(base=base, basis=basis)


def project_to_slice(cy: CalabiYauData, xi: Array) -> Array:
    """Exact orthogonal projection of a rational covector onto ``<xi, o> = 1``."""
    xi = exact(xi)
    origin = cy.origin_array
    return np.asarray(xi + (1 - xi @ origin) / (origin @ origin) * origin, dtype=object)


def make_reeb_covector(
    cone: MomentCone, cy: CalabiYauData, xi: Array, chart: ReebChart | None = None
) -> ReebCovector:
    """Check that ``xi`` lies on the slice and is strictly feasible."""
    xi = np.asarray(xi)
    pairing = xi @ (cy.origin_array if is_exact(xi) else as_float(cy.origin_array))
    if (pairing != 1) if is_exact(xi) else abs(pairing - 1) > 1e-12:
        raise OffSliceReeb("Reeb covector is not on the slice <xi, o> = 1", pairing=str(pairing))
    check = is_feasible_reeb(cone, xi)
    if not check.feasible:
        raise InfeasibleReeb("Reeb covector is not strictly feasible", margin=str(check.margin))
    coords = chart.coordinates(xi) if chart is not None else None
    return ReebCovector(xi=xi, slice_coords=coords)
