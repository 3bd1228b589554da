"""Brute-force cross-checks: Monte-Carlo moments, finite differences, grid search.

Random streams come from ``SeedSequence(seed).spawn`` children driving a
Philox generator, one child per batch, so results depend only on the seed
and the batch size, never on the number of worker threads.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.stats import norm

from .errors import DegenerateBox, EmptyInterior, GridDimensionError, StepTooLarge
from .functionals import evaluate_W, w_value
from .lattice_cone import CalabiYauData, MomentCone, ReebChart, reeb_slice_basis
from .models import DerivativeComparison, MomentComparison
from .numeric import Array, as_float
from .polytope_slice import (
    ConeLike,
    Decomposition,
    MomentData,
    cone_over,
    moments,
    slice,
    truncate,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class McEstimate:
    mean: Array
    std_error: Array
    samples: int
    seed: int

    def sigmas(self, expected: Array) -> Array:
        """|mean - expected| in units of the standard error (inf where the error is 0 and they differ)."""
        diff = np.abs(as_float(self.mean) - as_float(expected))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(self.std_error > 0, diff / self.std_error, np.where(diff > 0, np.inf, 0.0))
        return np.asarray(out)


@dataclass(frozen=True, eq=False)
class McMoments:
    m0: McEstimate
    m1: McEstimate
    m2: McEstimate

    def max_sigma(self, exact: MomentData) -> float:
        return float(
            max(
                self.m0.sigmas(np.asarray(exact.m0)).max(),
                self.m1.sigmas(exact.m1).max(),
                self.m2.sigmas(exact.m2).max(),
            )
        )


@dataclass(frozen=True, eq=False)
class FiniteDiffResult:
    gradient: Array
    hessian: Array
    step: float


@dataclass(frozen=True, eq=False)
class GridSearchResult:
    argmin_t: Array
    argmin_xi: Array
    value: float
    evaluated: int
    cell: Array


# ---------------- Monte Carlo ----------------


def _batch_sums(
    lo: Array, hi: Array, normals: Array, xi: Array, size: int, seed: np.random.SeedSequence
) -> tuple[Array, ...]:
    rng = np.random.Generator(np.random.Philox(seed))
    x = lo + (hi - lo) * rng.random((size, len(lo)))
    inside = np.all(x @ normals.T >= 0, axis=1) & (x @ xi <= 1)
    w = inside.astype(float)
    wx = x * w[:, None]
    sq = x * x
    return (
        w.sum(),
        wx.sum(axis=0),
        (wx * x).sum(axis=0),
        np.einsum("si,sj->ij", wx, x),
        np.einsum("si,sj->ij", sq * w[:, None], sq),
    )


def _estimate(total: Array, total_sq: Array, n: int, box: float, seed: int) -> McEstimate:
    mean = box * total / n
    var = np.maximum(box * box * total_sq / n - mean * mean, 0.0) * n / (n - 1)
    return McEstimate(mean=mean, std_error=np.sqrt(var / n), samples=n, seed=seed)


def mc_moments(
    cone_or_piece: ConeLike,
    xi: Array,
    samples: int,
    seed: int,
    batch_size: int = 100_000,
    workers: int = 1,
) -> McMoments:
    """Rejection-sampling estimates of the moments of the truncated cone at ``xi``."""
    p = slice(cone_or_piece, as_float(xi))
    corners = np.vstack([np.zeros(p.ambient_dim), p.vertices])
    lo, hi = corners.min(axis=0), corners.max(axis=0)
    if np.any(hi - lo <= 0):
        raise DegenerateBox("Monte-Carlo box has zero extent", lo=lo.tolist(), hi=hi.tolist())
    box = float(np.prod(hi - lo))
    normals = as_float(cone_over(cone_or_piece).facet_normals)
    xi = as_float(xi)

    sizes = [batch_size] * (samples // batch_size)
    if samples % batch_size:
        sizes.append(samples % batch_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(
            pool.map(lambda job: _batch_sums(lo, hi, normals, xi, *job), zip(sizes, children, strict=True))
        )

    s0 = sum(part[0] for part in parts)
    s1 = sum(part[1] for part in parts)
    q1 = sum(part[2] for part in parts)
    s2 = sum(part[3] for part in parts)
    q2 = sum(part[4] for part in parts)
    logger.info("Monte Carlo: %d samples in %d batches, acceptance %.3f", samples, len(sizes), s0 / samples)
    return McMoments(
        m0=_estimate(np.asarray(s0), np.asarray(s0), samples, box, seed),
        m1=_estimate(s1, q1, samples, box, seed),
        m2=_estimate(s2, q2, samples, box, seed),
    )


# ---------------- finite differences ----------------


def _central(
    f: Callable[[Array], float], x: Array, h: float, feasible: Callable[[Array], bool] | None
) -> tuple[Array, Array]:
    m = len(x)
    eye = np.eye(m)
    stencil = [x + s * h * eye[i] for i in range(m) for s in (1, -1)]
    stencil += [
        x + si * h * eye[i] + sj * h * eye[j]
        for i in range(m)
        for j in range(i + 1, m)
        for si in (1, -1)
        for sj in (1, -1)
    ]
    if feasible is not None and not all(feasible(point) for point in stencil):
        raise StepTooLarge("finite-difference stencil leaves the feasible region", step=h)
    f0 = f(x)
    gradient = np.empty(m)
    hessian = np.empty((m, m))
    for i in range(m):
        up, down = f(x + h * eye[i]), f(x - h * eye[i])
        gradient[i] = (up - down) / (2 * h)
        hessian[i, i] = (up - 2 * f0 + down) / (h * h)
    for i, j in itertools.combinations(range(m), 2):
        pp = f(x + h * eye[i] + h * eye[j])
        pm = f(x + h * eye[i] - h * eye[j])
        mp = f(x - h * eye[i] + h * eye[j])
        mm = f(x - h * eye[i] - h * eye[j])
        hessian[i, j] = hessian[j, i] = (pp - pm - mp + mm) / (4 * h * h)
    return gradient, hessian


def finite_diff(
    f: Callable[[Array], float],
    x: Array,
    step: float,
    feasible: Callable[[Array], bool] | None = None,
    richardson: bool = False,
) -> FiniteDiffResult:
    """Central-difference gradient and Hessian of ``f`` at ``x``."""
    x = as_float(x)
    gradient, hessian = _central(f, x, step, feasible)
    if richardson:
        fine_g, fine_h = _central(f, x, step / 2, feasible)
        gradient = (4 * fine_g - gradient) / 3
        hessian = (4 * fine_h - hessian) / 3
    return FiniteDiffResult(gradient=gradient, hessian=hessian, step=step)


# ---------------- grids and sampling on the slice ----------------


def chart_box(cone: MomentCone, chart: ReebChart) -> tuple[Array, Array]:
    """Bounding box of the feasible chart region, by one linear program per bound."""
    rays = as_float(cone.rays_array)
    base, basis = as_float(chart.base), as_float(chart.basis)
    # rays @ (base + t @ basis) >= 0
    a_ub = -(rays @ basis.T)
    b_ub = rays @ base
    lo, hi = np.empty(chart.m), np.empty(chart.m)
    for j in range(chart.m):
        cost = np.zeros(chart.m)
        for sign, target in ((1.0, lo), (-1.0, hi)):
            cost[j] = sign
            res = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=[(None, None)] * chart.m, method="highs")
            if not res.success:
                raise EmptyInterior("feasible Reeb region is empty or unbounded", status=res.message)
            target[j] = res.x[j]
    return lo, hi


def grid_search(
    cone: MomentCone,
    decomposition: Decomposition | None,
    cy: CalabiYauData,
    resolution: int,
    workers: int = 1,
) -> GridSearchResult:
    """Exhaustive W evaluation on the strictly feasible points of a chart grid."""
    if cone.m > 3:
        raise GridDimensionError("grid search needs a slice chart of dimension at most 3", m=cone.m)
    chart = reeb_slice_basis(cone, cy)
    lo, hi = chart_box(cone, chart)
    axes = [np.linspace(lo[j], hi[j], resolution) for j in range(chart.m)]
    rays = as_float(cone.rays_array)
    base, basis = as_float(chart.base), as_float(chart.basis)
    points = [np.array(t) for t in itertools.product(*axes)]
    feasible = [t for t in points if np.min(rays @ (base + t @ basis)) > 1e-9]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        values = list(pool.map(lambda t: w_value(cone, decomposition, base + t @ basis), feasible))
    if not values:
        raise EmptyInterior("no grid point is strictly feasible", resolution=resolution)
    best = int(np.argmin(values))
    logger.info("Grid search: %d of %d points feasible, min W %.12g", len(feasible), len(points), values[best])
    return GridSearchResult(
        argmin_t=feasible[best],
        argmin_xi=base + feasible[best] @ basis,
        value=float(values[best]),
        evaluated=len(feasible),
        cell=(hi - lo) / (resolution - 1),
    )


def random_feasible_points(
    cone: MomentCone, cy: CalabiYauData, count: int, seed: int, interior_fraction: float = 0.25
) -> list[Array]:
    """Seeded points of the Reeb slice whose margin is a fixed fraction of the chart base's."""
    chart = reeb_slice_basis(cone, cy)
    lo, hi = chart_box(cone, chart)
    rays = as_float(cone.rays_array)
    base, basis = as_float(chart.base), as_float(chart.basis)
    threshold = interior_fraction * float(np.min(rays @ base))
    rng = np.random.default_rng(seed)
    out: list[Array] = []
    for _ in range(1000 * count):
        xi = base + (lo + (hi - lo) * rng.random(chart.m)) @ basis
        if np.min(rays @ xi) >= threshold:
            out.append(xi)
            if len(out) == count:
                return out
    raise EmptyInterior("could not sample enough interior Reeb covectors", found=len(out))


# ---------------- comparisons against the exact kernel ----------------

# Oracle agreement thresholds: a family-wise level in standard errors for Monte Carlo,
# relative errors for derivatives.
MC_SIGMA_LEVEL = 3.0
GRADIENT_RTOL = 1e-6
HESSIAN_RTOL = 1e-4
# The Hessian stencil uses a coarser step than the gradient stencil.
HESSIAN_STEP_FACTOR = 10.0


def entry_sigma_threshold(level: float, entries: int) -> float:
    """Per-entry two-sided bound; a union bound over ``entries`` keeps the tail of ``level``."""
    return float(norm.isf(norm.sf(level) / entries))


def compare_moments(
    cone_or_piece: ConeLike,
    xi: Array,
    samples: int,
    seed: int,
    batch_size: int = 100_000,
    workers: int = 1,
    label: str = "",
    sigma_level: float = MC_SIGMA_LEVEL,
) -> list[MomentComparison]:
    """Exact M0, M1, M2 at ``xi`` next to their Monte-Carlo estimates.

    Each entry must lie within :func:`entry_sigma_threshold` standard errors,
    so that all of them together agree at ``sigma_level``.
    """
    exact_moments = moments(truncate(cone_or_piece, xi))
    estimate = mc_moments(cone_or_piece, xi, samples, seed, batch_size, workers)
    n = len(exact_moments.m1)
    threshold = entry_sigma_threshold(sigma_level, 1 + n + n * (n + 1) // 2)
    out = []
    for name, value, mc in (
        ("M0", np.asarray(exact_moments.m0), estimate.m0),
        ("M1", exact_moments.m1, estimate.m1),
        ("M2", exact_moments.m2, estimate.m2),
    ):
        sigma = float(mc.sigmas(value).max())
        out.append(
            MomentComparison(
                name=f"{label}{name}",
                exact=as_float(value).ravel().tolist(),
                estimate=as_float(mc.mean).ravel().tolist(),
                std_error=as_float(mc.std_error).ravel().tolist(),
                max_sigma=sigma,
                sigma_threshold=threshold,
                agrees=sigma <= threshold,
            )
        )
    return out


def compare_derivatives(
    cone: MomentCone,
    decomposition: Decomposition | None,
    cy: CalabiYauData,
    points: list[Array],
    step: float,
) -> list[DerivativeComparison]:
    """Analytic chart gradient and Hessian of W against central differences."""
    chart = reeb_slice_basis(cone, cy)
    rays = as_float(cone.rays_array)

    def f(t: Array) -> float:
        return w_value(cone, decomposition, chart.point(t))

    def feasible(t: Array) -> bool:
        return bool(np.min(rays @ chart.point(t)) > 0)

    out = []
    for xi in points:
        xi = as_float(xi)
        t = as_float(chart.coordinates(xi))
        analytic = evaluate_W(cone, decomposition, xi, chart)
        fine = finite_diff(f, t, step, feasible)
        coarse = finite_diff(f, t, HESSIAN_STEP_FACTOR * step, feasible)
        g_err = float(np.linalg.norm(fine.gradient - analytic.gradient)) / max(analytic.grad_norm, 1.0)
        h_scale = max(float(np.linalg.norm(analytic.hessian)), 1.0)
        h_err = float(np.linalg.norm(coarse.hessian - analytic.hessian)) / h_scale
        out.append(
            DerivativeComparison(
                xi=xi.tolist(),
                gradient_error=g_err,
                hessian_error=h_err,
                agrees=g_err < GRADIENT_RTOL and h_err < HESSIAN_RTOL,
            )
        )
    return out
