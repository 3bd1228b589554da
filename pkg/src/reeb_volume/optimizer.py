"""Damped Newton minimization of W on the Reeb slice and the existence verdict.

Iterates live in the m-dimensional chart t of :class:`ReebChart`; every
accepted step keeps all ray pairings above ``min_feasibility_margin`` and
strictly decreases W.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg

from .errors import NumericalBreakdown
from .functionals import (
    FunctionalEvaluation,
    cone_slice_identities,
    coupled_obstruction,
    evaluate_W,
    futaki,
    stokes_identities,
    vol,
)
from .lattice_cone import CalabiYauData, MomentCone, ReebChart, project_to_slice, reeb_slice_basis
from .models import (
    GridCertificate,
    MinimizationConfig,
    MinimizationResult,
    ObstructionReport,
    Status,
    StokesReport,
    Verdict,
)
from .numeric import Array, as_float, format_exact, is_exact, rationalize
from .oracle import grid_search
from .polytope_slice import (
    Decomposition,
    SlicePolytope,
    barycenter,
    minkowski_discrepancy,
    minkowski_sum,
    polytope_equal,
    slice,
)

logger = logging.getLogger(__name__)

# Newton decrements below this fraction of |W| are at the float64 resolution of W.
DECREMENT_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class MinkowskiCheck:
    holds: bool
    discrepancy: float
    witness: Array | None
    witness_in: Literal["sum", "slice"] | None
    true_slice: SlicePolytope
    twisted_pieces: list[SlicePolytope]
    twisted_sum: SlicePolytope


# ---------------- start point ----------------


def analytic_center(cone: MomentCone, chart: ReebChart, max_iter: int = 50) -> Array:
    """Chart point maximizing Σ log <r_i, xi>, by damped Newton from the chart base."""
    rays = as_float(cone.rays_array)
    base = as_float(chart.base)
    basis = as_float(chart.basis)
    directions = rays @ basis.T

    def barrier(t: Array) -> float:
        pairings = rays @ (base + t @ basis)
        return float("inf") if np.any(pairings <= 0) else -float(np.log(pairings).sum())

    t = np.zeros(chart.m)
    for _ in range(max_iter):
        pairings = rays @ (base + t @ basis)
        weighted = directions / pairings[:, None]
        gradient = -weighted.sum(axis=0)
        if np.linalg.norm(gradient) < 1e-13:
            break
        hessian = weighted.T @ weighted
        step = -np.linalg.solve(hessian, gradient)
        current = barrier(t)
        alpha = 1.0
        while alpha > 1e-12 and barrier(t + alpha * step) >= current:
            alpha *= 0.5
        if alpha <= 1e-12:
            break
        t = t + alpha * step
    return t


# ---------------- Minkowski hypothesis ----------------


def check_minkowski_at(
    cone: MomentCone,
    decomposition: Decomposition,
    cy: CalabiYauData,
    xi: Array,
    tol: float = 1e-9,
) -> MinkowskiCheck:
    """Twist every piece to ``xi`` and compare their sum about o with the true slice."""
    xi = np.asarray(xi)
    origin = cy.origin_array if is_exact(xi) else as_float(cy.origin_array)
    true_slice = slice(cone, xi)
    twisted = decomposition.twisted(xi)
    total = minkowski_sum(twisted, origin)
    gap = minkowski_discrepancy(total, true_slice)
    if is_exact(xi) and total.exact:
        holds = polytope_equal(total, true_slice)
    else:
        holds = polytope_equal(total, true_slice, tol=tol)
    return MinkowskiCheck(
        holds=holds,
        discrepancy=gap.value,
        witness=gap.witness,
        witness_in=None if gap.witness_in is None else ("sum" if gap.witness_in == "first" else "slice"),
        true_slice=true_slice,
        twisted_pieces=twisted,
        twisted_sum=total,
    )


# ---------------- Newton ----------------


def _margin(rays: Array, xi: Array) -> float:
    return float(np.min(rays @ xi))


def minimize(
    cone: MomentCone,
    decomposition: Decomposition | None,
    cy: CalabiYauData,
    config: MinimizationConfig,
    start: Array | None = None,
) -> MinimizationResult:
    """Minimize W over the interior of the Reeb slice."""
    if (config.mode == "coupled") != (decomposition is not None):
        raise ValueError("coupled mode requires a decomposition and single mode forbids one")
    chart = reeb_slice_basis(cone, cy)
    rays = as_float(cone.rays_array)
    base = as_float(chart.base)
    basis = as_float(chart.basis)

    def xi_of(t: Array) -> Array:
        return base + t @ basis

    def evaluate(t: Array) -> FunctionalEvaluation:
        return evaluate_W(cone, decomposition, xi_of(t), chart)

    t = analytic_center(cone, chart) if start is None else as_float(chart.coordinates(as_float(start)))
    start_xi = xi_of(t)
    start_margin = _margin(rays, xi_of(t))
    if start_margin <= config.min_feasibility_margin:
        raise NumericalBreakdown("start point is not strictly feasible", margin=start_margin)
    current = evaluate(t)
    history = [current.value]
    status = Status.MAX_ITER
    stalled = False
    iterations = 0

    for iteration in range(config.max_iter):
        if current.grad_norm <= config.grad_tol:
            status = Status.CONVERGED
            break
        try:
            factor = scipy.linalg.cho_factor(current.hessian)
        except np.linalg.LinAlgError as exc:
            raise NumericalBreakdown(
                "Hessian is not positive definite", iteration=iteration, xi=xi_of(t).tolist()
            ) from exc
        step = -scipy.linalg.cho_solve(factor, current.gradient)
        decrement = float(-current.gradient @ step)

        alpha = 1.0
        accepted: tuple[Array, FunctionalEvaluation] | None = None
        hit_boundary = False
        backtracks = 0
        while backtracks < config.max_backtracks:
            candidate = t + alpha * step
            if _margin(rays, xi_of(candidate)) > config.min_feasibility_margin:
                trial = evaluate(candidate)
                if trial.value < current.value or (
                    decrement <= DECREMENT_FLOOR * max(1.0, abs(current.value)) and trial.grad_norm < current.grad_norm
                ):
                    accepted = (candidate, trial)
                    break
            else:
                hit_boundary = True
            alpha *= config.backtrack_factor
            backtracks += 1

        if accepted is None:
            if hit_boundary:
                status = Status.DIVERGED_TO_BOUNDARY
                logger.warning("Line search blocked by the slice boundary at iteration %d", iteration)
                break
            stalled = True
            logger.warning(
                "Line search stalled at iteration %d (decrement %.3e); reporting MaxIter",
                iteration,
                decrement,
            )
            break

        t, current = accepted
        iterations = iteration + 1
        history.append(current.value)
        margin = _margin(rays, xi_of(t))
        logger.debug(
            "iter=%d W=%.15g |g|=%.3e step=%.3e backtracks=%d margin=%.3e",
            iterations,
            current.value,
            current.grad_norm,
            alpha,
            backtracks,
            margin,
        )
        if margin < config.boundary_margin_ratio * start_margin:
            status = Status.DIVERGED_TO_BOUNDARY
            logger.warning("Iterate escaping to the slice boundary (margin %.3e)", margin)
            break
    else:
        if current.grad_norm <= config.grad_tol:
            status = Status.CONVERGED

    xi_star = xi_of(t)
    margin = _margin(rays, xi_star)
    hess_min_eig = current.hess_min_eig
    if status == Status.CONVERGED and hess_min_eig <= 0:
        raise NumericalBreakdown("converged to a point with a non-positive Hessian")

    minkowski_holds: bool | None = None
    discrepancy: float | None = None
    if status == Status.CONVERGED:
        if decomposition is None:
            minkowski_holds, discrepancy = True, 0.0
            verdict = Verdict.TRANSVERSE_KE
        else:
            check = check_minkowski_at(cone, decomposition, cy, xi_star, config.minkowski_tol)
            minkowski_holds, discrepancy = check.holds, check.discrepancy
            verdict = Verdict.TRANSVERSE_COUPLED_KE if check.holds else Verdict.HYPOTHESIS_FAILS
    elif status == Status.DIVERGED_TO_BOUNDARY:
        verdict = Verdict.NO_CRITICAL_POINT
    else:
        verdict = Verdict.UNKNOWN

    logger.info(
        "Minimization %s after %d iterations: W=%.15g |g|=%.3e verdict=%s",
        status,
        iterations,
        current.value,
        current.grad_norm,
        verdict,
    )
    return MinimizationResult(
        xi_star=xi_star.tolist(),
        W_star=current.value,
        grad_norm=current.grad_norm,
        hess_min_eig=hess_min_eig,
        status=status,
        iterations=iterations,
        stalled=stalled,
        feasibility_margin=margin,
        per_piece_volumes=list(current.per_piece_volumes),
        minkowski_holds=minkowski_holds,
        minkowski_discrepancy=discrepancy,
        existence_verdict=verdict,
        start=start_xi.tolist(),
        history=history,
    )


# ---------------- certificates ----------------


def grid_certify(
    cone: MomentCone,
    decomposition: Decomposition | None,
    cy: CalabiYauData,
    resolution: int,
    result: MinimizationResult,
    workers: int = 1,
    tol: float = 1e-6,
) -> GridCertificate:
    """Check the Newton minimizer against W on a feasible chart grid."""
    search = grid_search(cone, decomposition, cy, resolution, workers=workers)
    chart = reeb_slice_basis(cone, cy)
    t_star = as_float(chart.coordinates(np.asarray(result.xi_star)))
    offset = np.abs(search.argmin_t - t_star)
    within = bool(np.all(offset <= search.cell * (1 + 1e-9)))
    margin = search.value - result.W_star
    return GridCertificate(
        resolution=resolution,
        evaluated=search.evaluated,
        grid_min=search.value,
        grid_argmin=search.argmin_xi.tolist(),
        W_star=result.W_star,
        margin=margin,
        passes=margin >= -tol,
        within_one_cell=within,
    )


def certificate_point(cy: CalabiYauData, xi: Array, max_denominator: int) -> Array:
    """Rationalize a float covector and put it back on ``<xi, o> = 1`` exactly."""
    return project_to_slice(cy, rationalize(xi, max_denominator))


def certify(
    cone: MomentCone,
    decomposition: Decomposition | None,
    cy: CalabiYauData,
    xi: Array,
    identity_tol: float = 1e-10,
) -> tuple[ObstructionReport, StokesReport]:
    """Obstruction vectors and identity residuals at ``xi`` in its numeric mode.

    Exact residuals must vanish; float ones must stay within ``identity_tol``
    (relative for the boundary identities, absolute for the cone-slice ones).
    """
    xi = np.asarray(xi)
    exact_mode = is_exact(xi)
    origin = cy.origin_array if exact_mode else as_float(cy.origin_array)
    whole = slice(cone, xi)
    fut = futaki(whole, origin)
    offset = float(np.linalg.norm(as_float(barycenter(whole) - origin)))
    coupled = None
    if decomposition is not None:
        coupled = coupled_obstruction(decomposition.twisted(xi), origin)

    stokes = stokes_identities(whole, origin)
    identities = cone_slice_identities(cone, xi)
    if exact_mode:
        holds = stokes.max_relative == 0 and identities.max_abs == 0
    else:
        holds = stokes.max_relative <= identity_tol and identities.max_abs <= identity_tol
    if not holds:
        logger.warning(
            "Identity residuals at %s exceed tolerance: stokes %.3g, cone-slice %.3g",
            as_float(xi).tolist(),
            stokes.max_relative,
            identities.max_abs,
        )
    exact_values = None
    if exact_mode:
        exact_values = {
            "volume": str(stokes.volume),
            "first_moment": format_exact(stokes.first_moment),
            "cone_slice_volume": str(identities.volume),
            "cone_slice_squared_volume": str(identities.squared_volume),
        }
    stokes_report = StokesReport(
        exact=exact_mode,
        volume_residual=float(stokes.volume),
        first_moment_residual=as_float(stokes.first_moment).tolist(),
        cone_slice_residuals={
            "volume": abs(float(identities.volume)),
            "first_moment": float(np.max(np.abs(as_float(identities.first_moment)))),
            "second_moment": float(np.max(np.abs(as_float(identities.second_moment)))),
            "squared_volume": abs(float(identities.squared_volume)),
        },
        max_relative=stokes.max_relative,
        holds=holds,
        tolerance=None if exact_mode else identity_tol,
        exact_values=exact_values,
    )
    obstruction = ObstructionReport(
        xi=as_float(xi).tolist(),
        xi_exact=format_exact(xi) if exact_mode else None,
        futaki_vector=as_float(fut).tolist(),
        futaki_norm=float(np.linalg.norm(as_float(fut))),
        coupled_vector=None if coupled is None else as_float(coupled).tolist(),
        coupled_norm=None if coupled is None else float(np.linalg.norm(as_float(coupled))),
        barycenter_offset=offset,
        volume_exact=str(vol(cone, xi)) if exact_mode else None,
        exact=(
            {
                "futaki_vector": format_exact(fut),
                "coupled_vector": None if coupled is None else format_exact(coupled),
            }
            if exact_mode
            else None
        ),
    )
    return obstruction, stokes_report
