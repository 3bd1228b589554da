"""Command-line entry point.

Run with:  python -m reeb_volume validate corpus:conifold
           python -m reeb_volume minimize corpus:conifold --mode exact
           python -m reeb_volume minimize corpus:conifold --decomposition corpus:conifold-balanced
           python -m reeb_volume twist-demo corpus:orthant2 corpus:orthant2-skewed 2/3,4/3
           python -m reeb_volume oracle corpus:orthant3 --samples 200000
           python -m reeb_volume --schema

Every command prints one JSON report on stdout (or a text rendering with
``--format text``); logs go to stderr. Cone and decomposition arguments are
JSON spec paths or ``corpus:NAME``.

Exit codes:
  0  success (good cone, converged with an existence verdict, oracle agreement)
  1  internal or numerical failure
  2  invalid input, or a cone that is not good
  3  no unique Calabi-Yau vector
  4  converged but the Minkowski hypothesis fails at the critical point
  5  the minimizer escapes to the boundary of the Reeb slice
  6  iteration budget exhausted
  7  a brute-force oracle disagrees with the exact kernel
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from typing import Any, NoReturn

import numpy as np
from pydantic import ValidationError

from . import __version__
from .config import Settings, load_settings
from .errors import (
    EXIT_DIVERGED,
    EXIT_HYPOTHESIS_FAILS,
    EXIT_INTERNAL,
    EXIT_INVALID_INPUT,
    EXIT_OK,
    EXIT_ORACLE_MISMATCH,
    EXIT_UNKNOWN,
    AmbiguousGamma,
    NoCalabiYauVector,
    ReebVolumeError,
    UsageError,
)
from .lattice_cone import (
    CalabiYauData,
    MomentCone,
    goodness_check,
    is_feasible_reeb,
    make_reeb_covector,
    reeb_slice_basis,
    solve_gamma,
    validate_cone,
)
from .models import (
    CalabiYauReport,
    ConeReport,
    ErrorReport,
    MinimizationConfig,
    MinimizationResult,
    OracleReport,
    RunReport,
    Status,
    TwistReport,
    Verdict,
)
from .numeric import as_float, exact, format_exact
from .optimizer import certificate_point, certify, check_minkowski_at, grid_certify, minimize
from .oracle import compare_derivatives, compare_moments, random_feasible_points
from .polytope_slice import Decomposition, build_decomposition
from .report import render_json, render_text, report_schema
from .specs import load_cone_spec, load_decomposition_spec, parse_xi

logger = logging.getLogger("reeb_volume")

VERDICT_EXIT = {
    Verdict.TRANSVERSE_KE: EXIT_OK,
    Verdict.TRANSVERSE_COUPLED_KE: EXIT_OK,
    Verdict.HYPOTHESIS_FAILS: EXIT_HYPOTHESIS_FAILS,
    Verdict.NO_CRITICAL_POINT: EXIT_DIVERGED,
    Verdict.UNKNOWN: EXIT_UNKNOWN,
}


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(asctime)s | %(levelname)-7s | %(name)s | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        stream=sys.stderr,
    )


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of printing usage and exiting."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(message, usage=self.format_usage().strip())


class _Timer:
    def __init__(self) -> None:
        self.stages: dict[str, float] = {}

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.stages[name] = self.stages.get(name, 0.0) + time.perf_counter() - start


# ---------------- shared loading ----------------


def _load_cone(source: str) -> MomentCone:
    spec = load_cone_spec(source)
    return validate_cone(spec.facet_normals)


def _load_decomposition(source: str, cone: MomentCone, cy: CalabiYauData) -> Decomposition:
    spec = load_decomposition_spec(source)
    return build_decomposition(
        cone,
        cy,
        exact(spec.base_reeb),
        [exact(piece.vertices) for piece in spec.pieces],
    )


def _cone_report(cone: MomentCone) -> ConeReport:
    return ConeReport(
        dim=cone.dim,
        facet_normals=[list(n) for n in cone.facet_normals],
        rays=[list(r) for r in cone.rays],
        warnings=list(cone.warnings),
    )


def _cy_report(cy: CalabiYauData) -> CalabiYauReport:
    return CalabiYauReport(
        gamma=format_exact(cy.gamma_array), origin=format_exact(cy.origin_array), m=cy.m
    )


def _with_overrides(settings: Settings, overrides: dict[str, Any]) -> Settings:
    """Apply CLI flag values on top of the loaded settings, revalidating them."""
    values = {key: value for key, value in overrides.items() if value is not None}
    if not values:
        return settings
    return type(settings).model_validate({**settings.model_dump(), **values})


# ---------------- commands ----------------


def cmd_validate(args: argparse.Namespace, settings: Settings, timer: _Timer) -> RunReport:
    with timer.stage("validate"):
        cone = _load_cone(args.cone)
        report = RunReport(command="validate", tool_version=__version__, cone=_cone_report(cone))
        goodness = goodness_check(cone)
        report.goodness = goodness
        try:
            report.calabi_yau = _cy_report(solve_gamma(cone))
        except (NoCalabiYauVector, AmbiguousGamma) as exc:
            report.error = ErrorReport(**exc.to_diagnostic())
            report.exit_code = exc.exit_code
            return report
    if not goodness.good:
        bad = [face.elementary_divisors for face in goodness.faces if not face.saturated]
        report.error = ErrorReport(
            type="ConeNotGood",
            message="active facet normals of some face do not span a saturated sublattice",
            exit_code=EXIT_INVALID_INPUT,
            details={"elementary_divisors": bad},
        )
        report.exit_code = EXIT_INVALID_INPUT
    return report


def _oracle_at(
    cone: MomentCone,
    decomposition: Decomposition | None,
    xi: np.ndarray,
    samples: int,
    seed: int,
    settings: Settings,
) -> OracleReport:
    targets: list[tuple[str, Any]] = [("", cone)]
    if decomposition is not None:
        targets += [(f"piece{i + 1}.", piece) for i, piece in enumerate(decomposition.pieces)]
    comparisons = []
    for label, target in targets:
        comparisons += compare_moments(
            target,
            xi,
            samples,
            seed,
            batch_size=settings.mc_batch_size,
            workers=settings.workers,
            label=label,
            sigma_level=settings.mc_sigma_level,
        )
    return OracleReport(
        seed=seed,
        samples=samples,
        xi=as_float(xi).tolist(),
        moments=comparisons,
        agrees=all(c.agrees for c in comparisons),
    )


def _certificate_xi(
    cone: MomentCone, cy: CalabiYauData, result: MinimizationResult, settings: Settings, mode: str
) -> np.ndarray:
    xi = np.asarray(result.xi_star)
    if mode != "exact":
        return xi
    rational = certificate_point(cy, xi, settings.certificate_max_denominator)
    if not is_feasible_reeb(cone, rational).feasible:
        logger.warning("Rationalized minimizer is infeasible; certifying in float mode")
        return xi
    return rational


def cmd_minimize(args: argparse.Namespace, settings: Settings, timer: _Timer) -> RunReport:
    with timer.stage("setup"):
        cone = _load_cone(args.cone)
        cy = solve_gamma(cone)
        report = RunReport(
            command="minimize",
            tool_version=__version__,
            cone=_cone_report(cone),
            calabi_yau=_cy_report(cy),
        )
        decomposition = None
        if args.decomposition:
            decomposition = _load_decomposition(args.decomposition, cone, cy)
        config = MinimizationConfig.from_settings(
            settings, mode="single" if decomposition is None else "coupled"
        )
        start = None
        if args.start:
            start = make_reeb_covector(cone, cy, parse_xi(args.start, cone.dim)).xi

    with timer.stage("newton"):
        result = minimize(cone, decomposition, cy, config, start=start)
    report.minimization = result
    report.exit_code = VERDICT_EXIT[result.existence_verdict]

    if result.status != Status.DIVERGED_TO_BOUNDARY:
        with timer.stage("certify"):
            xi = _certificate_xi(cone, cy, result, settings, args.mode)
            report.obstruction, report.stokes = certify(
                cone, decomposition, cy, xi, identity_tol=settings.float_identity_tol
            )

    if args.grid_certify is not None:
        resolution = args.grid_certify or settings.grid_resolution
        with timer.stage("grid"):
            report.grid = grid_certify(
                cone, decomposition, cy, resolution, result, workers=settings.workers
            )
        if not report.grid.passes and report.exit_code == EXIT_OK:
            report.exit_code = EXIT_ORACLE_MISMATCH

    if args.oracle_samples:
        with timer.stage("oracle"):
            report.oracle = _oracle_at(
                cone,
                decomposition,
                np.asarray(result.xi_star),
                args.oracle_samples,
                settings.seed,
                settings,
            )
        if not report.oracle.agrees and report.exit_code == EXIT_OK:
            report.exit_code = EXIT_ORACLE_MISMATCH
    return report


def cmd_twist_demo(args: argparse.Namespace, settings: Settings, timer: _Timer) -> RunReport:
    with timer.stage("twist"):
        cone = _load_cone(args.cone)
        cy = solve_gamma(cone)
        decomposition = _load_decomposition(args.decomposition, cone, cy)
        xi_prime = make_reeb_covector(cone, cy, parse_xi(args.xi, cone.dim)).xi
        check = check_minkowski_at(cone, decomposition, cy, xi_prime, settings.minkowski_tol)
    twist = TwistReport(
        base_reeb=format_exact(decomposition.base_xi),
        xi_prime=format_exact(xi_prime),
        twisted_pieces=[as_float(p.vertices).tolist() for p in check.twisted_pieces],
        twisted_sum=as_float(check.twisted_sum.vertices).tolist(),
        true_slice=as_float(check.true_slice.vertices).tolist(),
        discrepancy=check.discrepancy,
        witness=None if check.witness is None else as_float(check.witness).tolist(),
        witness_in=check.witness_in,
        holds=check.holds,
    )
    return RunReport(
        command="twist-demo",
        tool_version=__version__,
        cone=_cone_report(cone),
        calabi_yau=_cy_report(cy),
        twist=twist,
    )


def cmd_oracle(args: argparse.Namespace, settings: Settings, timer: _Timer) -> RunReport:
    with timer.stage("setup"):
        cone = _load_cone(args.cone)
        cy = solve_gamma(cone)
        decomposition = None
        if args.decomposition:
            decomposition = _load_decomposition(args.decomposition, cone, cy)
        if args.xi:
            xi = make_reeb_covector(cone, cy, parse_xi(args.xi, cone.dim)).xi
        else:
            xi = reeb_slice_basis(cone, cy).base

    with timer.stage("monte_carlo"):
        oracle = _oracle_at(cone, decomposition, xi, args.samples, settings.seed, settings)
    if args.fd_points:
        with timer.stage("finite_diff"):
            points = random_feasible_points(cone, cy, args.fd_points, settings.seed)
            oracle.derivatives = compare_derivatives(
                cone, decomposition, cy, points, settings.fd_step
            )
            oracle.agrees = oracle.agrees and all(d.agrees for d in oracle.derivatives)
    return RunReport(
        command="oracle",
        tool_version=__version__,
        cone=_cone_report(cone),
        calabi_yau=_cy_report(cy),
        oracle=oracle,
        exit_code=EXIT_OK if oracle.agrees else EXIT_ORACLE_MISMATCH,
    )


COMMANDS: dict[str, Callable[[argparse.Namespace, Settings, _Timer], RunReport]] = {
    "validate": cmd_validate,
    "minimize": cmd_minimize,
    "twist-demo": cmd_twist_demo,
    "oracle": cmd_oracle,
}


# ---------------- argument parsing ----------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="reeb-volume", description="Reeb covector volume minimization")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--schema", action="store_true", help="print the report JSON schema")
    parser.add_argument("--format", choices=("json", "text"), default="json")
    parser.add_argument("--log-level", default=None, help="override REEB_VOLUME_LOG_LEVEL")
    parser.add_argument("--timing", action="store_true", help="include per-stage timings")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    validate = sub.add_parser("validate", help="goodness, rays and the Calabi-Yau vector")
    validate.add_argument("cone")

    minimize_cmd = sub.add_parser("minimize", help="minimize W and certify the critical point")
    minimize_cmd.add_argument("cone")
    minimize_cmd.add_argument("--decomposition", default=None)
    minimize_cmd.add_argument("--grad-tol", type=float, default=None)
    minimize_cmd.add_argument("--max-iter", type=int, default=None)
    minimize_cmd.add_argument(
        "--grid-certify",
        type=int,
        nargs="?",
        const=0,
        default=None,
        metavar="RESOLUTION",
        help="grid points per chart axis; REEB_VOLUME_GRID_RESOLUTION when omitted",
    )
    minimize_cmd.add_argument("--oracle-samples", type=int, default=None, metavar="N")
    minimize_cmd.add_argument("--seed", type=int, default=None)
    minimize_cmd.add_argument("--mode", choices=("exact", "float"), default="float")
    minimize_cmd.add_argument("--start", default=None, metavar="XI", help="e.g. 3,3/2,3/2")

    twist = sub.add_parser("twist-demo", help="twist a decomposition to another Reeb covector")
    twist.add_argument("cone")
    twist.add_argument("decomposition")
    twist.add_argument("xi", metavar="XI")

    oracle = sub.add_parser("oracle", help="Monte-Carlo and finite-difference cross-checks")
    oracle.add_argument("cone")
    oracle.add_argument("--decomposition", default=None)
    oracle.add_argument("--xi", default=None)
    oracle.add_argument("--samples", type=int, default=None)
    oracle.add_argument("--seed", type=int, default=None)
    oracle.add_argument("--fd-points", type=int, default=0)
    return parser


def _settings_overrides(args: argparse.Namespace) -> dict[str, Any]:
    return {
        "log_level": args.log_level,
        "seed": getattr(args, "seed", None),
        "grad_tol": getattr(args, "grad_tol", None),
        "max_iter": getattr(args, "max_iter", None),
        "oracle_samples": getattr(args, "samples", None),
    }


# ---------------- entry points ----------------


def _emit(report: RunReport, fmt: str) -> None:
    print(render_text(report) if fmt == "text" else render_json(report))


def run(argv: list[str] | None = None, settings: Settings | None = None) -> int:
    """Parse ``argv``, run one command, print its report and return the exit code."""
    fmt = "json"
    command = None
    with_timing = False
    timer = _Timer()
    try:
        args = build_parser().parse_args(argv)
        fmt, command, with_timing = args.format, args.command, args.timing
        if args.schema:
            print(report_schema())
            return EXIT_OK
        if command is None:
            raise UsageError("a command is required", choices=sorted(COMMANDS))
        try:
            base = settings if settings is not None else load_settings()
            settings = _with_overrides(base, _settings_overrides(args))
        except ValidationError as exc:
            raise UsageError(
                "invalid configuration", errors=[e["msg"] for e in exc.errors()]
            ) from exc
        _configure_logging(settings.log_level)
        if command == "oracle" and args.samples is None:
            args.samples = settings.oracle_samples
        report = COMMANDS[command](args, settings, timer)
    except ReebVolumeError as exc:
        logger.error("%s: %s", type(exc).__name__, exc.message)
        report = RunReport(
            command=command,
            tool_version=__version__,
            error=ErrorReport(**exc.to_diagnostic()),
            exit_code=exc.exit_code,
        )
    except Exception as exc:
        logger.exception("Unhandled error")
        report = RunReport(
            command=command,
            tool_version=__version__,
            error=ErrorReport(
                type="InternalError", message=str(exc), exit_code=EXIT_INTERNAL, details={}
            ),
            exit_code=EXIT_INTERNAL,
        )
    if with_timing and timer.stages:
        report.timing = dict(timer.stages)
    _emit(report, fmt)
    return report.exit_code


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
