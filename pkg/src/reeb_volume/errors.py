"""Exception hierarchy shared by the geometry kernel and the CLI.

Library code raises these; only the CLI turns them into diagnostic objects
and exit codes. Each class carries the exit code it maps to and an optional
``details`` mapping that is copied verbatim into the JSON diagnostic.
"""

from __future__ import annotations

from typing import Any, ClassVar

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INVALID_INPUT = 2
EXIT_NO_CALABI_YAU = 3
EXIT_HYPOTHESIS_FAILS = 4
EXIT_DIVERGED = 5
EXIT_UNKNOWN = 6
EXIT_ORACLE_MISMATCH = 7


class ReebVolumeError(Exception):
    """Base class for every error this package raises on purpose."""

    exit_code: ClassVar[int] = EXIT_INTERNAL

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details: dict[str, Any] = details

    def to_diagnostic(self) -> dict[str, Any]:
        return {
            "type": type(self).__name__,
            "message": self.message,
            "exit_code": self.exit_code,
            "details": self.details,
        }


# ---------------- input errors ----------------


class InvalidInput(ReebVolumeError):
    exit_code: ClassVar[int] = EXIT_INVALID_INPUT


class InvalidSpec(InvalidInput):
    """A spec file could not be read or failed field validation."""


class UsageError(InvalidInput):
    """Command-line arguments could not be parsed."""


class InvalidCone(InvalidInput):
    """Facet normals are malformed (wrong lengths, zero vectors, too few)."""


class NotFullDimensional(InvalidInput):
    """No point pairs strictly positively with every facet normal."""


class NotPointed(InvalidInput):
    """The facet normals do not span the ambient space."""


class InvalidDecomposition(InvalidInput):
    """A decomposition piece or its base covector is incompatible with the cone."""


class MixedSlices(InvalidInput):
    """Polytopes that must share a slice hyperplane do not."""


class DegeneratePolytope(InvalidInput):
    """A polytope is not full-dimensional inside its slice hyperplane."""


class OffSliceReeb(InvalidInput):
    """A Reeb covector does not satisfy <xi, o> = 1."""


class InfeasibleReeb(InvalidInput):
    """A Reeb covector pairs non-positively with some generator."""


# ---------------- Calabi-Yau errors ----------------


class NoCalabiYauVector(ReebVolumeError):
    """The system <gamma, l_a> = -1 has no solution."""

    exit_code: ClassVar[int] = EXIT_NO_CALABI_YAU


class AmbiguousGamma(ReebVolumeError):
    """The system <gamma, l_a> = -1 has more than one solution."""

    exit_code: ClassVar[int] = EXIT_NO_CALABI_YAU


# ---------------- numerical errors ----------------


class EmptyInterior(ReebVolumeError):
    """No strictly feasible Reeb covector exists on the slice."""


class DegenerateSimplex(ReebVolumeError):
    """A simplex of a triangulation has zero volume."""


class NumericalBreakdown(ReebVolumeError):
    """A factorization or certification step failed."""


class DegenerateBox(ReebVolumeError):
    """The Monte-Carlo bounding box has zero extent in some direction."""


class StepTooLarge(ReebVolumeError):
    """A finite-difference stencil leaves the feasible region."""


class GridDimensionError(ReebVolumeError):
    """Grid search requested on a slice chart of dimension above three."""
