"""Named test cones and decompositions, addressable from the CLI as ``corpus:NAME``.

Adding an entry requires building its spec model and registering it via
``default_registry.register_cone`` or ``default_registry.register_decomposition``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .models import ConeSpec, DecompositionSpec, PieceSpec


@dataclass(frozen=True)
class CorpusDecomposition:
    cone: str
    spec: DecompositionSpec
    description: str = ""


class CorpusRegistry:
    """Maps names to cone specs and to decompositions of those cones."""

    def __init__(self) -> None:
        self._cones: dict[str, ConeSpec] = {}
        self._decompositions: dict[str, CorpusDecomposition] = {}

    def register_cone(self, name: str, spec: ConeSpec) -> None:
        if not isinstance(name, str) or not name:
            raise ValueError("Corpus name must be a non-empty string")
        self._cones[name] = spec

    def register_decomposition(
        self, name: str, cone: str, spec: DecompositionSpec, description: str = ""
    ) -> None:
        if not isinstance(name, str) or not name:
            raise ValueError("Corpus name must be a non-empty string")
        if cone not in self._cones:
            raise ValueError(f"Decomposition '{name}' refers to unknown cone '{cone}'")
        self._decompositions[name] = CorpusDecomposition(cone=cone, spec=spec, description=description)

    def unregister(self, name: str) -> None:
        self._cones.pop(name, None)
        self._decompositions.pop(name, None)

    def get_cone(self, name: str) -> ConeSpec:
        if name not in self._cones:
            raise KeyError(f"Unknown corpus cone: '{name}'. Available: {sorted(self._cones)}")
        return self._cones[name]

    def get_decomposition(self, name: str) -> CorpusDecomposition:
        if name not in self._decompositions:
            raise KeyError(
                f"Unknown corpus decomposition: '{name}'. Available: {sorted(self._decompositions)}"
            )
        return self._decompositions[name]

    def cone_names(self) -> list[str]:
        return sorted(self._cones)

    def decomposition_names(self) -> list[str]:
        return sorted(self._decompositions)

    def names(self) -> list[str]:
        return sorted([*self._cones, *self._decompositions])

    def __contains__(self, name: str) -> bool:
        return name in self._cones or name in self._decompositions

    def __len__(self) -> int:
        return len(self._cones) + len(self._decompositions)


def _cone(*normals: tuple[int, ...]) -> ConeSpec:
    return ConeSpec(dim=len(normals[0]), facet_normals=[list(n) for n in normals])


def _decomposition(base: list[str], *pieces: list[list[str]]) -> DecompositionSpec:
    return DecompositionSpec(base_reeb=base, pieces=[PieceSpec(vertices=p) for p in pieces])


# Global default registry.
default_registry = CorpusRegistry()

default_registry.register_cone("orthant2", _cone((1, 0), (0, 1)))
default_registry.register_cone("orthant3", _cone((1, 0, 0), (0, 1, 0), (0, 0, 1)))
default_registry.register_cone("conifold", _cone((1, 0, 0), (1, 1, 0), (1, 1, 1), (1, 0, 1)))
default_registry.register_cone("dp0", _cone((1, -1, -1), (1, 1, 0), (1, 0, 1)))
default_registry.register_cone("spp", _cone((1, 0, 0), (1, 2, 0), (1, 1, 1), (1, 0, 1)))
default_registry.register_cone("index2", _cone((1, 1), (1, -1)))
default_registry.register_cone("non_cy", _cone((1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 2, -1)))

default_registry.register_decomposition(
    "conifold-balanced",
    "conifold",
    _decomposition(
        ["3", "3/2", "3/2"],
        [["7/12", "-1/6", "-1/3"], ["7/12", "-1/3", "-1/6"], ["1/12", "1/3", "1/6"], ["1/12", "1/6", "1/3"]],
        [["5/12", "1/6", "-1/3"], ["5/12", "-1/3", "1/6"], ["1/4", "1/3", "-1/6"], ["1/4", "-1/6", "1/3"]],
    ),
    "Two parallelograms exchanged by a lattice symmetry of order four; coupled critical point at the base.",
)
default_registry.register_decomposition(
    "conifold-single",
    "conifold",
    _decomposition(
        ["3", "3/2", "3/2"],
        [["0", "0", "2/3"], ["0", "2/3", "0"], ["2/3", "-2/3", "0"], ["2/3", "0", "-2/3"]],
    ),
    "The whole slice as a single piece.",
)
default_registry.register_decomposition(
    "orthant2-skewed",
    "orthant2",
    _decomposition(
        ["4/3", "2/3"],
        [["1/4", "1"], ["5/8", "1/4"]],
        [["1/4", "1"], ["5/8", "1/4"]],
    ),
    "Two equal segments whose twisted sum misses the slice at the coupled critical point.",
)
default_registry.register_decomposition(
    "orthant2-halves",
    "orthant2",
    _decomposition(
        ["1", "1"],
        [["3/4", "1/4"], ["1/4", "3/4"]],
        [["3/4", "1/4"], ["1/4", "3/4"]],
    ),
    "Two copies of the middle half of the slice; coupled critical point at the base.",
)
