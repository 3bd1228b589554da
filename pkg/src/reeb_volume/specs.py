"""Loading cone and decomposition specs from JSON files or the built-in corpus.

Both loaders accept either a filesystem path or ``corpus:NAME``. Every
failure is raised as :class:`InvalidSpec` whose details carry the line and
column of a JSON syntax error or the field path of a validation error.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, TypeVar

from pydantic import BaseModel, ValidationError

from .corpus import default_registry
from .errors import InvalidSpec
from .models import ConeSpec, DecompositionSpec
from .numeric import Array, exact, parse_rational

logger = logging.getLogger(__name__)

CORPUS_PREFIX = "corpus:"

SpecT = TypeVar("SpecT", bound=BaseModel)


def _read_json(path: str) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidSpec(f"cannot read spec file {path}: {exc.strerror}", path=path) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidSpec(
            f"invalid JSON in {path}: {exc.msg}", path=path, line=exc.lineno, column=exc.colno
        ) from exc


def _validate(model: type[SpecT], data: Any, source: str) -> SpecT:
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        errors = [
            {"field": ".".join(str(part) for part in err["loc"]), "message": err["msg"]}
            for err in exc.errors()
        ]
        first = errors[0] if errors else {"field": "", "message": "invalid"}
        raise InvalidSpec(
            f"{source}: {first['field'] or '<root>'}: {first['message']}", path=source, errors=errors
        ) from exc


def load_cone_spec(source: str) -> ConeSpec:
    if source.startswith(CORPUS_PREFIX):
        name = source.removeprefix(CORPUS_PREFIX)
        try:
            return default_registry.get_cone(name)
        except KeyError as exc:
            raise InvalidSpec(str(exc.args[0]), path=source) from exc
    logger.info("Loading cone spec from %s", source)
    return _validate(ConeSpec, _read_json(source), source)


def load_decomposition_spec(source: str) -> DecompositionSpec:
    if source.startswith(CORPUS_PREFIX):
        name = source.removeprefix(CORPUS_PREFIX)
        try:
            return default_registry.get_decomposition(name).spec
        except KeyError as exc:
            raise InvalidSpec(str(exc.args[0]), path=source) from exc
    logger.info("Loading decomposition spec from %s", source)
    return _validate(DecompositionSpec, _read_json(source), source)


def parse_xi(text: str, dim: int | None = None) -> Array:
    """Parse a comma-separated covector such as ``"3,3/2,3/2"`` into exact rationals."""
    parts = [part.strip() for part in text.split(",")]
    try:
        values = [parse_rational(part) for part in parts]
    except ValueError as exc:
        raise InvalidSpec(f"invalid Reeb covector '{text}': {exc}", value=text) from exc
    if dim is not None and len(values) != dim:
        raise InvalidSpec(
            f"Reeb covector '{text}' has {len(values)} entries, expected {dim}", value=text
        )
    return exact(values)
