"""Report serialization: canonical JSON and a human-readable text rendering.

The JSON form is what scripts consume; it is stable for fixed inputs because
timing is only included on request. The text form goes through a Jinja2
template so its layout can change without touching the CLI.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import jinja2

from .models import RunReport

TEMPLATE_DIR = Path(__file__).parent / "templates"

_jinja_env = jinja2.Environment(
    autoescape=False,
    loader=jinja2.FileSystemLoader(str(TEMPLATE_DIR)),
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
    undefined=jinja2.StrictUndefined,
)


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    if isinstance(value, list):
        return "(" + ", ".join(_fmt(v) for v in value) + ")"
    return str(value)


_jinja_env.filters["fmt"] = _fmt


def render_json(report: RunReport) -> str:
    return json.dumps(report.model_dump(mode="json", exclude_none=True), indent=2, sort_keys=False)


def render_text(report: RunReport) -> str:
    """Render a report for a terminal."""
    template = _jinja_env.get_template("report.txt.j2")
    return template.render(report=report.model_dump(mode="json"))


def report_schema() -> str:
    return json.dumps(RunReport.model_json_schema(), indent=2)
