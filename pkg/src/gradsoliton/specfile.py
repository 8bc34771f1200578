"""Reading and writing soliton problem files.

The document is TOML (JSON is accepted too)::

    name = "round-sphere"
    dimension = 2
    coordinates = ["x", "y"]
    potential = "1"
    lambda = 1.0
    samples = 10                  # per axis, or [10, 12], or [[0.1, 0.2], ...]
    validity = "1 - x^2 - y^2"    # optional; valid where > 0

    [metric]                      # lower triangle, 1-based "i,j"
    "1,1" = "4 / (1 + x^2 + y^2)^2"
    "2,2" = "4 / (1 + x^2 + y^2)^2"

    [domain]
    x = [-0.9, 0.9]
    y = [-0.9, 0.9]

    [tolerances]                  # optional overrides
    identity = 1e-8

Unknown keys are rejected.  Diagnostics carry the offending key and, where
it can be located, the line and column in the document.
"""

from __future__ import annotations

import json
import re
from typing import Any

import numpy as np

from .exprlang import UNARY_FUNCTIONS, Expr, ExprSyntaxError, parse_expr, to_text
from .geometry import ChartSpec, GeometryError, MetricField
from .soliton import DEFAULT_TOLERANCES, SolitonError, SolitonSpec

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = ["SpecFileError", "loads_spec", "load_spec", "dumps_spec"]

REQUIRED_KEYS = ("dimension", "metric", "potential", "lambda", "domain")
OPTIONAL_KEYS = ("name", "coordinates", "validity", "samples", "tolerances")
DEFAULT_SAMPLES = 10
RESERVED_NAMES = set(UNARY_FUNCTIONS) | {"pi", "e"}


class SpecFileError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None, column: int | None = None):
        self.key = key
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}, column {column}")
        if key is not None:
            where.append(f"key '{key}'")
        super().__init__(f"{': '.join(where)}: {message}" if where else message)


def _decode(text: str) -> dict[str, Any]:
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecFileError(exc.msg, line=exc.lineno, column=exc.colno) from None
    else:
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            msg = str(exc)
            m = re.search(r"\(at line (\d+), column (\d+)\)", msg)
            if m:
                raise SpecFileError(msg[: m.start()].strip(), line=int(m.group(1)), column=int(m.group(2))) from None
            raise SpecFileError(msg) from None
    if not isinstance(doc, dict):
        raise SpecFileError("document must be a table of keys")
    return doc


def _locate(text: str, value: str) -> tuple[int, int] | None:
    """Line and column of the first character inside the quoted ``value``."""
    for quoted in (json.dumps(value), f"'{value}'"):
        pos = text.find(quoted)
        if pos >= 0:
            pos += 1
            line = text.count("\n", 0, pos) + 1
            return line, pos - (text.rfind("\n", 0, pos) + 1) + 1
    return None


def _expr(text: str, key: str, value: Any, dim: int, names) -> Expr:
    if not isinstance(value, str):
        raise SpecFileError("expected an expression string", key)
    try:
        return parse_expr(value, dim, names)
    except ExprSyntaxError as exc:
        loc = _locate(text, value)
        if loc is None:
            raise SpecFileError(f"{exc.message} (expression column {exc.column})", key) from None
        line, col = loc
        # expressions live on a single line of the document
        raise SpecFileError(exc.message, key, line + exc.line - 1, col + exc.column - 1) from None


def _number(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecFileError("expected a number", key)
    return float(value)


def loads_spec(text: str, default_name: str = "") -> SolitonSpec:
    """Parse a problem document into a :class:`SolitonSpec`."""
    doc = _decode(text)
    unknown = sorted(set(doc) - set(REQUIRED_KEYS) - set(OPTIONAL_KEYS))
    if unknown:
        raise SpecFileError(f"unknown key (allowed: {', '.join(REQUIRED_KEYS + OPTIONAL_KEYS)})", unknown[0])
    for key in REQUIRED_KEYS:
        if key not in doc:
            raise SpecFileError("missing required key", key)

    dim = doc["dimension"]
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise SpecFileError("expected a positive integer", "dimension")
    custom = doc.get("coordinates")
    names = custom if custom is not None else [f"x{i + 1}" for i in range(dim)]
    if not isinstance(names, list) or not all(isinstance(v, str) for v in names) or len(names) != dim:
        raise SpecFileError(f"expected a list of {dim} coordinate names", "coordinates")
    for pos, nm in enumerate(names):
        if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", nm):
            raise SpecFileError(f"invalid coordinate name {nm!r}", "coordinates")
        if nm in RESERVED_NAMES or (re.fullmatch(r"x[0-9]+", nm) and nm != f"x{pos + 1}"):
            raise SpecFileError(f"coordinate name {nm!r} clashes with a built-in name", "coordinates")

    metric_doc = doc["metric"]
    if not isinstance(metric_doc, dict):
        raise SpecFileError('expected a table of "i,j" = expression', "metric")
    entries: dict[tuple[int, int], Expr] = {}
    for k, v in metric_doc.items():
        m = re.fullmatch(r"\s*(\d+)\s*,\s*(\d+)\s*", k)
        if not m:
            raise SpecFileError('metric keys must look like "i,j"', f"metric.{k}")
        i, j = int(m.group(1)), int(m.group(2))
        if not (1 <= i <= dim and 1 <= j <= dim):
            raise SpecFileError(f"index out of range 1..{dim}", f"metric.{k}")
        key = (max(i, j) - 1, min(i, j) - 1)
        if key in entries:
            raise SpecFileError("component given twice", f"metric.{k}")
        entries[key] = _expr(text, f"metric.{k}", v, dim, custom)

    domain_doc = doc["domain"]
    if isinstance(domain_doc, dict):
        extra = set(domain_doc) - set(names)
        if extra:
            raise SpecFileError(f"unknown coordinate {sorted(extra)[0]!r}", "domain")
        try:
            intervals = [domain_doc[nm] for nm in names]
        except KeyError as exc:
            raise SpecFileError(f"missing interval for {exc.args[0]!r}", "domain") from None
    elif isinstance(domain_doc, list):
        intervals = domain_doc
    else:
        raise SpecFileError("expected a table of coordinate = [lo, hi]", "domain")
    if len(intervals) != dim:
        raise SpecFileError(f"expected {dim} intervals", "domain")
    domain = []
    for iv in intervals:
        if not isinstance(iv, list) or len(iv) != 2:
            raise SpecFileError("each interval must be [lo, hi]", "domain")
        lo, hi = _number(iv[0], "domain"), _number(iv[1], "domain")
        if not lo < hi:
            raise SpecFileError(f"empty interval [{lo}, {hi}]", "domain")
        domain.append((lo, hi))

    validity = None
    if doc.get("validity") is not None:
        validity = _expr(text, "validity", doc["validity"], dim, custom)
    potential = _expr(text, "potential", doc["potential"], dim, custom)
    lam = _number(doc["lambda"], "lambda")

    samples: Any = doc.get("samples", DEFAULT_SAMPLES)
    if isinstance(samples, bool):
        raise SpecFileError("expected a count, per-axis counts or a point list", "samples")
    if isinstance(samples, int):
        if samples < 1:
            raise SpecFileError("sample count must be positive", "samples")
    elif isinstance(samples, list) and samples and all(isinstance(s, int) and not isinstance(s, bool) for s in samples):
        if len(samples) != dim or min(samples) < 1:
            raise SpecFileError(f"expected {dim} positive per-axis counts", "samples")
        samples = tuple(samples)
    elif isinstance(samples, list) and samples and all(isinstance(s, list) for s in samples):
        samples = np.array([[_number(v, "samples") for v in s] for s in samples], dtype=float)
        if samples.ndim != 2 or samples.shape[1] != dim:
            raise SpecFileError(f"each sample point needs {dim} coordinates", "samples")
    else:
        raise SpecFileError("expected a count, per-axis counts or a point list", "samples")

    tolerances = doc.get("tolerances", {})
    if not isinstance(tolerances, dict):
        raise SpecFileError("expected a table", "tolerances")
    for k, v in tolerances.items():
        if k not in DEFAULT_TOLERANCES:
            raise SpecFileError(f"unknown tolerance (allowed: {', '.join(DEFAULT_TOLERANCES)})", f"tolerances.{k}")
        if _number(v, f"tolerances.{k}") <= 0:
            raise SpecFileError("tolerance must be positive", f"tolerances.{k}")
    name = doc.get("name", default_name)
    if not isinstance(name, str):
        raise SpecFileError("expected a string", "name")

    try:
        chart = ChartSpec(dim, tuple(names), tuple(domain), validity)
        metric = MetricField(entries, dim)
        spec = SolitonSpec(chart, metric, potential, lam, samples, 0.0, name, {k: float(v) for k, v in tolerances.items()})
        spec.points  # validates the sample plan
    except (GeometryError, SolitonError) as exc:
        raise SpecFileError(str(exc)) from None
    return spec


def load_spec(path: str) -> SolitonSpec:
    """Read a problem document from ``path`` (``-`` reads standard input)."""
    import sys

    if path == "-":
        return loads_spec(sys.stdin.read(), "stdin")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecFileError(f"cannot read {path}: {exc.strerror}") from None
    return loads_spec(text, path)


def _toml_value(v: Any) -> str:
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot encode {type(v).__name__}")


def dumps_spec(spec: SolitonSpec) -> str:
    """Render ``spec`` as a TOML document that :func:`loads_spec` reads back.

    A sampling margin is folded into the written domain so the same grid is
    reproduced.
    """
    chart = spec.chart
    lines = []
    if spec.name:
        lines.append(f"name = {_toml_value(spec.name)}")
    lines.append(f"dimension = {chart.dim}")
    lines.append(f"coordinates = {_toml_value(list(chart.names))}")
    lines.append(f"potential = {_toml_value(to_text(spec.potential))}")
    lines.append(f"lambda = {_toml_value(float(spec.lam))}")
    if chart.validity is not None:
        lines.append(f"validity = {_toml_value(to_text(chart.validity))}")
    samples = spec.samples
    if isinstance(samples, np.ndarray):
        lines.append(f"samples = {_toml_value([[float(v) for v in row] for row in samples])}")
    elif isinstance(samples, int):
        lines.append(f"samples = {samples}")
    else:
        lines.append(f"samples = {_toml_value([int(s) for s in samples])}")
    lines.append("")
    lines.append("[metric]")
    for (i, j), e in spec.metric.lower.items():
        if i != j and e == parse_expr("0", chart.dim):
            continue
        lines.append(f'"{i + 1},{j + 1}" = {_toml_value(to_text(e))}')
    lines.append("")
    lines.append("[domain]")
    for name, (lo, hi) in zip(chart.names, chart.domain):
        pad = spec.margin * (hi - lo)
        lines.append(f"{name} = {_toml_value([lo + pad, hi - pad])}")
    if spec.tolerances:
        lines.append("")
        lines.append("[tolerances]")
        for k, v in spec.tolerances.items():
            lines.append(f"{k} = {_toml_value(float(v))}")
    return "\n".join(lines) + "\n"
