"""JSON documents for spaces, glues, maps and operators.

Schemas::

    space     {"points": [labels], "dist": [[...]]}
    glue      {"left": space-or-ref, "right": space-or-ref, "cross": [[...]]}
    map       {"domain": space-or-ref, "codomain": space-or-ref, "pairs": [[x, y], ...]}
    operator  {"source": space-or-ref, "target": space-or-ref, "entries": [[y, x, re, im], ...]}

A ref is a catalog string such as ``"z_interval:21"``. Labels are integers or
strings.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .almost_isometry import PartialMap
from .catalog import resolve
from .errors import SchemaError
from .metric import FiniteMetricSpace, GlueMetric, ValidationReport, validate_glue, validate_metric
from .operators import FinitePropagationOperator

SIG_DIGITS = 12


def _label(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise SchemaError(f"{where}: labels must be integers or strings, got {value!r}")
    return value


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _matrix(rows, n_rows, n_cols, where):
    if not isinstance(rows, list):
        raise SchemaError(f"{where}: expected a list of rows")
    if len(rows) != n_rows:
        raise SchemaError(f"{where}: has {len(rows)} rows, expected {n_rows}")
    out = np.zeros((n_rows, n_cols))
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n_cols:
            got = len(row) if isinstance(row, list) else type(row).__name__
            raise SchemaError(f"{where}: row {i} has length {got}, expected {n_cols}")
        for j, v in enumerate(row):
            out[i, j] = _number(v, f"{where}[{i}][{j}]")
    return out


def _require(doc, keys, where):
    if not isinstance(doc, dict):
        raise SchemaError(f"{where}: expected an object")
    missing = [k for k in keys if k not in doc]
    if missing:
        raise SchemaError(f"{where}: missing field(s) {', '.join(missing)}")
    extra = sorted(set(doc) - set(keys))
    if extra:
        raise SchemaError(f"{where}: unknown field(s) {', '.join(extra)}")


def space_from_json(doc, where="space") -> FiniteMetricSpace:
    if isinstance(doc, str):
        return resolve(doc, "space")
    _require(doc, ("points", "dist"), where)
    if not isinstance(doc["points"], list):
        raise SchemaError(f"{where}.points: expected a list")
    points = [_label(p, f"{where}.points[{i}]") for i, p in enumerate(doc["points"])]
    dist = _matrix(doc["dist"], len(points), len(points), f"{where}.dist")
    return FiniteMetricSpace(tuple(points), dist)


def glue_from_json(doc, where="glue") -> GlueMetric:
    if isinstance(doc, str):
        return resolve(doc, "glue")
    _require(doc, ("left", "right", "cross"), where)
    left = space_from_json(doc["left"], f"{where}.left")
    right = space_from_json(doc["right"], f"{where}.right")
    return GlueMetric(left, right, _matrix(doc["cross"], len(left), len(right), f"{where}.cross"))


def map_from_json(doc, where="map") -> PartialMap:
    if isinstance(doc, str):
        return resolve(doc, "map")
    _require(doc, ("domain", "codomain", "pairs"), where)
    domain = space_from_json(doc["domain"], f"{where}.domain")
    codomain = space_from_json(doc["codomain"], f"{where}.codomain")
    pairs = []
    for i, pair in enumerate(doc["pairs"]):
        if not isinstance(pair, list) or len(pair) != 2:
            raise SchemaError(f"{where}.pairs[{i}]: expected [x, y]")
        pairs.append((_label(pair[0], f"{where}.pairs[{i}][0]"), _label(pair[1], f"{where}.pairs[{i}][1]")))
    return PartialMap(domain, codomain, tuple(pairs))


def operator_from_json(doc, where="operator") -> FinitePropagationOperator:
    _require(doc, ("source", "target", "entries"), where)
    source = space_from_json(doc["source"], f"{where}.source")
    target = space_from_json(doc["target"], f"{where}.target")
    entries = []
    for i, e in enumerate(doc["entries"]):
        if not isinstance(e, list) or len(e) != 4:
            raise SchemaError(f"{where}.entries[{i}]: expected [y, x, re, im]")
        y = _label(e[0], f"{where}.entries[{i}][0]")
        x = _label(e[1], f"{where}.entries[{i}][1]")
        entries.append((y, x, complex(_number(e[2], f"{where}.entries[{i}][2]"),
                                      _number(e[3], f"{where}.entries[{i}][3]"))))
    return FinitePropagationOperator.from_entries(source, target, entries)


_READERS = {
    "space": space_from_json,
    "glue": glue_from_json,
    "map": map_from_json,
    "operator": operator_from_json,
}


def detect_kind(doc) -> str:
    if isinstance(doc, dict):
        if "dist" in doc:
            return "space"
        if "cross" in doc:
            return "glue"
        if "pairs" in doc:
            return "map"
        if "entries" in doc:
            return "operator"
    raise SchemaError("document is not a space, glue, map or operator")


def loads(text: str, kind: str = None):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    kind = kind or detect_kind(doc)
    return _READERS[kind](doc, kind)


def load(path, kind: str = None):
    """Read a space, glue, map or operator from a JSON file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return loads(text, kind)
    except SchemaError as exc:
        raise SchemaError(f"{path}: {exc}") from None


def validation_of(obj):
    """The validation report that applies to a loaded object, if any."""
    if isinstance(obj, FiniteMetricSpace):
        return validate_metric(obj)
    if isinstance(obj, GlueMetric):
        return validate_glue(obj)
    if isinstance(obj, PartialMap):
        return _combine(validate_metric(obj.domain), validate_metric(obj.codomain))
    if isinstance(obj, FinitePropagationOperator):
        return _combine(validate_metric(obj.source), validate_metric(obj.target))
    return None


def _combine(a, b):
    return ValidationReport(
        ok=a.ok and b.ok,
        violations=a.violations + b.violations,
        min_separation=min(a.min_separation, b.min_separation),
        total=a.total + b.total,
    )


def to_json(obj):
    """Plain JSON-ready structure for a space, glue, map or operator."""
    if isinstance(obj, FiniteMetricSpace):
        return {"points": list(obj.points), "dist": obj.dist.tolist()}
    if isinstance(obj, GlueMetric):
        return {"left": to_json(obj.left), "right": to_json(obj.right), "cross": obj.cross.tolist()}
    if isinstance(obj, PartialMap):
        return {
            "domain": to_json(obj.domain),
            "codomain": to_json(obj.codomain),
            "pairs": [[x, y] for x, y in obj.pairs],
        }
    if isinstance(obj, FinitePropagationOperator):
        return {
            "source": to_json(obj.source),
            "target": to_json(obj.target),
            "entries": [[y, x, v.real, v.imag] for y, x, v in obj.entries()],
        }
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def round_sig(value):
    """Recursively round floats to 12 significant digits; non-finite become null."""
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not math.isfinite(v):
            return None
        return float(f"{v:.{SIG_DIGITS}g}")
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, complex):
        return [round_sig(value.real), round_sig(value.imag)]
    if isinstance(value, dict):
        return {str(k): round_sig(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_sig(v) for v in value]
    if isinstance(value, np.ndarray):
        return round_sig(value.tolist())
    return value


def dumps(obj) -> str:
    data = to_json(obj) if not isinstance(obj, (dict, list)) else obj
    return json.dumps(round_sig(data), indent=1, sort_keys=False)


def save(obj, path):
    Path(path).write_text(dumps(obj) + "\n")
