"""JSON curve files.

A curve file is one JSON object::

    {"kind": "open" | "closed",
     "breakpoints": [t0, t1, ...],
     "points": [[x0, y0], [x1, y1], ...],
     "metadata": {...}}

Floats are written with Python's shortest round-trip repr, so a curve read
back is bit-identical to the one written.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .circle import ClosedPLCurve
from .curve import PLCurve
from .errors import BilipError


class CurveFileError(BilipError, ValueError):
    """A curve file could not be read; the message names the line or field."""


def curve_to_dict(curve, metadata: dict | None = None) -> dict:
    closed = isinstance(curve, ClosedPLCurve)
    params = curve.angles if closed else curve.t
    return {
        "kind": "closed" if closed else "open",
        "breakpoints": [float(x) for x in params],
        "points": [[float(x), float(y)] for x, y in curve.pts],
        "metadata": jsonable(dict(metadata or {})),
    }


def _numbers(value, field: str, shape: tuple) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise CurveFileError(f"field '{field}': not an array of numbers") from exc
    if arr.ndim != len(shape) or any(s is not None and arr.shape[k] != s for k, s in enumerate(shape)):
        raise CurveFileError(f"field '{field}': expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise CurveFileError(f"field '{field}': non-finite value")
    return arr


def curve_from_dict(data) -> tuple[object, dict]:
    if not isinstance(data, dict):
        raise CurveFileError("top level must be a JSON object")
    for key in ("kind", "breakpoints", "points"):
        if key not in data:
            raise CurveFileError(f"field '{key}': missing")
    kind = data["kind"]
    if kind not in ("open", "closed"):
        raise CurveFileError(f"field 'kind': expected 'open' or 'closed', got {kind!r}")
    t = _numbers(data["breakpoints"], "breakpoints", (None,))
    pts = _numbers(data["points"], "points", (None, 2))
    if t.size != pts.shape[0]:
        raise CurveFileError(f"field 'points': {pts.shape[0]} points for {t.size} breakpoints")
    meta = data.get("metadata", {})
    if not isinstance(meta, dict):
        raise CurveFileError("field 'metadata': must be an object")
    try:
        curve = ClosedPLCurve(t, pts) if kind == "closed" else PLCurve(t, pts)
    except BilipError as exc:
        raise CurveFileError(f"field 'breakpoints': {exc}") from exc
    return curve, meta


def dumps(curve, metadata: dict | None = None) -> str:
    return json.dumps(curve_to_dict(curve, metadata), indent=1) + "\n"


def loads(text: str, source: str = "<string>"):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CurveFileError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return curve_from_dict(data)
    except CurveFileError as exc:
        raise CurveFileError(f"{source}: {exc}") from exc


def load(path: str):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read(), path)


def dump(curve, path: str, metadata: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(curve, metadata))


def jsonable(value):
    """Plain-JSON version of report values (tuples, numpy scalars, inf)."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    if isinstance(value, (np.integer, int)) and not isinstance(value, bool):
        return int(value)
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    return value
