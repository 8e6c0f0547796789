"""Instance and certificate files (JSON, schema version "1").

Floats are serialized with 17 significant digits and infinities as the
strings "inf"/"-inf", so files round-trip bit-exactly and stay valid strict
JSON.  Dictionary key order is fixed, making serialization deterministic.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .conjugates import FamilySearchGrid, GridSpec
from .duality import GapCertificate, ProblemInstance
from .errors import InstanceParseError
from .objectives import Box, Objective
from .quadratics import CurvatureSpec, Family, GeneralizedQuadratic, LinearMap

SCHEMA_VERSION = "1"


# ---------------------------------------------------------------------------
# Serialization primitives


def _format_float(x: float) -> str:
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if math.isnan(x):
        raise InstanceParseError("cannot serialize NaN")
    return format(float(x), ".17g")


def dumps(obj, indent: int = 0) -> str:
    """Deterministic JSON text (17-significant-digit floats, inf strings)."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{inner}{json.dumps(str(k))}: {dumps(v, indent + 1)}'
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        parts = [dumps(v, indent + 1) for v in seq]
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(parts) + "]"
        return "[\n" + ",\n".join(inner + p for p in parts) + "\n" + pad + "]"
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    raise InstanceParseError(f"cannot serialize {type(obj).__name__}")


def _as_float(value, where: str) -> float:
    if isinstance(value, str):
        if value == "inf":
            return float("inf")
        if value == "-inf":
            return float("-inf")
        raise InstanceParseError(f"{where}: bad number {value!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceParseError(f"{where}: bad number {value!r}")
    return float(value)


def _as_vector(value, where: str) -> np.ndarray:
    if not isinstance(value, list):
        raise InstanceParseError(f"{where}: expected a list")
    return np.array([_as_float(v, where) for v in value], dtype=float)


def _as_matrix(value, where: str) -> np.ndarray:
    if not isinstance(value, list) or not all(isinstance(r, list) for r in value):
        raise InstanceParseError(f"{where}: expected a list of rows")
    widths = {len(r) for r in value}
    if len(widths) != 1:
        raise InstanceParseError(f"{where}: ragged matrix rows")
    return np.array([[_as_float(v, where) for v in r] for r in value], dtype=float)


# ---------------------------------------------------------------------------
# Field blocks


def _box_to_dict(box: Box) -> dict:
    return {"lower": list(box.lower), "upper": list(box.upper)}


def _box_from_dict(data, where: str) -> Box:
    if not isinstance(data, dict):
        raise InstanceParseError(f"{where}: expected an object")
    try:
        return Box(_as_vector(data["lower"], where), _as_vector(data["upper"], where))
    except KeyError as exc:
        raise InstanceParseError(f"{where}: missing field {exc.args[0]!r}") from exc


def _objective_to_dict(obj: Objective) -> dict:
    if not obj.is_quadratic:
        raise InstanceParseError(
            "only quadratic-backed objectives can be serialized"
        )
    out = {
        "kind": "quadratic",
        "A": [list(row) for row in obj.quad.A],
        "u": list(obj.quad.u),
        "c": obj.quad.c,
    }
    if obj.domain_box is not None:
        out["domain_box"] = _box_to_dict(obj.domain_box)
    return out


def _objective_from_dict(data, dim: int, where: str) -> Objective:
    if not isinstance(data, dict):
        raise InstanceParseError(f"{where}: expected an object")
    kind = data.get("kind")
    if kind not in ("quadratic", "blackbox-poly"):
        raise InstanceParseError(f"{where}.kind: expected quadratic|blackbox-poly")
    for fieldname in ("A", "u", "c"):
        if fieldname not in data:
            raise InstanceParseError(f"{where}.{fieldname}: missing")
    A = _as_matrix(data["A"], f"{where}.A")
    u = _as_vector(data["u"], f"{where}.u")
    c = _as_float(data["c"], f"{where}.c")
    if A.shape != (dim, dim):
        raise InstanceParseError(f"{where}.A: shape {A.shape} != ({dim}, {dim})")
    if u.shape != (dim,):
        raise InstanceParseError(f"{where}.u: length {u.shape[0]} != {dim}")
    box = None
    if data.get("domain_box") is not None:
        box = _box_from_dict(data["domain_box"], f"{where}.domain_box")
        if box.dim != dim:
            raise InstanceParseError(f"{where}.domain_box: dimension mismatch")
    try:
        quad = GeneralizedQuadratic(dim, A, u, c)
    except ValueError as exc:
        raise InstanceParseError(f"{where}: {exc}") from exc
    if kind == "quadratic":
        return Objective.quadratic(quad, domain_box=box)
    # blackbox-poly: same payload evaluated behind an opaque callable, so all
    # consumers must go through the grid engines
    return Objective.from_callable(
        dim, lambda x, q=quad: float(q(np.asarray(x, dtype=float))), domain_box=box
    )


def _family_to_dict(family: Family) -> dict:
    out = {"curvature": family.curvature.label()}
    if not family.includes_constants:
        out["includes_constants"] = False
    return out


def _family_from_dict(data, dim: int, where: str) -> Family:
    if not isinstance(data, dict) or "curvature" not in data:
        raise InstanceParseError(f"{where}: expected an object with 'curvature'")
    try:
        spec = CurvatureSpec.parse(str(data["curvature"]))
    except ValueError as exc:
        raise InstanceParseError(f"{where}.curvature: {exc}") from exc
    includes = bool(data.get("includes_constants", True))
    return Family(dim, spec, includes_constants=includes)


def _member_to_dict(q: GeneralizedQuadratic) -> dict:
    return {"a": float(q.A[0, 0]) if q.dim else 0.0, "u": list(q.u), "c": q.c}


def _member_from_dict(data, dim: int, where: str) -> GeneralizedQuadratic:
    if not isinstance(data, dict):
        raise InstanceParseError(f"{where}: expected an object")
    a = _as_float(data.get("a", 0.0), f"{where}.a")
    u = _as_vector(data["u"], f"{where}.u") if "u" in data else np.zeros(dim)
    c = _as_float(data.get("c", 0.0), f"{where}.c")
    if u.shape != (dim,):
        raise InstanceParseError(f"{where}.u: length {u.shape[0]} != {dim}")
    return GeneralizedQuadratic.iso(dim, a, u, c)


# ---------------------------------------------------------------------------
# Instances


def instance_to_dict(instance: ProblemInstance) -> dict:
    """Descriptor dict for an instance (file-loaded instances reuse their
    original descriptor so blackbox payloads survive)."""
    source = getattr(instance, "_source", None)
    if source is not None:
        return source
    search = {
        "psi_slope_box": _box_to_dict(instance.psi_search.slope_box),
        "psi_curv_grid": list(instance.psi_search.curvatures),
        "psi_slope_points_per_axis": instance.psi_search.slope_points_per_axis,
        "x_box": _box_to_dict(instance.x_search.box),
        "y_box": _box_to_dict(instance.y_search.box),
        "points_per_axis": instance.x_search.points_per_axis,
        "refine_rounds": instance.x_search.refine_rounds,
    }
    return {
        "schema_version": SCHEMA_VERSION,
        "name": instance.name,
        "n": instance.L.in_dim,
        "m": instance.L.out_dim,
        "L": [list(row) for row in instance.L.matrix],
        "f": _objective_to_dict(instance.f),
        "g": _objective_to_dict(instance.g),
        "phi": _family_to_dict(instance.phi),
        "psi": _family_to_dict(instance.psi),
        "search": search,
    }


def instance_from_dict(data: dict) -> ProblemInstance:
    if not isinstance(data, dict):
        raise InstanceParseError("instance file must hold a JSON object")
    if data.get("schema_version") != SCHEMA_VERSION:
        raise InstanceParseError(
            f"schema_version: expected {SCHEMA_VERSION!r}, got {data.get('schema_version')!r}"
        )
    for fieldname in ("n", "m", "L", "f", "g", "phi", "psi"):
        if fieldname not in data:
            raise InstanceParseError(f"missing field {fieldname!r}")
    n, m = data["n"], data["m"]
    if not isinstance(n, int) or not isinstance(m, int) or n < 1 or m < 1:
        raise InstanceParseError("n, m must be positive integers")
    L_matrix = _as_matrix(data["L"], "L")
    if L_matrix.shape != (m, n):
        raise InstanceParseError(f"L: shape {L_matrix.shape} != ({m}, {n})")
    L = LinearMap(L_matrix)
    f = _objective_from_dict(data["f"], n, "f")
    g = _objective_from_dict(data["g"], m, "g")
    phi = _family_from_dict(data["phi"], n, "phi")
    psi = _family_from_dict(data["psi"], m, "psi")

    search = data.get("search", {})
    if not isinstance(search, dict):
        raise InstanceParseError("search: expected an object")
    points = search.get("points_per_axis", {1: 201, 2: 61, 3: 21}.get(n, 9))
    rounds = search.get("refine_rounds", 2)
    if not isinstance(points, int) or not isinstance(rounds, int):
        raise InstanceParseError("search: points_per_axis/refine_rounds must be integers")
    x_box = (
        _box_from_dict(search["x_box"], "search.x_box")
        if "x_box" in search
        else Box.cube(n)
    )
    y_box = (
        _box_from_dict(search["y_box"], "search.y_box")
        if "y_box" in search
        else Box.cube(m)
    )
    slope_box = (
        _box_from_dict(search["psi_slope_box"], "search.psi_slope_box")
        if "psi_slope_box" in search
        else Box.cube(m)
    )
    default_grid = FamilySearchGrid.default(psi)
    if "psi_curv_grid" in search:
        curv = search["psi_curv_grid"]
        if isinstance(curv, int):
            curvatures = tuple(float(a) for a in psi.curvature.grid(points=curv))
        else:
            curvatures = tuple(_as_float(a, "search.psi_curv_grid") for a in curv)
    else:
        curvatures = default_grid.curvatures
    slope_points = search.get(
        "psi_slope_points_per_axis", default_grid.slope_points_per_axis
    )
    try:
        psi_search = FamilySearchGrid(psi, slope_box, slope_points, curvatures)
        x_search = GridSpec(x_box, points, rounds)
        y_points = {1: 201, 2: 61, 3: 21}.get(m, 9) if m != n else points
        y_search = GridSpec(y_box, y_points, rounds)
        instance = ProblemInstance(
            f, g, L, phi, psi, psi_search, x_search, y_search,
            name=str(data.get("name", "")),
        )
    except ValueError as exc:
        raise InstanceParseError(str(exc)) from exc
    object.__setattr__(instance, "_source", data)
    return instance


def load_instance(path) -> ProblemInstance:
    path = Path(path)
    if not path.exists():
        raise InstanceParseError(f"no such file: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InstanceParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return instance_from_dict(data)


def save_instance(instance: ProblemInstance, path) -> None:
    Path(path).write_text(dumps(instance_to_dict(instance)) + "\n")


# ---------------------------------------------------------------------------
# Certificates


def certificate_to_dict(cert: GapCertificate) -> dict:
    out = {
        "kind": cert.kind,
        "eps": cert.eps,
        "x": list(cert.x),
        "psi": _member_to_dict(cert.psi),
    }
    if cert.phi is not None:
        out["phi"] = _member_to_dict(cert.phi)
    return out


def certificate_from_dict(data: dict, n: int, m: int) -> GapCertificate:
    if not isinstance(data, dict):
        raise InstanceParseError("certificate must be a JSON object")
    kind = data.get("kind")
    if kind not in ("thm42", "thm43"):
        raise InstanceParseError(f"certificate kind: expected thm42|thm43, got {kind!r}")
    for fieldname in ("eps", "x", "psi"):
        if fieldname not in data:
            raise InstanceParseError(f"certificate: missing field {fieldname!r}")
    eps = _as_float(data["eps"], "eps")
    x = _as_vector(data["x"], "x")
    if x.shape != (n,):
        raise InstanceParseError(f"certificate x: length {x.shape[0]} != {n}")
    psi = _member_from_dict(data["psi"], m, "psi")
    phi = _member_from_dict(data["phi"], n, "phi") if "phi" in data else None
    if kind == "thm43" and phi is None:
        raise InstanceParseError("kind thm43 needs a phi block")
    try:
        return GapCertificate(kind, eps, x, psi, phi)
    except ValueError as exc:
        raise InstanceParseError(str(exc)) from exc


def load_certificate_file(path, n: int, m: int) -> dict:
    """Parse a certificate file: either a single certificate object or a
    ladder ``{"kind": "thm44", "x": [...], "ladder": [...], "certs": [...]}``.

    Returns {"kind": ..., "certs": [...], "x": ..., "ladder": ...}."""
    path = Path(path)
    if not path.exists():
        raise InstanceParseError(f"no such file: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InstanceParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise InstanceParseError("certificate file must hold a JSON object")
    kind = data.get("kind")
    if kind in ("thm42", "thm43"):
        return {"kind": kind, "certs": [certificate_from_dict(data, n, m)]}
    if kind == "thm44":
        if "x" not in data:
            raise InstanceParseError("thm44 certificate needs x")
        x = _as_vector(data["x"], "x")
        if x.shape != (n,):
            raise InstanceParseError(f"certificate x: length {x.shape[0]} != {n}")
        ladder = tuple(
            _as_float(e, "ladder") for e in data.get("ladder", [1.0, 1e-2, 1e-4, 1e-6])
        )
        certs = [
            certificate_from_dict(c, n, m) for c in data.get("certs", [])
        ]
        return {"kind": kind, "x": x, "ladder": ladder, "certs": certs}
    raise InstanceParseError(f"certificate kind: expected thm42|thm43|thm44, got {kind!r}")
