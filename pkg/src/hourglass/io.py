"""Surface and configuration files (JSON documents).

Surface document::

    {"name": "...", "normalize_area": false,
     "polygons": [[["0", "0"], ["1", "0"], ...], ...],
     "gluings": [{"a": [0, 0], "b": [0, 2], "kind": "translation"}, ...]}

Coordinates are strings: ``"3/4"`` or ``"2"`` are exact rationals, anything
else (``"0.5"``, ``"1e-3"``) is read as a float.  Plain JSON numbers are
accepted too.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

from .errors import BadParams
from .surface import Gluing, GluingKind, build_surface, genus2_example, standard_surface

SURFACE_KEYS = ("name", "normalize_area", "polygons", "gluings")
GLUING_KEYS = ("a", "b", "kind")

CONFIG_DEFAULTS = {
    "tol": 1e-9,
    "mu0": 16.0,
    "B": 8.0,
    "h": None,
    "max_flips": 100000,
    "max_vertices": 200000,
    "saddle_cap": 100000,
}


def _coord(v):
    if isinstance(v, bool):
        raise BadParams(f"bad coordinate {v!r}")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return v
    if isinstance(v, str):
        s = v.strip()
        try:
            if "/" in s or s.lstrip("+-").isdigit():
                return Fraction(s)
            x = float(s)
        except (ValueError, ZeroDivisionError):
            raise BadParams(f"bad coordinate {v!r}") from None
        if not math.isfinite(x):
            raise BadParams(f"non-finite coordinate {v!r}")
        return x
    raise BadParams(f"bad coordinate {v!r}")


def _coord_str(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    return repr(float(x))


def surface_to_dict(surface, normalize_area: bool = False) -> dict:
    return {
        "name": surface.name,
        "normalize_area": bool(normalize_area),
        "polygons": [[[_coord_str(x), _coord_str(y)] for x, y in poly] for poly in surface.polygons],
        "gluings": [{"a": list(g.edge_a), "b": list(g.edge_b), "kind": g.kind.value} for g in surface.gluings],
    }


def dumps_surface(surface, normalize_area: bool = False) -> str:
    """Canonical text: fixed key order, one polygon or gluing per line."""
    d = surface_to_dict(surface, normalize_area)
    one = lambda v: json.dumps(v, separators=(", ", ": "))
    lines = ["{", f' "name": {one(d["name"])},', f' "normalize_area": {one(d["normalize_area"])},',
             ' "polygons": [']
    lines += [f"  {one(p)}," for p in d["polygons"]]
    lines[-1] = lines[-1].rstrip(",")
    lines += [" ],", ' "gluings": [']
    lines += [f"  {one(g)}," for g in d["gluings"]]
    lines[-1] = lines[-1].rstrip(",")
    lines += [" ]", "}"]
    return "\n".join(lines) + "\n"


def surface_from_dict(doc: dict, lax: bool = False, tol: float | None = None):
    if not isinstance(doc, dict):
        raise BadParams("surface document must be an object")
    extra = set(doc) - set(SURFACE_KEYS)
    if extra and not lax:
        raise BadParams(f"unknown keys {sorted(extra)}")
    for k in ("polygons", "gluings"):
        if k not in doc:
            raise BadParams(f"missing key {k!r}")
    try:
        polys = [[(_coord(x), _coord(y)) for x, y in poly] for poly in doc["polygons"]]
    except (TypeError, ValueError):
        raise BadParams("polygons must be lists of coordinate pairs") from None
    glus = []
    for g in doc["gluings"]:
        if not isinstance(g, dict):
            raise BadParams("gluings must be objects")
        extra = set(g) - set(GLUING_KEYS)
        if extra and not lax:
            raise BadParams(f"unknown gluing keys {sorted(extra)}")
        try:
            kind = GluingKind(g.get("kind", "translation"))
            a, b = tuple(int(v) for v in g["a"]), tuple(int(v) for v in g["b"])
        except (KeyError, ValueError, TypeError):
            raise BadParams(f"bad gluing {g!r}") from None
        glus.append(Gluing(a, b, kind))
    kw = {} if tol is None else {"tol": tol}
    return build_surface(polys, glus, name=str(doc.get("name", "")),
                         normalize_area=bool(doc.get("normalize_area", False)), **kw)


def loads_surface(text: str, lax: bool = False, tol: float | None = None):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BadParams(f"not a surface document: {exc}") from None
    return surface_from_dict(doc, lax=lax, tol=tol)


def named_surface(ref: str):
    """``RegularOctagon``, ``RectTorus:2,0.5`` or ``genus2:1,0.01,2``."""
    name, _, args = ref.partition(":")
    vals = [a for a in args.split(",") if a.strip()]
    if name.lower() in ("genus2", "genus2example", "genus2_example"):
        if len(vals) != 3:
            raise BadParams("genus2 needs S,s,L")
        return genus2_example(*(float(v) for v in vals))
    return standard_surface(name, *(_coord(v) for v in vals))


def load_surface(ref: str, lax: bool = False, tol: float | None = None):
    """Read a surface file, or build a named surface when no such file exists."""
    p = Path(ref)
    if p.is_file():
        return loads_surface(p.read_text(), lax=lax, tol=tol)
    return named_surface(ref)


def load_config(path: str | None) -> dict:
    cfg = dict(CONFIG_DEFAULTS)
    if path is None:
        return cfg
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise BadParams(f"cannot read config: {exc}") from None
    if not isinstance(doc, dict):
        raise BadParams("config must be an object")
    extra = set(doc) - set(CONFIG_DEFAULTS)
    if extra:
        raise BadParams(f"unknown config keys {sorted(extra)}")
    cfg.update(doc)
    return cfg
