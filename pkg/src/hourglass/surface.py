"""Half-translation surfaces built from glued Euclidean polygons.

A surface is a list of counterclockwise polygons plus a perfect matching of
their edges.  Each matched pair is glued by ``z -> z + c`` (translation) or
``z -> -z + c`` (half turn).  Coordinates are either all exact rationals
(``fractions.Fraction``) or floats; validation is exact in the first case and
uses ``tol`` in the second.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import (BadParams, EdgeLengthMismatch, GlobalSquare, NonSimplePolygon,
                     OrientationError, UnmatchedEdge, ValidationError)

TOL = 1e-9


class GluingKind(enum.Enum):
    TRANSLATION = "translation"
    HALF_TURN = "half_turn"

    @property
    def sign(self) -> int:
        return 1 if self is GluingKind.TRANSLATION else -1


@dataclass(frozen=True)
class Gluing:
    edge_a: tuple[int, int]
    edge_b: tuple[int, int]
    kind: GluingKind = GluingKind.TRANSLATION


@dataclass(frozen=True)
class Singularity:
    """A vertex class; ``order`` k means cone angle (2 + k) * pi."""
    vertex_class: frozenset
    cone_angle: float
    order: int

    @property
    def is_marked(self) -> bool:
        return self.order == 0

    @property
    def is_pole(self) -> bool:
        return self.order == -1


def _num(v):
    if isinstance(v, (Fraction, int)):
        return Fraction(v)
    return float(v)


def _is_exact(polygons) -> bool:
    return all(isinstance(c, Fraction) for poly in polygons for p in poly for c in p)


def polygon_area(poly) -> float:
    s = 0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return s / 2


def interior_angle(poly, j: int) -> float:
    n = len(poly)
    px, py = (float(c) for c in poly[j])
    ax, ay = (float(c) for c in poly[(j + 1) % n])
    bx, by = (float(c) for c in poly[(j - 1) % n])
    u = complex(ax - px, ay - py)
    w = complex(bx - px, by - py)
    ang = math.atan2((u.conjugate() * w).imag, (u.conjugate() * w).real)
    if ang <= 0:
        ang += 2 * math.pi
    return ang


def _segments_cross(p, q, r, s, exact: bool, tol: float) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(p, q, r), orient(p, q, s)
    d3, d4 = orient(r, s, p), orient(r, s, q)
    eps = 0 if exact else tol
    if ((d1 > eps and d2 < -eps) or (d1 < -eps and d2 > eps)) and \
            ((d3 > eps and d4 < -eps) or (d3 < -eps and d4 > eps)):
        return True

    def on_seg(a, b, c, d):
        if abs(d) > eps:
            return False
        return (min(a[0], b[0]) - eps <= c[0] <= max(a[0], b[0]) + eps and
                min(a[1], b[1]) - eps <= c[1] <= max(a[1], b[1]) + eps)

    return on_seg(p, q, r, d1) or on_seg(p, q, s, d2) or on_seg(r, s, p, d3) or on_seg(r, s, q, d4)


def _check_polygon(poly, exact: bool, tol: float) -> None:
    n = len(poly)
    if n < 3:
        raise NonSimplePolygon(f"polygon with {n} vertices")
    area = polygon_area(poly)
    if area <= (0 if exact else tol):
        raise OrientationError("polygon is not counterclockwise (signed area <= 0)")
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_cross(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n], exact, tol):
                raise NonSimplePolygon(f"edges {i} and {j} intersect")


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


@dataclass(frozen=True, eq=False)
class FlatSurface:
    polygons: tuple
    gluings: tuple
    singularities: tuple
    area: float
    genus: int
    num_marked: int
    is_square: bool
    exact: bool
    name: str = ""
    tol: float = TOL
    # polygon -> sign making every gluing a translation, when one exists
    square_signs: tuple | None = field(default=None, repr=False)

    @property
    def cone_points(self) -> list[Singularity]:
        return [s for s in self.singularities if s.order != 0]

    @property
    def num_poles(self) -> int:
        return sum(1 for s in self.singularities if s.order == -1)

    @property
    def is_principal(self) -> bool:
        return all(s.order in (-1, 0, 1) for s in self.singularities) and bool(self.cone_points)

    @property
    def euler_characteristic(self) -> int:
        return 2 - 2 * self.genus

    def gauss_bonnet_defect(self) -> float:
        """sum(2 pi - angle) - 2 pi chi; zero for a valid surface."""
        return sum(2 * math.pi - s.cone_angle for s in self.singularities) - \
            2 * math.pi * self.euler_characteristic

    def gauss_bonnet_exact(self) -> bool:
        """The same identity over the integers, sum(-order) == 2 chi."""
        return sum(-s.order for s in self.singularities) == 2 * self.euler_characteristic

    def edge_vector(self, p: int, e: int) -> complex:
        poly = self.polygons[p]
        a, b = poly[e], poly[(e + 1) % len(poly)]
        return complex(float(b[0] - a[0]), float(b[1] - a[1]))

    def partner(self, p: int, e: int) -> tuple[tuple[int, int], GluingKind]:
        return self._partners[(p, e)]

    @cached_property
    def _partners(self):
        out = {}
        for g in self.gluings:
            out[g.edge_a] = (g.edge_b, g.kind)
            out[g.edge_b] = (g.edge_a, g.kind)
        return out

    @cached_property
    def vertex_class_of(self) -> dict:
        """(polygon, vertex) -> index into ``singularities``."""
        out = {}
        for k, s in enumerate(self.singularities):
            for c in s.vertex_class:
                out[c] = k
        return out

    def triangulation(self):
        """Ear-clipped triangulation of the polygons (no flips)."""
        from .triangulation import Triangulation
        return Triangulation.from_surface(self)

    def with_polygons(self, polygons, name=None) -> "FlatSurface":
        return build_surface(polygons, self.gluings, name=self.name if name is None else name,
                             tol=self.tol)


def build_surface(polygons: Sequence, gluings: Sequence, name: str = "",
                  tol: float = TOL, normalize_area: bool = False) -> FlatSurface:
    """Validate polygons and gluings and derive the flat invariants."""
    polys = tuple(tuple((_num(x), _num(y)) for x, y in poly) for poly in polygons)
    exact = _is_exact(polys)
    if not exact:
        polys = tuple(tuple((float(x), float(y)) for x, y in poly) for poly in polys)
    for poly in polys:
        _check_polygon(poly, exact, tol)
    if normalize_area:
        a = float(sum(polygon_area(p) for p in polys))
        k = 1.0 / math.sqrt(a)
        polys = tuple(tuple((float(x) * k, float(y) * k) for x, y in poly) for poly in polys)
        exact = False

    glus = []
    for g in gluings:
        if not isinstance(g, Gluing):
            a, b, kind = g
            g = Gluing(tuple(a), tuple(b), GluingKind(kind) if not isinstance(kind, GluingKind) else kind)
        glus.append(g)

    seen = {}
    for g in glus:
        for (p, e) in (g.edge_a, g.edge_b):
            if not (0 <= p < len(polys)) or not (0 <= e < len(polys[p])):
                raise UnmatchedEdge(f"gluing refers to missing edge {(p, e)}")
            if (p, e) in seen:
                raise UnmatchedEdge(f"edge {(p, e)} glued twice")
            seen[(p, e)] = g
    for p, poly in enumerate(polys):
        for e in range(len(poly)):
            if (p, e) not in seen:
                raise UnmatchedEdge(f"edge {(p, e)} is not glued")

    def vec(p, e):
        poly = polys[p]
        a, b = poly[e], poly[(e + 1) % len(poly)]
        return (b[0] - a[0], b[1] - a[1])

    for g in glus:
        va, vb = vec(*g.edge_a), vec(*g.edge_b)
        la, lb = va[0] ** 2 + va[1] ** 2, vb[0] ** 2 + vb[1] ** 2
        if exact:
            if la != lb:
                raise EdgeLengthMismatch(f"{g.edge_a} and {g.edge_b} differ in length")
        elif abs(math.sqrt(la) - math.sqrt(lb)) > tol:
            raise EdgeLengthMismatch(f"{g.edge_a} and {g.edge_b} differ in length")
        # a gluing z -> s z + c reverses boundary orientation: vb == -s * va
        s = g.kind.sign
        want = (-s * va[0], -s * va[1])
        ok = (want == vb) if exact else (abs(want[0] - vb[0]) <= tol and abs(want[1] - vb[1]) <= tol)
        if not ok:
            raise OrientationError(f"{g.kind.value} gluing {g.edge_a}<->{g.edge_b} does not "
                                   "reverse boundary orientation")

    uf = _UnionFind()
    for p, poly in enumerate(polys):
        for j in range(len(poly)):
            uf.find((p, j))
    for g in glus:
        (p, i), (q, j) = g.edge_a, g.edge_b
        ni, nj = len(polys[p]), len(polys[q])
        uf.union((p, i), (q, (j + 1) % nj))
        uf.union((p, (i + 1) % ni), (q, j))
    classes: dict = {}
    for p, poly in enumerate(polys):
        for j in range(len(poly)):
            classes.setdefault(uf.find((p, j)), []).append((p, j))

    sings = []
    for root in sorted(classes):
        members = classes[root]
        angle = sum(interior_angle(polys[p], j) for p, j in members)
        k = round(angle / math.pi) - 2
        if abs(angle - (k + 2) * math.pi) > 1e-6 * max(1.0, angle):
            raise ValidationError(f"cone angle {angle} is not a multiple of pi")
        if k < -1:
            raise ValidationError(f"cone angle {angle} below pi")
        sings.append(Singularity(frozenset(members), angle, k))

    V = len(sings)
    E = len(glus)
    F = len(polys)
    chi = V - E + F
    if chi % 2:
        raise ValidationError("odd Euler characteristic")
    genus = (2 - chi) // 2

    signs = _square_signs(len(polys), glus)
    area = sum(polygon_area(p) for p in polys)
    return FlatSurface(
        polygons=polys, gluings=tuple(glus), singularities=tuple(sings),
        area=float(area), genus=genus, num_marked=sum(1 for s in sings if s.order == 0),
        is_square=signs is not None, exact=exact, name=name, tol=tol, square_signs=signs)


def _square_signs(n: int, glus) -> tuple | None:
    """Two-color polygons so every gluing becomes a translation, or None."""
    adj: dict = {p: [] for p in range(n)}
    for g in glus:
        adj[g.edge_a[0]].append((g.edge_b[0], g.kind.sign))
        adj[g.edge_b[0]].append((g.edge_a[0], g.kind.sign))
    sign = [0] * n
    for start in range(n):
        if sign[start]:
            continue
        sign[start] = 1
        stack = [start]
        while stack:
            p = stack.pop()
            for q, s in adj[p]:
                want = sign[p] * s
                if sign[q] == 0:
                    sign[q] = want
                    stack.append(q)
                elif sign[q] != want:
                    return None
    return tuple(sign)


# --- standard families ------------------------------------------------------

def _rect(w, h):
    return [(0, 0), (w, 0), (w, h), (0, h)]


def _torus(w, h, name):
    return build_surface([_rect(w, h)], [((0, 0), (0, 2), "translation"), ((0, 1), (0, 3), "translation")],
                         name=name)


def standard_surface(name: str, *params, normalize_area: bool = False) -> FlatSurface:
    """SquareTorus(a), RectTorus(w, h), RegularOctagon(side), Pillowcase(w, h)."""
    key = name.lower().replace("_", "")
    try:
        vals = [_num(p) for p in params]
    except (TypeError, ValueError) as exc:
        raise BadParams(str(exc)) from None
    if any(v <= 0 for v in vals):
        raise BadParams("parameters must be positive")
    if key == "squaretorus":
        a = vals[0] if vals else Fraction(1)
        surf = _torus(a, a, "SquareTorus")
    elif key == "recttorus":
        if len(vals) != 2:
            raise BadParams("RectTorus needs width and height")
        surf = _torus(vals[0], vals[1], "RectTorus")
    elif key == "regularoctagon":
        side = float(vals[0]) if vals else 1.0
        R = side / (2 * math.sin(math.pi / 8))
        pts = [(R * math.cos(math.pi / 8 + k * math.pi / 4), R * math.sin(math.pi / 8 + k * math.pi / 4))
               for k in range(8)]
        surf = build_surface([pts], [((0, k), (0, k + 4), "translation") for k in range(4)],
                             name="RegularOctagon")
    elif key == "pillowcase":
        if not vals:
            vals = [Fraction(1)]
        w, h = (vals[0], vals[0]) if len(vals) == 1 else vals[:2]
        glus = [((0, 0), (1, 0), "half_turn"), ((0, 1), (1, 3), "translation"),
                ((0, 2), (1, 2), "half_turn"), ((0, 3), (1, 1), "translation")]
        surf = build_surface([_rect(w, h), _rect(w, h)], glus, name="Pillowcase")
    else:
        raise BadParams(f"unknown standard surface {name!r}")
    if normalize_area:
        surf = build_surface(surf.polygons, surf.gluings, name=surf.name, normalize_area=True)
    return surf


def genus2_example(S: float, s: float, L: float) -> FlatSurface:
    """S x S torus with a horizontal slit of length 2 pi s, plus a cylinder of
    circumference 2 pi s and height 2L glued into the slit.

    Polygon 0 is the torus square with the slit on its bottom (equivalently
    top) side: vertices (0,0), (a,0), (S,0), (S,S), (a,S), (0,S) with a = 2 pi s.
    Its edge 0 is the upper lip of the slit and edge 4 the lower lip.
    Polygon 1 is the cylinder [0,a] x [0,2L]; its vertical sides are glued.
    """
    S, s, L = float(S), float(s), float(L)
    if min(S, s, L) <= 0:
        raise BadParams("S, s, L must be positive")
    a = 2 * math.pi * s
    if not a < S:
        raise BadParams("slit of length 2*pi*s does not fit in the torus")
    if not (s / S < 0.25 and s / L < 0.25):
        raise BadParams("need s/S < 1/4 and s/L < 1/4")
    torus = [(0.0, 0.0), (a, 0.0), (S, 0.0), (S, S), (a, S), (0.0, S)]
    cyl = [(0.0, 0.0), (a, 0.0), (a, 2 * L), (0.0, 2 * L)]
    glus = [((0, 1), (0, 3), "translation"),
            ((0, 2), (0, 5), "translation"),
            ((0, 0), (1, 2), "translation"),
            ((0, 4), (1, 0), "translation"),
            ((1, 1), (1, 3), "translation")]
    surf = build_surface([torus, cyl], glus, name=f"genus2(S={S:g},s={s:g},L={L:g})")
    return surf


# --- Teichmuller flow and double cover ---------------------------------------

def flow_matrix(t: float) -> np.ndarray:
    return np.diag([math.exp(t), math.exp(-t)])


def apply_flow(surface: FlatSurface, t: float) -> FlatSurface:
    """Act by diag(e^t, e^-t) on every chart."""
    if t == 0:
        return surface
    et, emt = math.exp(t), math.exp(-t)
    polys = [[(float(x) * et, float(y) * emt) for x, y in poly] for poly in surface.polygons]
    return build_surface(polys, surface.gluings, name=surface.name, tol=surface.tol)


@dataclass(frozen=True)
class DoubleCover:
    surface: FlatSurface
    # involution on polygons of the cover; vertex j of polygon p maps to vertex j of involution[p]
    involution: tuple
    # cover polygon -> (base polygon, sheet)
    projection: tuple


def orienting_double_cover(surface: FlatSurface) -> DoubleCover:
    """Branched double cover on which every gluing becomes a translation.

    Sheet 1 carries each polygon rotated by a half turn.  A translation gluing
    stays on its sheet; a half-turn gluing switches sheets.
    """
    if surface.is_square:
        raise GlobalSquare("surface already has trivial holonomy; the cover would be disconnected")
    P = len(surface.polygons)
    polys = list(surface.polygons) + [tuple((-x, -y) for x, y in poly) for poly in surface.polygons]
    glus = []
    for g in surface.gluings:
        (p, i), (q, j) = g.edge_a, g.edge_b
        for k in (0, 1):
            k2 = k if g.kind is GluingKind.TRANSLATION else 1 - k
            glus.append(Gluing((p + k * P, i), (q + k2 * P, j), GluingKind.TRANSLATION))
    cover = build_surface(polys, glus, name=f"cover({surface.name})", tol=surface.tol)
    inv = tuple((p + P) % (2 * P) for p in range(2 * P))
    proj = tuple((p % P, p // P) for p in range(2 * P))
    return DoubleCover(cover, inv, proj)


def riemann_hurwitz_ok(base: FlatSurface, cover: FlatSurface) -> bool:
    odd = sum(1 for s in base.singularities if s.order % 2)
    return cover.euler_characteristic == 2 * base.euler_characteristic - odd


def delaunay(surface: FlatSurface, max_flips: int = 100000):
    """Intrinsic Delaunay triangulation of the surface."""
    tri = surface.triangulation()
    tri.make_delaunay(max_flips=max_flips)
    return tri
