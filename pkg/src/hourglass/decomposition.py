"""Primitive annuli decomposition and the hourglass ratio.

Admitted annuli (flat cylinders of large modulus, expanding annuli of large
``mu``) carry two level circles each.  Cutting the surface along all level
circles yields pieces; the pieces between the two circles of a cylinder form
its middle, the rest are thick.  The hourglass ratio minimises
``length(U) / sqrt(area of smaller side)`` over systems ``U`` of level
circles that split the surface into exactly two sides, neither made only of
annulus shells.
"""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field

from .errors import BadParams, DisjointnessViolated
from .geometry import (DistanceField, _cylinders_from, as_triangulation, enumerate_saddle_connections,
                       expanding_annulus, find_cylinders, geodesic_loops, systole)
from .triangulation import Triangulation, _cross

THICK, CYLINDER_MIDDLE, ANNULUS_SHELL = "Thick", "CylinderMiddle", "AnnulusShell"


@dataclass(frozen=True)
class PADParams:
    mu0: float = 16.0
    B: float = 8.0

    def __post_init__(self):
        if not (self.mu0 > self.B > 2):
            raise BadParams(f"need mu0 > B > 2, got mu0={self.mu0}, B={self.B}")

    @property
    def b(self) -> float:
        return 1.0 / self.B


@dataclass
class LevelCircle:
    annulus: int
    kind: str                 # "inner" (i_A) or "outer" (o_A)
    length: float
    height: float             # signed offset from the cylinder's mid-height leaf
    polyline: list = field(repr=False, default_factory=list)

    @property
    def degenerate(self) -> bool:
        return self.length <= 0


@dataclass
class Piece:
    t: int
    poly: list                # local chart vertices, counterclockwise
    annulus: int = -1         # admitted annulus whose middle contains the piece

    @property
    def area(self) -> float:
        return _poly_area(self.poly)


@dataclass
class Component:
    kind: str
    area: float
    pieces: list = field(repr=False, default_factory=list)
    annulus: int = -1


@dataclass
class PADecomposition:
    tri: Triangulation
    params: PADParams
    annuli: list              # FlatCylinder objects
    circles: list             # LevelCircle
    components: list          # Component
    adjacency: list           # (circle id, component on + side, component on - side)
    rejected: list = field(default_factory=list)  # (kind, mu) of scanned candidates below mu0
    checks: dict = field(default_factory=dict)

    @property
    def area(self) -> float:
        return sum(c.area for c in self.components)

    def kinds(self):
        return [c.kind for c in self.components]


@dataclass
class HourglassResult:
    value: float
    witness: tuple
    smaller_side_area: float
    sides: tuple = ()


def _poly_area(P):
    a = 0.0
    for k in range(len(P)):
        a += _cross(P[k], P[(k + 1) % len(P)])
    return 0.5 * a


def _cut_triangle(tri, t, lines):
    """Convex pieces of triangle t after cutting by ``lines`` = [(a, u, eta, cid)]."""
    polys = [list(tri.pts[t])]
    for a, u, eta, cid in lines:
        nxt = []
        for P in polys:
            r = _split_simple(P, a, u, eta)
            nxt.extend(r)
        polys = nxt
    return polys


def _split_simple(P, a, u, eta):
    def f(z):
        return _cross(u, z - a) - eta
    vals = [f(z) for z in P]
    scale = max(abs(z - P[0]) for z in P) or 1.0
    tol = 1e-12 * scale
    if all(v >= -tol for v in vals) or all(v <= tol for v in vals):
        return [P]
    pos, neg = [], []
    n = len(P)
    for k in range(n):
        z0, z1 = P[k], P[(k + 1) % n]
        v0, v1 = vals[k], vals[(k + 1) % n]
        if v0 >= -tol:
            pos.append(z0)
        if v0 <= tol:
            neg.append(z0)
        if (v0 > tol and v1 < -tol) or (v0 < -tol and v1 > tol):
            zc = z0 + (z1 - z0) * (v0 / (v0 - v1))
            pos.append(zc)
            neg.append(zc)
    out = []
    for Q in (pos, neg):
        if len(Q) >= 3 and abs(_poly_area(Q)) > 1e-14 * scale * scale:
            out.append(Q)
    return out


def _edge_param(A, B, z):
    d = B - A
    return ((z - A) * d.conjugate()).real / abs(d) ** 2


def _on_line(A, B, z, tol):
    d = B - A
    return abs(_cross(d, z - A)) <= tol * abs(d)


class _DSU:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, x):
        while self.p[x] != x:
            self.p[x] = self.p[self.p[x]]
            x = self.p[x]
        return x

    def union(self, a, b):
        a, b = self.find(a), self.find(b)
        if a != b:
            self.p[max(a, b)] = min(a, b)


def _expanding_candidates(tri, params, bound):
    out = []
    for loop in geodesic_loops(None, bound, tri=tri):
        for side in (1, -1):
            try:
                A = expanding_annulus(None, loop, side, tri=tri)
            except Exception:  # noqa: BLE001 - candidates that fail to grow are skipped
                continue
            out.append(A)
    return out


def build_pad(surface, params: PADParams | None = None, tri: Triangulation | None = None,
              scan_expanding: bool = True) -> PADecomposition:
    """Admit annuli with mu > mu0, place their level circles, cut the surface."""
    params = params or PADParams()
    tri = tri if tri is not None else as_triangulation(surface)
    B = params.B
    cyls = find_cylinders(None, params.mu0, tri=tri)
    admitted = [c for c in cyls if c.modulus > params.mu0]
    rejected = [("cylinder", c.modulus) for c in cyls if c.modulus <= params.mu0]
    if scan_expanding:
        # expanding annuli about short closed geodesics; point cores are never
        # admitted (their inner side is a disk, see module notes)
        for A in _expanding_candidates(tri, params, math.sqrt(tri.area)):
            if A.mu > params.mu0:
                raise DisjointnessViolated(
                    "an expanding annulus with mu > mu0 was found; its level-set shell cut is "
                    "not supported, raise mu0")
            rejected.append(("expanding", A.mu))
    circles = []
    lines_by_t: dict[int, list] = {}
    for k, c in enumerate(admitted):
        eta = c.width / 2 - B * c.core_length
        if eta <= 0:
            raise DisjointnessViolated(f"cylinder {k}: width {c.width} too small for B={B}")
        for kind, h in (("inner", -eta), ("outer", eta)):
            cid = len(circles)
            poly = []
            for t, a, b in c.pieces:
                u = (b - a) / abs(b - a)
                lines_by_t.setdefault(t, []).append((a, u, h, cid))
                poly.append((t, a + 1j * u * h, b + 1j * u * h))
            circles.append(LevelCircle(k, kind, c.core_length, h, poly))
    _check_disjoint(tri, lines_by_t)
    pieces = []
    for t in range(tri.n_triangles):
        for P in _cut_triangle(tri, t, lines_by_t.get(t, [])):
            pc = Piece(t, P)
            z = sum(P) / len(P)
            for k, c in enumerate(admitted):
                for tt, a, b in c.pieces:
                    if tt != t:
                        continue
                    u = (b - a) / abs(b - a)
                    h = _cross(u, z - a)
                    eta = c.width / 2 - B * c.core_length
                    if abs(h) < eta:
                        pc.annulus = k
            pieces.append(pc)
    comps, adjacency = _components(tri, pieces, circles, lines_by_t)
    components = []
    for members in comps:
        ks = {pieces[i].annulus for i in members}
        if len(ks) != 1:
            raise DisjointnessViolated("a component mixes cylinder middles and thick pieces")
        k = ks.pop()
        area = math.fsum(pieces[i].area for i in members)
        components.append(Component(CYLINDER_MIDDLE if k >= 0 else THICK, area,
                                    [pieces[i] for i in members], k))
    pad = PADecomposition(tri, params, admitted, circles, components, adjacency, rejected)
    pad.checks["area_defect"] = abs(pad.area - tri.area)
    pad.checks["circles_disjoint"] = True
    return pad


def _check_disjoint(tri, lines_by_t):
    for t, lines in lines_by_t.items():
        p = tri.pts[t]
        segs = []
        for a, u, eta, cid in lines:
            # clip the line to the triangle
            pts = []
            for e in range(3):
                A, B = p[e], p[(e + 1) % 3]
                va = _cross(u, A - a) - eta
                vb = _cross(u, B - a) - eta
                if (va <= 0 <= vb) or (vb <= 0 <= va):
                    if va != vb:
                        pts.append(A + (B - A) * (va / (va - vb)))
            if len(pts) >= 2:
                segs.append((pts[0], pts[-1], cid))
        for (a1, b1, c1), (a2, b2, c2) in itertools.combinations(segs, 2):
            if c1 == c2:
                continue
            d1, d2 = b1 - a1, b2 - a2
            den = _cross(d1, d2)
            if abs(den) < 1e-14:
                continue
            s = _cross(a2 - a1, d2) / den
            r = _cross(a2 - a1, d1) / den
            if 1e-9 < s < 1 - 1e-9 and 1e-9 < r < 1 - 1e-9:
                raise DisjointnessViolated(f"level circles {c1} and {c2} intersect")


def _components(tri, pieces, circles, lines_by_t):
    """Union pieces across triangle edges; record which components each circle separates."""
    n = len(pieces)
    dsu = _DSU(n)
    # pieces touching each triangle edge, with the parameter interval they occupy
    touching: dict[tuple, list] = {}
    for k, pc in enumerate(pieces):
        p = tri.pts[pc.t]
        P = pc.poly
        m = len(P)
        for q in range(m):
            z0, z1 = P[q], P[(q + 1) % m]
            for e in range(3):
                A, B = p[e], p[(e + 1) % 3]
                tol = 1e-10 * abs(B - A)
                if _on_line(A, B, z0, tol) and _on_line(A, B, z1, tol):
                    s0, s1 = _edge_param(A, B, z0), _edge_param(A, B, z1)
                    if abs(s1 - s0) > 1e-12:
                        touching.setdefault((pc.t, e), []).append((min(s0, s1), max(s0, s1), k))
    for (t, e), lst in touching.items():
        t2, e2 = int(tri.nbr[t, e]), int(tri.nedge[t, e])
        other = touching.get((t2, e2), [])
        for s0, s1, k in lst:
            for r0, r1, k2 in other:
                a0, a1 = 1 - r1, 1 - r0
                if min(s1, a1) - max(s0, a0) > 1e-9:
                    dsu.union(k, k2)
    roots = sorted({dsu.find(k) for k in range(n)})
    index = {r: i for i, r in enumerate(roots)}
    comps = [[] for _ in roots]
    for k in range(n):
        comps[index[dsu.find(k)]].append(k)
    adjacency = []
    for cid, circ in enumerate(circles):
        sides = {1: set(), -1: set()}
        for t, za, zb in circ.polyline:
            u = (zb - za) / abs(zb - za)
            for k, pc in enumerate(pieces):
                if pc.t != t:
                    continue
                P = pc.poly
                on = [z for z in P if abs(_cross(u, z - za)) < 1e-10 * max(1.0, abs(zb - za))]
                if len(on) < 2:
                    continue
                z = sum(P) / len(P)
                sides[1 if _cross(u, z - za) > 0 else -1].add(index[dsu.find(k)])
        if len(sides[1]) != 1 or len(sides[-1]) != 1:
            raise DisjointnessViolated(f"level circle {cid} does not separate cleanly")
        adjacency.append((cid, sides[1].pop(), sides[-1].pop()))
    return comps, adjacency


# --- hourglass ratio -------------------------------------------------------------------

def _parts(n_nodes, edges):
    """Connected components of a multigraph given as (a, b) node pairs."""
    dsu = _DSU(n_nodes)
    for a, b in edges:
        dsu.union(a, b)
    roots = {}
    for v in range(n_nodes):
        roots.setdefault(dsu.find(v), []).append(v)
    return list(roots.values())


def _admissible(pad, U):
    """Return (left, right) node sets if removing circle set U gives two valid sides."""
    n = len(pad.components)
    kept = [(a, b) for cid, a, b in pad.adjacency if cid not in U]
    parts = _parts(n, kept)
    if len(parts) != 2:
        return None
    for part in parts:
        if all(pad.components[v].kind == ANNULUS_SHELL for v in part):
            return None
    return parts


def _evaluate(pad, U, parts):
    length = math.fsum(pad.circles[c].length for c in sorted(U))
    areas = [math.fsum(pad.components[v].area for v in sorted(p)) for p in parts]
    small = min(areas)
    return length / math.sqrt(small), small


def _usable(pad):
    return [cid for cid, _, _ in pad.adjacency if not pad.circles[cid].degenerate]


def hourglass_ratio(surface, pad: PADecomposition) -> HourglassResult:
    """Minimise over two-sided splits of the component graph.

    For a split of the nodes into two connected sides the cheapest system is
    the set of circles crossing between them, so it suffices to enumerate
    node bipartitions.
    """
    n = len(pad.components)
    best = HourglassResult(1.0, (), 0.0)
    if n < 2:
        return best
    usable = set(_usable(pad))
    cands = []
    for mask in range(1, 2 ** (n - 1)):
        left = {v for v in range(n) if (mask >> v) & 1}
        U = [cid for cid, a, b in pad.adjacency if (a in left) != (b in left)]
        if not U or any(c not in usable for c in U):
            continue
        parts = _admissible(pad, set(U))
        if parts is None:
            continue
        val, small = _evaluate(pad, U, parts)
        cands.append((val, tuple(sorted(U)), small, parts))
    return _pick(best, cands)


def hourglass_ratio_exhaustive(pad: PADecomposition) -> HourglassResult:
    """Reference value: enumerate every subset of level circles."""
    best = HourglassResult(1.0, (), 0.0)
    ids = _usable(pad)
    cands = []
    for r in range(1, len(ids) + 1):
        for U in itertools.combinations(ids, r):
            parts = _admissible(pad, set(U))
            if parts is None:
                continue
            val, small = _evaluate(pad, U, parts)
            cands.append((val, tuple(sorted(U)), small, parts))
    return _pick(best, cands)


def _pick(default, cands):
    if not cands:
        return default
    val, U, small, parts = min(cands, key=lambda c: (c[0], c[1]))
    if val >= 1.0:
        return default
    return HourglassResult(val, U, small, tuple(tuple(sorted(p)) for p in parts))


# --- thick-thin size estimates ---------------------------------------------------------------

@dataclass
class ComponentReport:
    index: int
    kind: str
    area: float
    size: float
    diameter: float
    boundary_length: float
    max_radius: float
    flags: list

    @property
    def diam_over_size(self):
        return self.diameter / self.size

    @property
    def area_over_size2(self):
        return self.area / self.size ** 2


def _piece_of(pad, t, z):
    for ci, comp in enumerate(pad.components):
        for pc in comp.pieces:
            if pc.t == t and _inside(pc.poly, z):
                return ci
    return -1


def _inside(P, z, tol=1e-12):
    n = len(P)
    return all(_cross(P[(k + 1) % n] - P[k], z - P[k]) >= -tol * max(1.0, abs(P[(k + 1) % n] - P[k]))
               for k in range(n))


def _loop_component(pad, loop):
    """Component containing a closed geodesic, or -1 if it crosses a circle."""
    tri = pad.tri
    comps = set()
    if loop.is_cylinder_core:
        pcs = loop.cylinder.pieces
    else:
        pcs = [pc for s in loop.segments for pc in s.pieces(tri)]
    for t, a, b in pcs:
        for f in (0.25, 0.5, 0.75):
            comps.add(_piece_of(pad, t, a + (b - a) * f))
    if len(comps) != 1:
        return -1
    return comps.pop()


def _peripheral(loop, annuli, tol=1e-6):
    """Loops built from connections parallel to an admitted cylinder and no
    longer than its circumference run along that cylinder's boundary."""
    if loop.is_cylinder_core:
        return False
    for c in annuli:
        ok = True
        for s in loop.segments:
            ang = math.atan2(s.holonomy.imag, s.holonomy.real) % math.pi
            dang = min(abs(ang - c.direction), math.pi - abs(ang - c.direction))
            if dang > tol or s.length > c.core_length * (1 + tol):
                ok = False
                break
        if ok:
            return True
    return False


def _component_diameter(pad, comp, subdiv=4):
    """Largest shortest-path distance between sample points of one component.

    Points are the piece vertices and edge subdivision points; within a convex
    piece points are joined by straight segments, and points on a shared
    triangle edge are identified with their copy across it.
    """
    tri = pad.tri
    keys = {}
    coords = []
    adj = []

    def node(t, z):
        k = (t, round(z.real, 10), round(z.imag, 10))
        if k not in keys:
            keys[k] = len(coords)
            coords.append((t, z))
            adj.append([])
        return keys[k]

    for pc in comp.pieces:
        P = pc.poly
        m = len(P)
        pts = []
        for q in range(m):
            for s in range(subdiv):
                pts.append(P[q] + (P[(q + 1) % m] - P[q]) * (s / subdiv))
        pts.append(sum(P) / m)
        ids = [node(pc.t, z) for z in pts]
        for i, j in itertools.combinations(range(len(ids)), 2):
            d = abs(pts[i] - pts[j])
            adj[ids[i]].append((ids[j], d))
            adj[ids[j]].append((ids[i], d))
    # identify copies across triangle edges
    for (t, z), i in list(zip(coords, range(len(coords)))):
        p = tri.pts[t]
        for e in range(3):
            A, B = p[e], p[(e + 1) % 3]
            if _on_line(A, B, z, 1e-10) and -1e-10 <= _edge_param(A, B, z) <= 1 + 1e-10:
                t2 = int(tri.nbr[t, e])
                z2 = tri.sgn[t, e] * (z - tri.shift[t, e])
                k = (t2, round(z2.real, 10), round(z2.imag, 10))
                j = keys.get(k)
                if j is not None and j != i:
                    adj[i].append((j, 0.0))
                    adj[j].append((i, 0.0))
    n = len(coords)
    diam = 0.0
    for s in range(n):
        dist = [math.inf] * n
        dist[s] = 0.0
        h = [(0.0, s)]
        while h:
            d, u = heapq.heappop(h)
            if d > dist[u]:
                continue
            for v, w in adj[u]:
                nd = d + w
                if nd < dist[v] - 1e-15:
                    dist[v] = nd
                    heapq.heappush(h, (nd, v))
        finite = [d for d in dist if math.isfinite(d)]
        diam = max(diam, max(finite))
    return diam


def verify_thick_thin(pad: PADecomposition, band=(0.5, 2.0), radius_samples: int = 8):
    """Per-component size estimates; flags ratios outside ``band``.  Read-only."""
    tri = pad.tri
    bound = math.sqrt(tri.area)
    loops = list(geodesic_loops(None, bound, tri=tri))
    scs = enumerate_saddle_connections(None, bound, oriented=True, tri=tri)
    for c in _cylinders_from(tri, scs, bound):
        loops.append(c.core())
    admitted_dirs = [(round(c.core_length, 9), round(c.direction, 6)) for c in pad.annuli]
    field_ = DistanceField(tri)
    reports = []
    for ci, comp in enumerate(pad.components):
        size = math.inf
        if comp.kind == CYLINDER_MIDDLE:
            size = pad.annuli[comp.annulus].core_length
        else:
            for lp in loops:
                if _peripheral(lp, pad.annuli):
                    continue
                if lp.is_cylinder_core and (round(lp.cylinder.core_length, 9),
                                            round(lp.cylinder.direction, 6)) in admitted_dirs:
                    continue
                if lp.length >= size:
                    continue
                if _loop_component(pad, lp) == ci:
                    size = lp.length
        if not math.isfinite(size):
            size = systole(None, tri=tri)[0]
        diam = _component_diameter(pad, comp)
        blen = math.fsum(pad.circles[cid].length for cid, a, b in pad.adjacency if ci in (a, b))
        pcs = sorted(comp.pieces, key=lambda p: -p.area)[:radius_samples]
        rmax = max(field_(pc.t, sum(pc.poly) / len(pc.poly)) for pc in pcs)
        flags = []
        for name, val in (("diam/size", diam / size), ("area/size^2", comp.area / size ** 2)):
            if comp.kind == THICK and not (band[0] <= val <= band[1]):
                flags.append(name)
        reports.append(ComponentReport(ci, comp.kind, comp.area, size, diam, blen, rmax, flags))
    return reports
