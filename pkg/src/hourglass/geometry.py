"""Metric objects of the flat metric: saddle connections, closed geodesics,
cylinders, expanding annuli and the embedded-disk radius field.

All searches run on the coarse Delaunay triangulation, whose vertices are
exactly the surface's singular and marked points.  Visibility is computed
with beams: families of rays unfolded triangle by triangle into a developed
plane.  A *wedge* is a fan of rays from a point; a *strip* is a family of
parallel rays leaving a segment perpendicularly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParams, BoundTooLarge, DegenerateCore, SearchBudgetExceeded
from .triangulation import Triangulation, VertexHit, _cross

EPS = 1e-10


def _dot(a: complex, b: complex) -> float:
    return a.real * b.real + a.imag * b.imag


def as_triangulation(obj, max_flips: int = 100000) -> Triangulation:
    """Delaunay triangulation of a surface, or the triangulation itself."""
    if isinstance(obj, Triangulation):
        return obj
    tri = obj.triangulation()
    tri.make_delaunay(max_flips=max_flips)
    return tri


class _Unbounded:
    """Tag for an infinite modulus.  Orders above every real, supports no arithmetic."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "MU_INF"

    def __gt__(self, other):
        return not isinstance(other, _Unbounded)

    def __ge__(self, other):
        return True

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return isinstance(other, _Unbounded)


MU_INF = _Unbounded()


# --- beams -------------------------------------------------------------------

class _Wedge:
    kind = "wedge"

    def __init__(self, P: complex, ref: complex):
        self.P, self.ref = P, ref / abs(ref)

    def param(self, z):
        w = (z - self.P) * self.ref.conjugate()
        return math.atan2(w.imag, w.real)

    def dist(self, z):
        return abs(z - self.P)

    def direction(self, p):
        return self.ref * complex(math.cos(p), math.sin(p))

    def exits(self, A, B):
        return _cross(B - A, self.P - A) > 1e-12 * abs(B - A) * (abs(self.P - A) + abs(B - A))

    def edge_lower(self, A, B, l, h):
        return _point_seg_dist(self.P, A, B)

    def point_at(self, A, B, p):
        return _ray_line(self.P, self.direction(p), A, B)


class _Strip:
    kind = "strip"

    def __init__(self, A: complex, e: complex, n: complex):
        self.A, self.e, self.n = A, e / abs(e), n / abs(n)

    def param(self, z):
        return _dot(z - self.A, self.e)

    def dist(self, z):
        return _dot(z - self.A, self.n)

    def direction(self, p):
        return self.n

    def exits(self, A, B):
        return _cross(B - A, self.n) < -1e-12 * abs(B - A)

    def point_at(self, A, B, p):
        pa, pb = self.param(A), self.param(B)
        if pb == pa:
            return A
        return A + (B - A) * (p - pa) / (pb - pa)

    def edge_lower(self, A, B, l, h):
        return min(self.dist(self.point_at(A, B, l)), self.dist(self.point_at(A, B, h)))


def _point_seg_dist(P, A, B):
    d = B - A
    L2 = abs(d) ** 2
    if L2 == 0:
        return abs(P - A)
    s = min(1.0, max(0.0, _dot(P - A, d) / L2))
    return abs(P - (A + s * d))


def _ray_line(O, d, A, B):
    den = _cross(d, B - A)
    if abs(den) < 1e-300:
        return A
    s = _cross(A - O, B - A) / den
    return O + s * d


@dataclass
class _Hit:
    dist: float
    kind: str          # "vertex" | "segment" | "point"
    t: int
    index: int         # corner for vertices, target index otherwise
    z: complex         # developed position
    sg: int
    sh: complex
    param: float
    tag: object = None
    same_side: bool = False


class _Search:
    """Depth-first beam propagation with a (possibly shrinking) distance bound."""

    def __init__(self, tri: Triangulation, bound: float, shrink: bool = False,
                 max_steps: int = 2_000_000, obstacles=None):
        self.tri, self.bound, self.shrink = tri, bound, shrink
        self.max_steps, self.steps = max_steps, 0
        self.hits: list[_Hit] = []
        self.seg_targets: dict = {}
        self.pt_targets: dict = {}
        self.obstacles = obstacles
        self.max_hits = None
        # vertices on the core: reaching them again means the level set closes up
        self.half_vertices = set()

    def _vertex_weight(self, t, j, d):
        return d / 2 if int(self.tri.vid[t, j]) in self.half_vertices else d

    def _record(self, h: _Hit, effective: float):
        if effective <= self.bound:
            self.hits.append(h)
            if self.shrink:
                self.bound = effective
            if self.max_hits is not None and len(self.hits) > self.max_hits:
                raise BoundTooLarge(f"more than {self.max_hits} hits")

    def run(self, beam, t, sg, sh, lo, hi, entry=None):
        tri = self.tri
        ptol = 1e-12 if beam.kind == "wedge" else 1e-12 * max(1.0, abs(hi - lo))
        stack = [(t, sg, sh, lo, hi, entry)]
        while stack:
            self.steps += 1
            if self.steps > self.max_steps:
                raise SearchBudgetExceeded("beam search exceeded its step budget")
            t, sg, sh, lo, hi, entry = stack.pop()
            D = sg * tri.pts[t] + sh
            for j in range(3):
                if entry is not None and j in (entry, (entry + 1) % 3):
                    continue
                pj = beam.param(D[j])
                if lo + ptol < pj < hi - ptol:
                    dj = beam.dist(D[j])
                    if dj > EPS:
                        self._record(_Hit(dj, "vertex", t, j, D[j], sg, sh, pj),
                                     self._vertex_weight(t, j, dj))
            for k, (z1, z2, tag) in enumerate(self.seg_targets.get(t, ())):
                self._segment(beam, t, sg, sh, lo, hi, k, sg * z1 + sh, sg * z2 + sh, tag)
            for k, (z, tag) in enumerate(self.pt_targets.get(t, ())):
                Z = sg * z + sh
                p = beam.param(Z)
                d = beam.dist(Z)
                if lo < p < hi and d > EPS:
                    self._record(_Hit(d, "point", t, k, Z, sg, sh, p, tag), d / 2)
            for e in range(3):
                if e == entry:
                    continue
                A, B = D[e], D[(e + 1) % 3]
                if not beam.exits(A, B):
                    continue
                pa, pb = beam.param(A), beam.param(B)
                if beam.kind == "wedge" and abs(pa - pb) > math.pi:
                    continue
                l, h = max(lo, min(pa, pb)), min(hi, max(pa, pb))
                if h - l <= ptol:
                    continue
                if beam.edge_lower(A, B, l, h) > self.bound:
                    continue
                t2, i2 = int(tri.nbr[t, e]), int(tri.nedge[t, e])
                stack.append((t2, sg * int(tri.sgn[t, e]), sg * tri.shift[t, e] + sh, l, h, i2))

    def _segment(self, beam, t, sg, sh, lo, hi, k, Z1, Z2, tag):
        p1, p2 = beam.param(Z1), beam.param(Z2)
        if beam.kind == "wedge" and abs(p1 - p2) > math.pi:
            return
        l, h = max(lo, min(p1, p2)), min(hi, max(p1, p2))
        if h < l:
            return
        if abs(p2 - p1) < 1e-15:
            pts = [Z1, Z2]
        else:
            pts = [beam.point_at(Z1, Z2, l), beam.point_at(Z1, Z2, h)]
        if beam.kind == "wedge":
            d = _point_seg_dist(beam.P, pts[0], pts[1])
            left = _cross(Z2 - Z1, beam.P - Z1) > 0
        else:
            d = min(beam.dist(pts[0]), beam.dist(pts[1]))
            left = _cross(Z2 - Z1, beam.n) < 0
        if d <= EPS:
            return
        same = bool(tag is not None and left == (tag[1] > 0))
        hit = _Hit(d, "segment", t, k, pts[0], sg, sh, l, tag, same)
        self._record(hit, d / 2 if same else d)


# --- cone coordinates ----------------------------------------------------------

class ConeFrame:
    """Cone-angle coordinates: every corner of the triangulation gets the
    angle, measured counterclockwise around its vertex, of its first edge."""

    def __init__(self, tri: Triangulation):
        self.tri = tri
        self.offset = {}
        self.corners = {}
        for v in range(tri.n_vertices):
            cs = tri.corners_around(v)
            self.corners[v] = cs
            for t, j, off in cs:
                self.offset[(t, j)] = off

    def angle_in_corner(self, t: int, j: int, d_local: complex) -> float:
        p = self.tri.pts[t]
        w = d_local / (p[(j + 1) % 3] - p[j])
        a = math.atan2(w.imag, w.real)
        return self.offset[(t, j)] + min(max(a, 0.0), self.tri.corner_angle(t, j))

    def wedge_seeds(self, v: int, a1: float, a2: float):
        """Corner-restricted wedges covering cone directions (a1, a2) around v,
        plus the triangulation edges leaving v strictly inside that range."""
        tri = self.tri
        total = float(tri.vertex_angle[v])
        seeds, edges = [], []
        span = a2 - a1
        if span <= 0:
            return seeds, edges
        for t, j, off in self.corners[v]:
            ang = tri.corner_angle(t, j)
            for shift in (-total, 0.0, total):
                lo = max(a1, off + shift)
                hi = min(a2, off + ang + shift)
                if hi - lo > 1e-13:
                    seeds.append((t, j, lo - off - shift, hi - off - shift))
                e = off + shift
                if a1 + 1e-13 < e < a2 - 1e-13:
                    edges.append((t, j))
        return seeds, edges

    def start_wedge(self, search: _Search, t: int, j: int, lo: float, hi: float):
        """Run a wedge from corner (t, j) over directions lo..hi measured from edge j."""
        p = self.tri.pts[t]
        P = p[j]
        u = (p[(j + 1) % 3] - P) / abs(p[(j + 1) % 3] - P)
        mid = 0.5 * (lo + hi)
        ref = u * complex(math.cos(mid), math.sin(mid))
        beam = _Wedge(P, ref)
        search.run(beam, t, 1, 0j, lo - mid, hi - mid, entry=None)
        return beam, mid


# --- saddle connections --------------------------------------------------------

@dataclass(frozen=True)
class SaddleConnection:
    start: int
    end: int
    holonomy: complex
    length: float
    start_angle: float
    end_angle: float
    corner: tuple            # (t, j) the connection leaves from
    direction: complex       # unit direction in that corner's chart

    def reversed(self, tri: Triangulation, frame: ConeFrame | None = None) -> "SaddleConnection":
        frame = frame or ConeFrame(tri)
        # find the corner at `end` containing end_angle
        t, j, d = tri.locate_from_vertex(self.end, self.end_angle)
        return SaddleConnection(self.end, self.start, -self.holonomy, self.length,
                                self.end_angle, self.start_angle, (t, j), d)

    def pieces(self, tri: Triangulation):
        """Per-triangle pieces (t, z_in, z_out) of the developed segment."""
        t, j = self.corner
        z0 = tri.pts[t, j]
        try:
            segs, _ = tri.walk(t, z0, self.direction, self.length * (1 - 1e-12), skip=((j - 1) % 3, j))
        except VertexHit as hit:
            if abs(hit.traveled - self.length) > 1e-9 * max(1.0, self.length):
                raise
            segs = _partial_segments(tri, t, z0, self.direction, self.length)
        out = [(s[0], s[1], s[2]) for s in segs]
        # extend the final piece to the endpoint
        tl, za, zb = out[-1]
        d = (zb - za) / abs(zb - za)
        rest = self.length - sum(abs(b - a) for _, a, b in out)
        out[-1] = (tl, za, zb + d * rest)
        return out


def _partial_segments(tri, t, z0, d, length):
    segs = []
    try:
        segs, _ = tri.walk(t, z0, d, length * (1 - 1e-9), skip=())
    except VertexHit:
        pass
    return segs


def enumerate_saddle_connections(surface, length_bound: float, oriented: bool = False,
                                 max_results: int = 100000, tri: Triangulation | None = None):
    """All saddle connections of length at most ``length_bound``.

    With ``oriented=False`` each connection appears once (up to reversal).
    """
    if not length_bound > 0:
        raise BadParams("length bound must be positive")
    tri = tri if tri is not None else as_triangulation(surface)
    frame = ConeFrame(tri)
    out = []
    sv = tri.is_surface_vertex
    for t in range(tri.n_triangles):
        for j in range(3):
            v = int(tri.vid[t, j])
            if not sv[v]:
                continue
            p = tri.pts[t]
            # the triangulation edge leaving this corner
            e = p[(j + 1) % 3] - p[j]
            w = int(tri.vid[t, (j + 1) % 3])
            if sv[w] and abs(e) <= length_bound:
                k = (j + 1) % 3
                back = frame.offset[(t, k)] + tri.corner_angle(t, k)
                out.append(SaddleConnection(v, w, e, abs(e), frame.offset[(t, j)],
                                            back % tri.vertex_angle[w], (t, j), e / abs(e)))
            search = _Search(tri, length_bound)
            search.max_hits = max_results
            ang = tri.corner_angle(t, j)
            beam, mid = frame.start_wedge(search, t, j, 0.0, ang)
            u = e / abs(e)
            for h in search.hits:
                if not sv[tri.vid[h.t, h.index]]:
                    continue
                hol = h.z - p[j]
                d_back = (p[j] - h.z) / h.sg
                out.append(SaddleConnection(
                    v, int(tri.vid[h.t, h.index]), hol, abs(hol),
                    frame.offset[(t, j)] + mid + h.param,
                    frame.angle_in_corner(h.t, h.index, d_back),
                    (t, j), hol / abs(hol)))
            if len(out) > max_results:
                raise BoundTooLarge(f"more than {max_results} saddle connections")
    out.sort(key=lambda s: (round(s.length, 9), s.start, round(s.start_angle, 9)))
    if oriented:
        return out
    keep = []
    for s in out:
        if (s.start, round(s.start_angle, 8)) <= (s.end, round(s.end_angle, 8)):
            keep.append(s)
    return keep


# --- closed geodesics ---------------------------------------------------------------

@dataclass
class GeodesicLoop:
    segments: tuple
    length: float
    is_cylinder_core: bool = False
    cylinder: "FlatCylinder | None" = None

    def joint_angles(self, tri: Triangulation):
        """(left, right) angle at each joint between consecutive connections."""
        out = []
        n = len(self.segments)
        for k in range(n):
            a, b = self.segments[k], self.segments[(k + 1) % n]
            total = float(tri.vertex_angle[a.end])
            left = (a.end_angle - b.start_angle) % total
            out.append((left, total - left))
        return out

    def is_geodesic(self, tri: Triangulation, tol: float = 1e-7) -> bool:
        if self.is_cylinder_core:
            return True
        n = len(self.segments)
        for k in range(n):
            if self.segments[k].end != self.segments[(k + 1) % n].start:
                return False
        return all(l >= math.pi - tol and r >= math.pi - tol for l, r in self.joint_angles(tri))


def _loops_from(scs, tri, bound):
    loops = []
    for s in scs:
        if s.start == s.end and s.length <= bound:
            lp = GeodesicLoop((s,), s.length)
            if lp.is_geodesic(tri):
                loops.append(lp)
    by_start = {}
    for s in scs:
        by_start.setdefault(s.start, []).append(s)
    seen = set()
    for s in scs:
        ks = (s.start, round(s.start_angle, 8))
        for r in by_start.get(s.end, ()):
            if r.end != s.start or s.length + r.length > bound:
                continue
            kr = (r.start, round(r.start_angle, 8))
            if kr == ks or kr == (s.end, round(s.end_angle, 8)):
                continue
            key = frozenset((ks, kr))
            if key in seen:
                continue
            lp = GeodesicLoop((s, r), s.length + r.length)
            if lp.is_geodesic(tri):
                seen.add(key)
                loops.append(lp)
    return loops


def geodesic_loops(surface, bound: float, tri: Triangulation | None = None):
    """Closed geodesics of length ≤ bound made of one or two saddle connections."""
    tri = tri if tri is not None else as_triangulation(surface)
    scs = enumerate_saddle_connections(None, bound, oriented=True, tri=tri)
    return _loops_from(scs, tri, bound)


def systole(surface, start_bound: float | None = None, max_rounds: int = 12,
            tri: Triangulation | None = None):
    """Length of the shortest essential closed geodesic and a witness loop.

    The search bound doubles until the best candidate is no longer than the
    bound, so the returned length is the global minimum over the candidates.
    """
    tri = tri if tri is not None else as_triangulation(surface)
    b = start_bound or 0.5 * math.sqrt(tri.area)
    for _ in range(max_rounds):
        scs = enumerate_saddle_connections(None, b, oriented=True, tri=tri)
        cands = _loops_from(scs, tri, b)
        for cyl in _cylinders_from(tri, scs, b):
            cands.append(GeodesicLoop((), cyl.core_length, True, cyl))
        if cands:
            best = min(cands, key=lambda c: (round(c.length, 12), c.is_cylinder_core))
            if best.length <= b:
                return best.length, best
        b *= 2
    raise SearchBudgetExceeded("systole search did not terminate")


# --- cylinders ------------------------------------------------------------------

@dataclass
class FlatCylinder:
    core_length: float
    width: float
    modulus: float
    direction: float
    pieces: list = field(repr=False, default_factory=list)   # mid-height leaf (t, z_in, z_out)

    @property
    def area(self) -> float:
        return self.core_length * self.width

    def core(self) -> GeodesicLoop:
        return GeodesicLoop((), self.core_length, True, self)

    def sample(self, tri: Triangulation, rng, n: int):
        """Random points (t, z) strictly inside the cylinder, with their heights."""
        lens = np.array([abs(b - a) for _, a, b in self.pieces])
        cum = np.cumsum(lens) / lens.sum()
        out = []
        for _ in range(n):
            k = int(np.searchsorted(cum, rng.random()))
            t, a, b = self.pieces[min(k, len(self.pieces) - 1)]
            z = a + (b - a) * rng.uniform(0.05, 0.95)
            y = rng.uniform(-0.49, 0.49) * self.width
            d = (b - a) / abs(b - a) * 1j * (1 if y >= 0 else -1)
            if abs(y) < 1e-12:
                out.append((t, z, y))
                continue
            try:
                _, (t2, z2, _) = tri.walk(t, z, d, abs(y))
            except VertexHit:
                continue
            out.append((t2, z2, y))
        return out


def _step(tri, t, z, d, skip):
    p = tri.pts[t]
    best, best_e = math.inf, -1
    for e in range(3):
        if e == skip:
            continue
        A, B = p[e], p[(e + 1) % 3]
        den = _cross(d, B - A)
        if den <= 0:
            continue
        s = _cross(A - z, B - A) / den
        u = _cross(A - z, d) / den
        if -1e-9 * abs(B - A) < s < best and -1e-9 <= u <= 1 + 1e-9:
            best, best_e = s, e
    return best, best_e


def closed_leaf(tri: Triangulation, t0: int, z0: complex, d0: complex, max_len: float,
                tol: float = 1e-9):
    """Follow the leaf from (t0, z0) in direction d0; return its pieces if it
    closes up within ``max_len``, else None.  Raises VertexHit on a vertex."""
    d0 = d0 / abs(d0)
    t, z, d, skip = t0, z0, d0, -1
    pieces, traveled = [], 0.0
    first = True
    while traveled <= max_len + tol:
        s, e = _step(tri, t, z, d, skip)
        if e < 0:
            return None
        if not first and t == t0 and abs(d - d0) < 1e-8:
            off = _cross(d0, z - z0)
            along = _dot(d0, z0 - z)
            if abs(off) < tol * max(1.0, abs(z0)) and -tol <= along <= s + tol:
                # merge the closing piece with the opening one
                _, _, z_first_out = pieces[0]
                pieces[0] = (t, z, z_first_out)
                return pieces
        first = False
        zout = z + d * s
        p = tri.pts[t]
        A, B = p[e], p[(e + 1) % 3]
        for V in (A, B):
            if abs(zout - V) <= 1e-12 * max(1.0, abs(B - A)):
                raise VertexHit(t, e, zout, traveled + s)
        pieces.append((t, z, zout))
        traveled += s
        t, skip, z, d = tri.cross_edge(t, e, zout, d)
    return None


def _leaf_heights(tri, pieces):
    top, bot = math.inf, -math.inf
    for t, a, b in pieces:
        u = (b - a) / abs(b - a) if abs(b - a) > 0 else None
        if u is None:
            continue
        for j in range(3):
            h = _cross(u, tri.pts[t, j] - a)
            if h > 1e-13:
                top = min(top, h)
            elif h < -1e-13:
                bot = max(bot, h)
    return top, bot


def _offset_point(tri, t, z, d, h):
    """Point at signed perpendicular distance h (left positive) from (t, z)."""
    if abs(h) < 1e-15:
        return t, z, d
    nrm = d * (1j if h > 0 else -1j)
    _, (t2, z2, n2) = tri.walk(t, z, nrm, abs(h))
    return t2, z2, n2 / (1j if h > 0 else -1j)


def _leaf_key(tri, pieces):
    keys = []
    for t, a, b in pieces:
        u = (b - a) / abs(b - a)
        if u.real < -1e-12 or (abs(u.real) <= 1e-12 and u.imag < 0):
            u = -u
        c = _cross(u, a - tri.pts[t, 0])
        keys.append((t, round(math.atan2(u.imag, u.real), 6), round(c, 6)))
    return frozenset(keys)


def _cylinders_from(tri, scs, max_core, min_modulus=0.0):
    found = {}
    for s in scs:
        if s.length > max_core * (1 + 1e-9):
            continue
        t, j = s.corner
        try:
            _, (tm, zm, dm) = tri.walk(t, tri.pts[t, j], s.direction, s.length / 2,
                                       skip=((j - 1) % 3, j))
        except VertexHit:
            continue
        eps = 1e-7 * s.length
        for side in (1, -1):
            try:
                t1, z1, d1 = _offset_point(tri, tm, zm, dm, side * eps)
                pcs = closed_leaf(tri, t1, z1, d1, max_core)
                if pcs is None:
                    continue
                top, bot = _leaf_heights(tri, pcs)
                if not (math.isfinite(top) and math.isfinite(bot)):
                    continue
                c = 0.5 * (top + bot)
                t2, z2, d2 = _offset_point(tri, t1, z1, d1, c)
                mid = closed_leaf(tri, t2, z2, d2, max_core)
            except VertexHit:
                continue
            if mid is None:
                continue
            ell = sum(abs(b - a) for _, a, b in mid)
            width = top - bot
            if width / ell < min_modulus:
                continue
            key = _leaf_key(tri, mid)
            if key in found:
                continue
            u = d2 / abs(d2)
            ang = math.atan2(u.imag, u.real) % math.pi
            found[key] = FlatCylinder(ell, width, width / ell, ang, mid)
    return sorted(found.values(), key=lambda c: (round(c.core_length, 9), round(c.direction, 9)))


def find_cylinders(surface, min_modulus: float = 0.0, max_core: float | None = None,
                   tri: Triangulation | None = None):
    """Maximal cylinders of modulus ≥ min_modulus.

    A cylinder of modulus m and circumference l has area m·l², so
    l ≤ sqrt(area / m) bounds the search when ``max_core`` is not given.
    """
    if min_modulus < 0:
        raise BadParams("min_modulus must be non-negative")
    tri = tri if tri is not None else as_triangulation(surface)
    if max_core is None:
        if min_modulus <= 0:
            raise BadParams("give max_core when min_modulus is 0")
        max_core = math.sqrt(tri.area / min_modulus)
    scs = enumerate_saddle_connections(None, max_core, oriented=True, tri=tri)
    return _cylinders_from(tri, scs, max_core, min_modulus)


# --- expanding annuli ------------------------------------------------------------------

@dataclass
class ExpandingAnnulus:
    core: object
    side: int
    inner_length: float
    outer_length: float
    width: float
    mu: object            # float, or MU_INF for a point core
    growth: float         # d(length)/dr

    @property
    def is_point_core(self) -> bool:
        return self.mu is MU_INF

    def level_length(self, r: float) -> float:
        return self.inner_length + self.growth * r

    def mu_at(self, r: float):
        if self.is_point_core:
            return MU_INF
        return math.log(self.level_length(r) / self.inner_length)

    def area(self, r0: float = 0.0, r1: float | None = None) -> float:
        r1 = self.width if r1 is None else r1
        return self.inner_length * (r1 - r0) + 0.5 * self.growth * (r1 * r1 - r0 * r0)

    def radius_at_length(self, length: float) -> float:
        return (length - self.inner_length) / self.growth


def _core_targets(tri, loop, side):
    targets = {}
    pieces = []
    for k, s in enumerate(loop.segments):
        for t, a, b in s.pieces(tri):
            pieces.append((t, a, b))
            targets.setdefault(t, []).append((a, b, (k, side)))
            # pieces lying on a triangle edge are visible from the neighbour too
            for e in range(3):
                A, B = tri.pts[t, e], tri.pts[t, (e + 1) % 3]
                if abs(_cross(B - A, a - A)) < 1e-12 * abs(B - A) ** 2 and \
                        abs(_cross(B - A, b - A)) < 1e-12 * abs(B - A) ** 2:
                    t2 = int(tri.nbr[t, e])
                    sg, sh = tri.sgn[t, e], tri.shift[t, e]
                    targets.setdefault(t2, []).append((sg * (a - sh), sg * (b - sh), (k, side)))
    return pieces, targets


def expanding_annulus(surface, core, side: int = 1, tri: Triangulation | None = None,
                      tol: float = 1e-7) -> ExpandingAnnulus:
    """Grow equidistant level sets from ``core`` on ``side`` (+1 left, -1 right).

    ``core`` is a vertex index of the triangulation (point core) or a
    GeodesicLoop of saddle connections.  Growth stops at the first radius at
    which the level set meets a singularity or itself.
    """
    tri = tri if tri is not None else as_triangulation(surface)
    frame = ConeFrame(tri)
    if isinstance(core, (int, np.integer)):
        v = int(core)
        search = _Search(tri, math.inf, shrink=True)
        search.half_vertices = {v}
        total = float(tri.vertex_angle[v])
        seeds, edges = frame.wedge_seeds(v, 0.0, total)
        _point_core_edges(tri, search, frame, v, total)
        for t, j, lo, hi in seeds:
            frame.start_wedge(search, t, j, lo, hi)
        R = _radius_from_hits(tri, search.hits, {v})
        return ExpandingAnnulus(v, side, 0.0, total * R, R, MU_INF, total)
    if isinstance(core, FlatCylinder):
        core = core.core()
    if not isinstance(core, GeodesicLoop) or core.is_cylinder_core:
        return _cylinder_core_annulus(tri, core, side)
    if not core.is_geodesic(tri, tol):
        raise DegenerateCore("core is not a closed geodesic")
    segs = core.segments
    core_vertices = {s.start for s in segs}
    search = _Search(tri, math.inf, shrink=True)
    search.half_vertices = core_vertices
    pieces, targets = _core_targets(tri, core, side)
    search.seg_targets = targets
    for t, a, b in pieces:
        u = (b - a) / abs(b - a)
        nrm = u * 1j * side
        entry = None
        for e in range(3):
            A, B = tri.pts[t, e], tri.pts[t, (e + 1) % 3]
            if abs(_cross(B - A, a - A)) < 1e-12 * abs(B - A) ** 2 and \
                    abs(_cross(B - A, b - A)) < 1e-12 * abs(B - A) ** 2:
                entry = e
        tt, sg, sh = t, 1, 0j
        if entry is not None and side * _cross(tri.pts[t, (entry + 1) % 3] - tri.pts[t, entry], u) < 0:
            # the requested side lies in the neighbouring triangle
            tt = int(tri.nbr[t, entry])
            sg, sh = int(tri.sgn[t, entry]), tri.shift[t, entry]
            entry = int(tri.nedge[t, entry])
            a2, b2 = sg * (a - sh), sg * (b - sh)
            beam = _Strip(a2, b2 - a2, sg * nrm)
            search.run(beam, tt, 1, 0j, 0.0, abs(b - a), entry=entry)
            continue
        beam = _Strip(a, b - a, nrm)
        search.run(beam, t, 1, 0j, 0.0, abs(b - a), entry=entry)
    growth = 0.0
    n = len(segs)
    for k in range(n):
        a_in, b_out = segs[k], segs[(k + 1) % n]
        v = a_in.end
        total = float(tri.vertex_angle[v])
        left = (a_in.end_angle - b_out.start_angle) % total
        if side > 0:
            lo, hi = b_out.start_angle + math.pi / 2, b_out.start_angle + left - math.pi / 2
            growth += left - math.pi
        else:
            lo, hi = a_in.end_angle + math.pi / 2, a_in.end_angle + (total - left) - math.pi / 2
            growth += total - left - math.pi
        if hi - lo > 1e-12:
            seeds, edges = frame.wedge_seeds(v, lo, hi)
            for t, j in edges:
                _edge_hit(tri, search, t, j)
            for t, j, l2, h2 in seeds:
                frame.start_wedge(search, t, j, l2, h2)
    R = _radius_from_hits(tri, search.hits, core_vertices)
    inner = core.length
    outer = inner + growth * R
    return ExpandingAnnulus(core, side, inner, outer, R, math.log(outer / inner), growth)


def _edge_hit(tri, search, t, j):
    p = tri.pts[t]
    d = abs(p[(j + 1) % 3] - p[j])
    search._record(_Hit(d, "vertex", t, (j + 1) % 3, p[(j + 1) % 3], 1, 0j, 0.0),
                   search._vertex_weight(t, (j + 1) % 3, d))


def _point_core_edges(tri, search, frame, v, total):
    for t, j, off in frame.corners[v]:
        _edge_hit(tri, search, t, j)


def _radius_from_hits(tri, hits, core_vertices):
    R = math.inf
    for h in hits:
        if h.kind == "vertex":
            w = int(tri.vid[h.t, h.index])
            r = h.dist / 2 if w in core_vertices else h.dist
        elif h.kind == "segment":
            r = h.dist / 2 if h.same_side else h.dist
        else:
            r = h.dist / 2
        R = min(R, r)
    if not math.isfinite(R):
        raise SearchBudgetExceeded("annulus growth found no obstruction")
    return R


def _cylinder_core_annulus(tri, core, side):
    cyl = core.cylinder
    return ExpandingAnnulus(core, side, cyl.core_length, cyl.core_length, cyl.width / 2, 0.0, 0.0)


# --- distance to the singular set ----------------------------------------------------------

class DistanceField:
    """r(x) = min(distance to the singular set, half the shortest loop through x).

    Points are given as (triangle, local chart coordinate) on the coarse
    Delaunay triangulation.
    """

    def __init__(self, tri: Triangulation):
        self.tri = tri

    def _search(self, t, z, loops: bool):
        tri = self.tri
        search = _Search(tri, math.inf, shrink=True)
        if loops:
            search.pt_targets = _all_copies_target(tri, t, z)
        p = tri.pts[t]
        for e in range(3):
            A, B = p[e], p[(e + 1) % 3]
            if _cross(B - A, z - A) <= 1e-15:
                continue
            mid = 0.5 * (A + B)
            beam = _Wedge(z, mid - z)
            pa, pb = beam.param(A), beam.param(B)
            search.run(beam, t, 1, 0j, min(pa, pb), max(pa, pb), entry=None)
            # rays exactly through the triangle's own vertices
        for j in range(3):
            search._record(_Hit(abs(p[j] - z), "vertex", t, j, p[j], 1, 0j, 0.0), abs(p[j] - z))
        return search

    def singular_distance(self, t: int, z: complex) -> float:
        s = self._search(t, z, loops=False)
        return min(h.dist for h in s.hits if h.kind == "vertex")

    def __call__(self, t: int, z: complex) -> float:
        tri = self.tri
        p = tri.pts[t]
        for j in range(3):
            if abs(p[j] - z) < 1e-14:
                return 0.0
        s = self._search(t, z, loops=True)
        r = math.inf
        for h in s.hits:
            r = min(r, h.dist if h.kind == "vertex" else h.dist / 2)
        return r


def _all_copies_target(tri, t, z):
    return {t: [(z, "self")]}


def distance_field(surface) -> DistanceField:
    return DistanceField(as_triangulation(surface))


def locate_point(tri: Triangulation, point, polygon: int):
    """Find (t, z) for a point given in the chart of polygon ``polygon``.

    Falls back to walking from a triangle that still carries the polygon
    chart when flips have moved the point into a mixed-chart triangle
    (the polygon must be star-shaped with respect to that triangle).
    """
    z = point if isinstance(point, complex) else complex(*point)
    own = [t for t in range(tri.n_triangles) if tri.origin[t] == polygon]
    for t in own:
        if tri.locate(t, z, tol=1e-12):
            return t, z
    for t in own:
        z0 = complex(tri.pts[t].mean())
        if abs(z - z0) < 1e-15:
            return t, z0
        try:
            _, (t2, z2, _) = tri.walk(t, z0, z - z0, abs(z - z0))
        except VertexHit:
            continue
        return t2, z2
    raise BadParams("point not found in the triangulation charts")
