"""Triangulated half-translation surfaces.

Every triangle lives in its own flat chart (three complex vertex positions,
counterclockwise).  Edge ``i`` of triangle ``t`` runs from vertex ``i`` to
vertex ``i+1`` and is glued to edge ``nedge[t, i]`` of ``nbr[t, i]``; the map
from the neighbour's chart to ours is ``z -> sgn[t, i] * z + shift[t, i]``.

1-cochains are stored per half-edge as ``(T, 3)`` float arrays, antisymmetric
across each glued pair.  Edge flips transport closed cochains exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FlipLimitExceeded, HourglassError, NonSimplePolygon

ANGLE_TOL = 1e-10


class VertexHit(HourglassError):
    """A straight-line walk ran into a vertex."""

    def __init__(self, tri, corner, z, traveled):
        super().__init__(f"walk hit vertex at corner {corner} of triangle {tri}")
        self.tri, self.corner, self.z, self.traveled = tri, corner, z, traveled


def _cross(a: complex, b: complex) -> float:
    return a.real * b.imag - a.imag * b.real


def _ear_clip(pts: list[complex]) -> list[tuple[int, int, int]]:
    """Triangulate a simple counterclockwise polygon; returns index triples."""
    idx = list(range(len(pts)))
    scale = max(abs(p - pts[0]) for p in pts) or 1.0
    eps = 1e-12 * scale * scale
    out = []
    while len(idx) > 3:
        best, best_q = None, -1.0
        n = len(idx)
        for k in range(n):
            a, b, c = idx[k - 1], idx[k], idx[(k + 1) % n]
            pa, pb, pc = pts[a], pts[b], pts[c]
            if _cross(pb - pa, pc - pb) <= eps:
                continue
            inside = False
            for m in idx:
                if m in (a, b, c):
                    continue
                p = pts[m]
                if (_cross(pb - pa, p - pa) >= -eps and _cross(pc - pb, p - pb) >= -eps
                        and _cross(pa - pc, p - pc) >= -eps):
                    inside = True
                    break
            if inside:
                continue
            q = min(_tri_angles(pa, pb, pc))
            if q > best_q + 1e-12:
                best, best_q = k, q
        if best is None:
            raise NonSimplePolygon("ear clipping failed")
        k = best
        out.append((idx[k - 1], idx[k], idx[(k + 1) % n]))
        del idx[k]
    out.append(tuple(idx))
    return out


def _tri_angles(a: complex, b: complex, c: complex):
    def ang(p, q, r):
        u, w = q - p, r - p
        return abs(math.atan2(_cross(u, w), (u.conjugate() * w).real))
    return ang(a, b, c), ang(b, c, a), ang(c, a, b)


class Triangulation:
    def __init__(self, pts, nbr, nedge, origin=None, surface_vertex=None):
        self.pts = np.asarray(pts, dtype=complex).reshape(-1, 3).copy()
        T = len(self.pts)
        self.nbr = np.asarray(nbr, dtype=int).reshape(T, 3).copy()
        self.nedge = np.asarray(nedge, dtype=int).reshape(T, 3).copy()
        self.sgn = np.ones((T, 3), dtype=int)
        self.shift = np.zeros((T, 3), dtype=complex)
        self.origin = np.full(T, -1, dtype=int) if origin is None else np.asarray(origin, int).copy()
        for t in range(T):
            for i in range(3):
                self._set_map(t, i)
        self._surface_vertex_corners = surface_vertex
        self.n_flips = 0
        self.rebuild_vertices(surface_vertex)

    # -- construction --------------------------------------------------------
    @classmethod
    def from_surface(cls, surface) -> "Triangulation":
        pts, origin = [], []
        label_of = {}  # (poly, edge) -> (tri, i)
        diag = []
        corner_src = []  # (tri, j) -> (poly, vertex)
        for p, poly in enumerate(surface.polygons):
            cp = [complex(float(x), float(y)) for x, y in poly]
            n = len(cp)
            tris = _ear_clip(cp)
            # chain-edge label: ordered vertex pair -> owner
            chain = {}
            for e in range(n):
                chain[(e, (e + 1) % n)] = ("poly", p, e)
            for (a, b, c) in tris:
                t = len(pts)
                pts.append([cp[a], cp[b], cp[c]])
                origin.append(p)
                corner_src.append([(p, a), (p, b), (p, c)])
                for i, (u, v) in enumerate(((a, b), (b, c), (c, a))):
                    lab = chain.pop((u, v), None)
                    if lab is None:
                        chain[(v, u)] = ("diag", t, i)
                    elif lab[0] == "poly":
                        label_of[(lab[1], lab[2])] = (t, i)
                    else:
                        diag.append(((t, i), (lab[1], lab[2])))
        T = len(pts)
        nbr = np.full((T, 3), -1, dtype=int)
        nedge = np.full((T, 3), -1, dtype=int)

        def link(x, y):
            nbr[x], nedge[x] = y
            nbr[y], nedge[y] = x

        for x, y in diag:
            link(x, y)
        for g in surface.gluings:
            link(label_of[g.edge_a], label_of[g.edge_b])
        sv = {}
        for t in range(T):
            for j in range(3):
                sv[(t, j)] = surface.vertex_class_of[corner_src[t][j]]
        tri = cls(pts, nbr, nedge, origin=origin, surface_vertex=sv)
        tri.surface = surface
        return tri

    def copy(self) -> "Triangulation":
        new = object.__new__(Triangulation)
        for k, v in self.__dict__.items():
            new.__dict__[k] = v.copy() if isinstance(v, (np.ndarray, dict, list)) else v
        return new

    def _set_map(self, t: int, i: int) -> None:
        t2, i2 = self.nbr[t, i], self.nedge[t, i]
        P, Q = self.pts[t, i], self.pts[t, (i + 1) % 3]
        P2, Q2 = self.pts[t2, i2], self.pts[t2, (i2 + 1) % 3]
        # P <-> Q2, Q <-> P2
        d = Q2 - P2
        s = (P - Q) / d
        sg = 1 if s.real > 0 else -1
        self.sgn[t, i] = sg
        self.shift[t, i] = P - sg * Q2

    def rebuild_vertices(self, surface_vertex=None) -> None:
        """Recompute vertex ids from corner identifications."""
        T = len(self.pts)
        parent = list(range(3 * T))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for t in range(T):
            for i in range(3):
                t2, i2 = self.nbr[t, i], self.nedge[t, i]
                for a, b in ((3 * t + i, 3 * t2 + (i2 + 1) % 3), (3 * t + (i + 1) % 3, 3 * t2 + i2)):
                    ra, rb = find(a), find(b)
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)
        roots = {}
        vid = np.empty((T, 3), dtype=int)
        for c in range(3 * T):
            r = find(c)
            if r not in roots:
                roots[r] = len(roots)
            vid[c // 3, c % 3] = roots[r]
        self.vid = vid
        nv = len(roots)
        ang = np.zeros(nv)
        for t in range(T):
            a = _tri_angles(*self.pts[t])
            for j in range(3):
                ang[vid[t, j]] += a[j]
        self.vertex_angle = ang
        self.vertex_order = np.rint(ang / math.pi).astype(int) - 2
        if surface_vertex is not None:
            is_sv = np.zeros(nv, dtype=bool)
            cls_of = np.full(nv, -1, dtype=int)
            for (t, j), k in surface_vertex.items():
                is_sv[vid[t, j]] = True
                cls_of[vid[t, j]] = k
            self.is_surface_vertex = is_sv
            self.surface_class = cls_of
        elif not hasattr(self, "is_surface_vertex") or len(self.is_surface_vertex) != nv:
            self.is_surface_vertex = np.ones(nv, dtype=bool)
            self.surface_class = np.arange(nv)

    # -- basic geometry -----------------------------------------------------
    @property
    def n_triangles(self) -> int:
        return len(self.pts)

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_angle)

    def triangle_areas(self) -> np.ndarray:
        a, b, c = self.pts[:, 0], self.pts[:, 1], self.pts[:, 2]
        return 0.5 * ((b - a).conjugate() * (c - a)).imag

    @property
    def area(self) -> float:
        return float(self.triangle_areas().sum())

    def centroids(self) -> np.ndarray:
        return self.pts.mean(axis=1)

    def edge_vectors(self) -> np.ndarray:
        return np.roll(self.pts, -1, axis=1) - self.pts

    def corner_angle(self, t: int, j: int) -> float:
        return _tri_angles(*self.pts[t])[j]

    def singular_vertices(self) -> np.ndarray:
        """Surface vertices (cone points and marked points)."""
        return np.nonzero(self.is_surface_vertex)[0]

    def edges(self):
        """One representative half-edge per edge, plus index and orientation maps."""
        T = self.n_triangles
        eid = np.full((T, 3), -1, dtype=int)
        eor = np.zeros((T, 3), dtype=int)
        reps = []
        for t in range(T):
            for i in range(3):
                if eid[t, i] >= 0:
                    continue
                t2, i2 = self.nbr[t, i], self.nedge[t, i]
                k = len(reps)
                reps.append((t, i))
                eid[t, i], eor[t, i] = k, 1
                eid[t2, i2], eor[t2, i2] = k, -1
        return reps, eid, eor

    # -- corners around a vertex ------------------------------------------
    def next_corner_ccw(self, t: int, j: int) -> tuple[int, int]:
        e = (j - 1) % 3
        return int(self.nbr[t, e]), int(self.nedge[t, e])

    def corners_around(self, v: int):
        """Corners at vertex ``v`` in counterclockwise order with angle offsets."""
        where = np.argwhere(self.vid == v)
        t, j = int(where[0][0]), int(where[0][1])
        out, off = [], 0.0
        start = (t, j)
        while True:
            out.append((t, j, off))
            off += self.corner_angle(t, j)
            t, j = self.next_corner_ccw(t, j)
            if (t, j) == start:
                break
            if len(out) > 3 * self.n_triangles:
                raise HourglassError("corner cycle did not close")
        return out

    # -- flips -------------------------------------------------------------
    def _outer_links(self, labels):
        return {L: (int(self.nbr[L]), int(self.nedge[L])) for L in labels}

    def flip(self, t: int, i: int, cochains=()) -> bool:
        t2, i2 = int(self.nbr[t, i]), int(self.nedge[t, i])
        if t2 == t:
            return False
        a, b, c = self.pts[t, i], self.pts[t, (i + 1) % 3], self.pts[t, (i + 2) % 3]
        sg, sh = self.sgn[t, i], self.shift[t, i]
        d = sg * self.pts[t2, (i2 + 2) % 3] + sh
        # strict convexity of quad a, d, b, c
        for p, q, r in ((a, d, b), (d, b, c), (b, c, a), (c, a, d)):
            if _cross(q - p, r - q) <= 1e-14 * abs(b - a) ** 2:
                return False
        va, vb, vc = self.vid[t, i], self.vid[t, (i + 1) % 3], self.vid[t, (i + 2) % 3]
        vd = self.vid[t2, (i2 + 2) % 3]
        old = {(t, (i + 1) % 3): (t2, 1), (t, (i + 2) % 3): (t, 2),
               (t2, (i2 + 1) % 3): (t, 0), (t2, (i2 + 2) % 3): (t2, 0)}
        links = self._outer_links(list(old))
        vals = []
        for ch in cochains:
            e_ad = ch[t2, (i2 + 1) % 3]
            e_db = ch[t2, (i2 + 2) % 3]
            e_bc = ch[t, (i + 1) % 3]
            e_ca = ch[t, (i + 2) % 3]
            vals.append((e_ad, e_db, e_bc, e_ca))
        self.pts[t] = [a, d, c]
        self.pts[t2] = [d, b, c]
        self.vid[t] = [va, vd, vc]
        self.vid[t2] = [vd, vb, vc]
        # both new triangles use t's chart; it is still a polygon chart only
        # when the old diagonal was internal to one polygon
        same = (self.origin[t] == self.origin[t2] and sg == 1 and abs(sh) < 1e-12)
        self.origin[t2] = self.origin[t] if same else -1
        if not same:
            self.origin[t] = -1
        for L, (P, Pe) in links.items():
            newL = old[L]
            newP = old.get((P, Pe), (P, Pe))
            self.nbr[newL], self.nedge[newL] = newP
            self.nbr[newP], self.nedge[newP] = newL
        self.nbr[t, 1], self.nedge[t, 1] = t2, 2
        self.nbr[t2, 2], self.nedge[t2, 2] = t, 1
        touched = {(t, 0), (t, 1), (t, 2), (t2, 0), (t2, 1), (t2, 2)}
        for L in list(touched):
            touched.add((int(self.nbr[L]), int(self.nedge[L])))
        for (x, y) in touched:
            self._set_map(x, y)
        for ch, (e_ad, e_db, e_bc, e_ca) in zip(cochains, vals):
            e_dc = -e_ad - e_ca
            ch[t] = [e_ad, e_dc, e_ca]
            ch[t2] = [e_db, e_bc, -e_dc]
        self.n_flips += 1
        return True

    def opposite_angle_sum(self, t: int, i: int) -> float:
        t2, i2 = self.nbr[t, i], self.nedge[t, i]
        return self.corner_angle(t, (i + 2) % 3) + self.corner_angle(t2, (i2 + 2) % 3)

    def is_delaunay(self, tol: float = 1e-9) -> bool:
        return all(self.opposite_angle_sum(t, i) <= math.pi + tol
                   for t in range(self.n_triangles) for i in range(3))

    def make_delaunay(self, max_flips: int = 100000, cochains=(), tol: float = 1e-9) -> int:
        """Flip until every edge is locally Delaunay; returns the flip count."""
        flips = 0
        stack = [(t, i) for t in range(self.n_triangles) for i in range(3)]
        while stack:
            t, i = stack.pop()
            if self.opposite_angle_sum(t, i) <= math.pi + tol:
                continue
            if flips >= max_flips:
                raise FlipLimitExceeded(f"more than {max_flips} flips")
            t2 = int(self.nbr[t, i])
            if self.flip(t, i, cochains):
                flips += 1
                for x in (t, t2):
                    for k in range(3):
                        stack.append((x, k))
        return flips

    # -- flow --------------------------------------------------------------
    def flowed(self, t: float) -> "Triangulation":
        new = self.copy()
        et, emt = math.exp(t), math.exp(-t)
        new.pts = self.pts.real * et + 1j * self.pts.imag * emt
        for x in range(new.n_triangles):
            for i in range(3):
                new._set_map(x, i)
        return new

    def transformed(self, m: np.ndarray) -> "Triangulation":
        new = self.copy()
        x, y = self.pts.real, self.pts.imag
        new.pts = (m[0, 0] * x + m[0, 1] * y) + 1j * (m[1, 0] * x + m[1, 1] * y)
        for u in range(new.n_triangles):
            for i in range(3):
                new._set_map(u, i)
        return new

    # -- straight line walks -------------------------------------------------
    def cross_edge(self, t: int, i: int, z: complex, d: complex):
        """Move a point and direction across edge ``i`` of ``t``."""
        t2, i2 = int(self.nbr[t, i]), int(self.nedge[t, i])
        sg = self.sgn[t, i]
        return t2, i2, sg * (z - self.shift[t, i]), sg * d

    def walk(self, t: int, z: complex, d: complex, length: float, skip=(), vtol: float = 1e-12,
             max_steps: int = 10 ** 6):
        """Follow the straight line from ``z`` in direction ``d``.

        Returns (segments, end) where segments are (tri, z_in, z_out, edge_out)
        and end is (tri, z, d).  Raises VertexHit when the line meets a vertex.
        """
        d = d / abs(d)
        segs = []
        remaining = length
        traveled = 0.0
        skip = set(skip)
        for _ in range(max_steps):
            p = self.pts[t]
            scale = max(abs(p[1] - p[0]), abs(p[2] - p[1]), abs(p[0] - p[2]))
            best, best_e = math.inf, -1
            for e in range(3):
                if e in skip:
                    continue
                A, B = p[e], p[(e + 1) % 3]
                den = _cross(d, B - A)
                if den <= 0:  # leaving the triangle means crossing edge left-to-right
                    continue
                s = _cross(A - z, B - A) / den
                u = _cross(A - z, d) / den
                if s > -1e-9 * scale and -1e-9 <= u <= 1 + 1e-9 and s < best:
                    best, best_e = s, e
            if best_e < 0:
                raise HourglassError("walk lost its triangle")
            if best >= remaining:
                zend = z + d * remaining
                segs.append((t, z, zend, -1))
                return segs, (t, zend, d)
            zout = z + d * best
            A, B = p[best_e], p[(best_e + 1) % 3]
            elen = abs(B - A)
            for k, V in ((best_e, A), ((best_e + 1) % 3, B)):
                if abs(zout - V) <= vtol * max(1.0, elen):
                    raise VertexHit(t, k, zout, traveled + best)
            segs.append((t, z, zout, best_e))
            remaining -= best
            traveled += best
            t, i2, z, d = self.cross_edge(t, best_e, zout, d)
            skip = {i2}
        raise HourglassError("walk exceeded step budget")

    def locate_from_vertex(self, v: int, theta: float):
        """Corner containing cone direction ``theta`` and the chart direction."""
        corners = self.corners_around(v)
        total = float(self.vertex_angle[v])
        theta = theta % total
        for t, j, off in corners:
            ang = self.corner_angle(t, j)
            if off - 1e-13 <= theta <= off + ang + 1e-13:
                p = self.pts[t]
                base = (p[(j + 1) % 3] - p[j]) / abs(p[(j + 1) % 3] - p[j])
                return t, j, base * complex(math.cos(theta - off), math.sin(theta - off))
        t, j, off = corners[-1]
        p = self.pts[t]
        base = (p[(j + 1) % 3] - p[j]) / abs(p[(j + 1) % 3] - p[j])
        return t, j, base * complex(math.cos(theta - off), math.sin(theta - off))

    def exp_vertex(self, v: int, theta: float, r: float):
        """Point at distance ``r`` from vertex ``v`` in cone direction ``theta``."""
        t, j, d = self.locate_from_vertex(v, theta)
        segs, end = self.walk(t, self.pts[t, j], d, r, skip=((j - 1) % 3, j))
        return end, segs

    def locate(self, t: int, z: complex, tol: float = 1e-12) -> bool:
        p = self.pts[t]
        return all(_cross(p[(e + 1) % 3] - p[e], z - p[e]) >= -tol for e in range(3))


@dataclass
class DevMap:
    """Chart map z_dev = sgn * z_local + shift."""
    sgn: int
    shift: complex

    def __call__(self, z):
        return self.sgn * z + self.shift

    def compose_edge(self, tri: Triangulation, t: int, i: int) -> "DevMap":
        # neighbour chart -> t chart -> developed chart
        s, c = tri.sgn[t, i], tri.shift[t, i]
        return DevMap(self.sgn * s, self.sgn * c + self.shift)
