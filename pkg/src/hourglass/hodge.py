"""Discrete Hodge theory on refined flat meshes.

A :class:`Mesh` is a fine triangulation of a translation surface in which
every triangle carries a flat chart, so the abelian differential is ``dz`` in
every chart.  Closed 1-cochains live on edges (one value per representative
half-edge); a closed cochain determines one constant vector ``V`` per
triangle, and ``phi = Vx - i Vy`` is the ratio ``h_c / omega`` whose real part
integrates back to the cochain.  Harmonic representatives minimise the cotan
Dirichlet energy ``sum(area * |V|**2)`` within the class.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (BadParams, BudgetExceeded, GramIllConditioned, InvolutionMismatch,
                     QuadratureUnstable, SolverFailure)
from .triangulation import Triangulation

MAX_VERTICES = 200_000
SOLVER_TOL = 1e-10


# --------------------------------------------------------------------------
# refinement

def _key(z: complex, scale: float):
    return (round(z.real / scale, 8), round(z.imag / scale, 8))


def _is_rectangle_surface(surface) -> bool:
    for poly in surface.polygons:
        n = len(poly)
        for k in range(n):
            (x0, y0), (x1, y1) = poly[k], poly[(k + 1) % n]
            if float(x0) != float(x1) and float(y0) != float(y1):
                return False
        xs = {float(x) for x, _ in poly}
        ys = {float(y) for _, y in poly}
        # axis-parallel and filling its bounding box
        if abs((max(xs) - min(xs)) * (max(ys) - min(ys)) - _poly_area(poly)) > 1e-12 * (1 + _poly_area(poly)):
            return False
    return True


def _poly_area(poly) -> float:
    pts = [(float(x), float(y)) for x, y in poly]
    return 0.5 * sum(x0 * y1 - x1 * y0 for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]))


def _glue_map(surface, g):
    """(p, A, B, q, s, c): edge A->B of p maps into q by z -> s z + c."""
    (p, i), (q, j) = g.edge_a, g.edge_b
    A, B = surface.polygons[p][i], surface.polygons[p][(i + 1) % len(surface.polygons[p])]
    A2, B2 = surface.polygons[q][j], surface.polygons[q][(j + 1) % len(surface.polygons[q])]
    A, B = complex(float(A[0]), float(A[1])), complex(float(B[0]), float(B[1]))
    A2, B2 = complex(float(A2[0]), float(A2[1])), complex(float(B2[0]), float(B2[1]))
    s = 1 if ((A - B) / (B2 - A2)).real > 0 else -1
    return p, A, B, q, s, B2 - s * A


def _on_segment(z, A, B, tol):
    d = B - A
    u = ((z - A) * d.conjugate()).real / abs(d) ** 2
    return -tol <= u <= 1 + tol and abs(((z - A) * d.conjugate()).imag) / abs(d) <= tol * abs(d)


def _grid_breaks(surface, h, scale):
    P = len(surface.polygons)
    X = [set() for _ in range(P)]
    Y = [set() for _ in range(P)]
    for p, poly in enumerate(surface.polygons):
        for x, y in poly:
            X[p].add(float(x))
            Y[p].add(float(y))
    maps = []
    for g in surface.gluings:
        p, A, B, q, s, c = _glue_map(surface, g)
        maps.append((p, A, B, q, s, c))
        Ainv, Binv = s * B + c, s * A + c  # the partner edge, traversed forwards
        maps.append((q, Ainv, Binv, p, s, -s * c))

    def propagate():
        changed = True
        rounds = 0
        while changed:
            changed = False
            rounds += 1
            if rounds > 50:
                raise BudgetExceeded("grid breakpoints did not stabilise")
            for p, A, B, q, s, c in maps:
                if abs(A.imag - B.imag) < 1e-14 * scale:  # horizontal edge
                    lo, hi = sorted((A.real, B.real))
                    for x in list(X[p]):
                        if lo - 1e-12 * scale <= x <= hi + 1e-12 * scale:
                            x2 = (s * complex(x, A.imag) + c).real
                            if not any(abs(x2 - w) <= 1e-11 * scale for w in X[q]):
                                X[q].add(x2)
                                changed = True
                else:
                    lo, hi = sorted((A.imag, B.imag))
                    for y in list(Y[p]):
                        if lo - 1e-12 * scale <= y <= hi + 1e-12 * scale:
                            y2 = (s * complex(A.real, y) + c).imag
                            if not any(abs(y2 - w) <= 1e-11 * scale for w in Y[q]):
                                Y[q].add(y2)
                                changed = True

    step = h / math.sqrt(2.0)  # cell diagonals stay below h

    def fill(S):
        vals = sorted(S)
        out = {vals[0]}
        for a, b in zip(vals, vals[1:]):
            n = max(1, math.ceil((b - a) / step - 1e-9))
            out.update(a + (b - a) * k / n for k in range(1, n + 1))
        return out

    propagate()
    for _ in range(10):
        before = [len(x) + len(y) for x, y in zip(X, Y)]
        X = [fill(x) for x in X]
        Y = [fill(y) for y in Y]
        propagate()
        if before == [len(x) + len(y) for x, y in zip(X, Y)]:
            break
    return [sorted(x) for x in X], [sorted(y) for y in Y]


def _assemble(pts, origin, links, boundary, pairs, sv, scale):
    """Glue half-edges into a :class:`Triangulation`.

    ``links`` are interior pairs; ``boundary[poly]`` lists ``(t, i, P, Q)``;
    ``pairs`` lists ``(p, A, B, q, s, c)`` for each glued polygon edge.
    """
    T = len(pts)
    nbr = np.full((T, 3), -1, dtype=int)
    nedge = np.full((T, 3), -1, dtype=int)
    for (t, i), (u, j) in links:
        nbr[t, i], nedge[t, i] = u, j
        nbr[u, j], nedge[u, j] = t, i
    index = {}
    for p, lst in boundary.items():
        for t, i, P, Q in lst:
            index[(p, _key(P, scale), _key(Q, scale))] = (t, i)
    tol = 1e-9
    for p, A, B, q, s, c in pairs:
        for t, i, P, Q in boundary.get(p, ()):
            if not (_on_segment(P, A, B, tol) and _on_segment(Q, A, B, tol)):
                continue
            hit = index.get((q, _key(s * Q + c, scale), _key(s * P + c, scale)))
            if hit is None:
                raise BudgetExceeded("refined edges along a gluing do not match")
            nbr[t, i], nedge[t, i] = hit
    if (nbr < 0).any():
        raise BudgetExceeded("refined mesh has unmatched edges")
    return Triangulation(pts, nbr, nedge, origin=origin, surface_vertex=sv)


def _grid_mesh(surface, h, max_vertices):
    scale = math.sqrt(surface.area)
    X, Y = _grid_breaks(surface, h, scale)
    nv = sum(len(x) * len(y) for x, y in zip(X, Y))
    if nv > max_vertices:
        raise BudgetExceeded(f"mesh would have about {nv} vertices (cap {max_vertices})")
    vclass = surface.vertex_class_of
    pts, origin, links, sv = [], [], [], {}
    boundary = {}
    for p, poly in enumerate(surface.polygons):
        corner = {_key(complex(float(x), float(y)), scale): k for k, (x, y) in enumerate(poly)}
        xs, ys = X[p], Y[p]
        nx, ny = len(xs) - 1, len(ys) - 1
        base = len(pts)
        bd = boundary.setdefault(p, [])
        for j in range(ny):
            for i in range(nx):
                ll, lr = complex(xs[i], ys[j]), complex(xs[i + 1], ys[j])
                ul, ur = complex(xs[i], ys[j + 1]), complex(xs[i + 1], ys[j + 1])
                t1 = len(pts)
                pts.append([ll, lr, ur])
                pts.append([ll, ur, ul])
                origin += [p, p]
                links.append(((t1, 2), (t1 + 1, 0)))
                if i + 1 < nx:
                    links.append(((t1, 1), (t1 + 3, 2)))
                if j + 1 < ny:
                    links.append(((t1 + 1, 1), (base + 2 * ((j + 1) * nx + i), 0)))
                if j == 0:
                    bd.append((t1, 0, ll, lr))
                if i == nx - 1:
                    bd.append((t1, 1, lr, ur))
                if j == ny - 1:
                    bd.append((t1 + 1, 1, ur, ul))
                if i == 0:
                    bd.append((t1 + 1, 2, ul, ll))
                for t, tri_pts in ((t1, pts[t1]), (t1 + 1, pts[t1 + 1])):
                    for k, z in enumerate(tri_pts):
                        c = corner.get(_key(z, scale))
                        if c is not None:
                            sv[(t, k)] = vclass[(p, c)]
    pairs = []
    for g in surface.gluings:
        p, A, B, q, s, c = _glue_map(surface, g)
        pairs.append((p, A, B, q, s, c))
        pairs.append((q, s * B + c, s * A + c, p, s, -s * c))
    return _assemble(pts, origin, links, boundary, pairs, sv, scale)


def _subdivided_mesh(surface, h, max_vertices):
    from .surface import delaunay
    coarse = delaunay(surface)
    E = np.abs(coarse.edge_vectors())
    n = max(1, math.ceil(float(E.max()) / h - 1e-9))
    T0 = coarse.n_triangles
    if T0 * (n + 1) * (n + 2) // 2 > 3 * max_vertices:
        raise BudgetExceeded(f"subdivision level {n} exceeds the vertex cap")
    scale = math.sqrt(surface.area)
    pts, origin, links, sv = [], [], [], {}
    edge_owner = {}  # (coarse t, coarse edge, k) -> (t, i)
    for t in range(T0):
        a, b, c = coarse.pts[t]
        node = lambda i, j: a + (b - a) * (i / n) + (c - a) * (j / n)
        half = {}
        tris = []
        for j in range(n):
            for i in range(n - j):
                tris.append(((i, j), (i + 1, j), (i, j + 1)))
                if i + j + 1 < n:
                    tris.append(((i + 1, j), (i + 1, j + 1), (i, j + 1)))
        for nodes in tris:
            s = len(pts)
            pts.append([node(*v) for v in nodes])
            origin.append(int(coarse.origin[t]))
            for k in range(3):
                u, v = nodes[k], nodes[(k + 1) % 3]
                half[(u, v)] = (s, k)
                if (v, u) in half:
                    links.append(((s, k), half[(v, u)]))
                if u[1] == 0 and v[1] == 0:
                    edge_owner[(t, 0, min(u[0], v[0]))] = (s, k)
                elif u[0] + u[1] == n and v[0] + v[1] == n:
                    edge_owner[(t, 1, min(u[1], v[1]))] = (s, k)
                elif u[0] == 0 and v[0] == 0:
                    edge_owner[(t, 2, min(n - u[1], n - v[1]))] = (s, k)
                corners = {(0, 0): 0, (n, 0): 1, (0, n): 2}
                if u in corners:
                    vv = coarse.vid[t, corners[u]]
                    if coarse.is_surface_vertex[vv]:
                        sv[(s, k)] = int(coarse.surface_class[vv])
    T = len(pts)
    nbr = np.full((T, 3), -1, dtype=int)
    nedge = np.full((T, 3), -1, dtype=int)
    for (s, k), (u, m) in links:
        nbr[s, k], nedge[s, k] = u, m
        nbr[u, m], nedge[u, m] = s, k
    for (t, e, k), (s, i) in edge_owner.items():
        t2, e2 = int(coarse.nbr[t, e]), int(coarse.nedge[t, e])
        nbr[s, i], nedge[s, i] = edge_owner[(t2, e2, n - 1 - k)]
    tri = Triangulation(pts, nbr, nedge, origin=origin, surface_vertex=sv)
    tri.make_delaunay()
    return tri


def _orient_charts(tri: Triangulation) -> bool:
    """Rotate charts by half turns so every gluing is a translation, if possible."""
    if (tri.sgn == 1).all():
        return True
    T = tri.n_triangles
    s = np.zeros(T, dtype=int)
    s[0] = 1
    queue = deque([0])
    while queue:
        t = queue.popleft()
        for i in range(3):
            u = int(tri.nbr[t, i])
            want = s[t] * tri.sgn[t, i]
            if s[u] == 0:
                s[u] = want
                queue.append(u)
            elif s[u] != want:
                return False
    tri.pts = tri.pts * s[:, None]
    for t in range(T):
        for i in range(3):
            tri._set_map(t, i)
    return True


class _Bisector:
    """Mutable intrinsic triangulation supporting conforming edge bisection."""

    def __init__(self, tri: Triangulation):
        self.P = [list(map(complex, row)) for row in tri.pts]
        self.nbr = [list(map(int, r)) for r in tri.nbr]
        self.ned = [list(map(int, r)) for r in tri.nedge]
        self.origin = [int(o) for o in tri.origin]
        sv = getattr(tri, "_surface_vertex_corners", None) or {}
        self.cls = [[-1, -1, -1] for _ in self.P]
        for (t, j), k in sv.items():
            self.cls[t][j] = k
        self.dist = None

    def longest(self, t):
        p = self.P[t]
        L = [abs(p[(i + 1) % 3] - p[i]) for i in range(3)]
        i = max(range(3), key=lambda k: (L[k], -k))
        return i, L[i]

    def _split(self, t, i):
        """Replace t by (a, m, c) in place and append (m, b, c); returns new index."""
        p, d, k = self.P[t], self.dist[t], self.cls[t]
        a, b, c = p[i], p[(i + 1) % 3], p[(i + 2) % 3]
        m = 0.5 * (a + b)
        dm = min(d[i] + abs(m - a), d[(i + 1) % 3] + abs(m - b), d[(i + 2) % 3] + abs(m - c))
        s = len(self.P)
        self.P[t] = [a, m, c]
        self.P.append([m, b, c])
        self.dist[t] = [d[i], dm, d[(i + 2) % 3]]
        self.dist.append([dm, d[(i + 1) % 3], d[(i + 2) % 3]])
        self.cls[t] = [k[i], -1, k[(i + 2) % 3]]
        self.cls.append([-1, k[(i + 1) % 3], k[(i + 2) % 3]])
        self.origin.append(self.origin[t])
        self.nbr.append([-1, -1, -1])
        self.ned.append([-1, -1, -1])
        return s

    def bisect(self, t, i):
        u, j = self.nbr[t][i], self.ned[t][i]
        if u == t:
            raise BudgetExceeded("cannot bisect a self-glued edge")
        old = {}
        for x, e in ((t, (i + 1) % 3), (t, (i + 2) % 3), (u, (j + 1) % 3), (u, (j + 2) % 3)):
            old[(x, e)] = (self.nbr[x][e], self.ned[x][e])
        s = self._split(t, i)
        v = self._split(u, j)
        # new half-edge labels of the old outer edges
        where = {(t, (i + 1) % 3): (s, 1), (t, (i + 2) % 3): (t, 2),
                 (u, (j + 1) % 3): (v, 1), (u, (j + 2) % 3): (u, 2)}

        def link(x, y):
            self.nbr[x[0]][x[1]], self.ned[x[0]][x[1]] = y
            self.nbr[y[0]][y[1]], self.ned[y[0]][y[1]] = x

        for key, partner in old.items():
            link(where[key], where.get(partner, partner))
        link((t, 1), (s, 2))
        link((u, 1), (v, 2))
        link((t, 0), (v, 0))
        link((s, 0), (u, 0))

    def refine(self, t, i_max=10 ** 6):
        """Longest-edge propagation bisection until t's longest edge is split."""
        for _ in range(i_max):
            x, path = t, []
            while True:
                i, _ = self.longest(x)
                u, j = self.nbr[x][i], self.ned[x][i]
                if self.longest(u)[0] == j or u in path:
                    self.bisect(x, i)
                    break
                path.append(x)
                x = u
            if x == t:
                return

    def triangulation(self):
        sv = {(t, j): k for t, row in enumerate(self.cls) for j, k in enumerate(row) if k >= 0}
        return Triangulation(self.P, self.nbr, self.ned, origin=self.origin, surface_vertex=sv)


def _graded(tri: Triangulation, h: float, floor: float, mu: float, radius: float,
            max_vertices: int) -> Triangulation:
    """Bisect triangles near cone points until edge length <= h (r / radius)^(1 - mu)."""
    cones = np.nonzero(np.abs(tri.vertex_angle - 2 * math.pi) > 1e-6)[0]
    if len(cones) == 0:
        return tri
    m = Mesh(tri, h, translation=True)
    from scipy.sparse.csgraph import dijkstra
    a, b = m.edge_ends[:, 0], m.edge_ends[:, 1]
    L = np.abs(m.edge_vec)
    G = sp.coo_matrix((np.r_[L, L], (np.r_[a, b], np.r_[b, a])), shape=(tri.n_vertices,) * 2).tocsr()
    dv = dijkstra(G, indices=cones, min_only=True)  # duplicates sum, giving upper bounds
    B = _Bisector(tri)
    B.dist = [[float(dv[tri.vid[t, j]]) for j in range(3)] for t in range(tri.n_triangles)]

    def target(t):
        p, d = B.P[t], B.dist[t]
        cen = sum(p) / 3
        r = min(d[j] + abs(cen - p[j]) for j in range(3))
        return max(floor, h * min(1.0, (r / radius) ** (1 - mu)))

    work = list(range(len(B.P)))
    cap = 2 * max_vertices
    while work:
        t = work.pop()
        while B.longest(t)[1] > target(t) * (1 + 1e-9):
            n0 = len(B.P)
            B.refine(t)
            work.extend(range(n0, len(B.P)))
            if len(B.P) > cap:
                raise BudgetExceeded(f"graded refinement exceeded {cap} triangles")
    out = B.triangulation()
    return out


def refine_mesh(surface, h: float, max_vertices: int = MAX_VERTICES, grade: bool = True,
                h_sing_factor: float = 0.02, mu: float = 0.25, radius: float | None = None) -> "Mesh":
    """Fine triangulation with edges of length at most about ``h``.

    Surfaces built from axis-parallel rectangles get a tensor grid whose
    breakpoints agree across every gluing; other surfaces get a uniform
    subdivision of the coarse Delaunay triangulation followed by Delaunay
    flips.  Cone points are always mesh vertices.
    """
    if not (h > 0 and math.isfinite(h)):
        raise BadParams("mesh size h must be positive")
    if _is_rectangle_surface(surface):
        tri, route = _grid_mesh(surface, h, max_vertices), "grid"
    else:
        tri, route = _subdivided_mesh(surface, h, max_vertices), "subdivided"
    if grade:
        R = radius if radius is not None else 0.5 * math.sqrt(surface.area)
        tri = _graded(tri, h, h * h_sing_factor, mu, R, max_vertices)
        tri.make_delaunay()
    if tri.n_vertices > max_vertices:
        raise BudgetExceeded(f"mesh has {tri.n_vertices} vertices (cap {max_vertices})")
    translation = _orient_charts(tri)
    tri.surface = surface
    return Mesh(tri, h, surface=surface, route=route, translation=translation)


# --------------------------------------------------------------------------
# mesh and cochains

class Mesh:
    """Refined triangulation plus the cotan data used by every solve."""

    def __init__(self, tri: Triangulation, h: float, surface=None, route="", translation=None):
        self.tri, self.h, self.surface, self.route = tri, h, surface, route
        self.translation = bool((tri.sgn == 1).all()) if translation is None else translation
        self.reps, self.eid, self.eor = tri.edges()
        self._geometry()

    def _geometry(self):
        tri = self.tri
        E = tri.edge_vectors()
        self.E = E
        self.area_t = tri.triangle_areas()
        u, w = E, -np.roll(E, 1, axis=1)
        z = u.conjugate() * w
        cotv = z.real / z.imag
        self.cot_opp = np.roll(cotv, 1, axis=1)
        nE = len(self.reps)
        self.n_edges = nE
        W = np.zeros(nE)
        np.add.at(W, self.eid.ravel(), 0.5 * self.cot_opp.ravel())
        self.W = W
        rt = np.array([r[0] for r in self.reps])
        ri = np.array([r[1] for r in self.reps])
        self.edge_vec = E[rt, ri]
        a, b = tri.vid[rt, ri], tri.vid[rt, (ri + 1) % 3]
        rows = np.repeat(np.arange(nE), 2)
        cols = np.stack([b, a], axis=1).ravel()
        vals = np.tile([1.0, -1.0], nE)
        self.d0 = sp.csr_matrix((vals, (rows, cols)), shape=(nE, tri.n_vertices))
        self.edge_ends = np.stack([a, b], axis=1)
        self._solve = None

    @property
    def n_triangles(self):
        return self.tri.n_triangles

    @property
    def n_vertices(self):
        return self.tri.n_vertices

    @property
    def area(self) -> float:
        return float(self.area_t.sum())

    @property
    def genus(self) -> int:
        chi = self.n_vertices - self.n_edges + self.n_triangles
        return (2 - chi) // 2

    def flowed(self, t: float) -> "Mesh":
        """Same combinatorics, charts moved by diag(e^t, e^-t)."""
        return Mesh(self.tri.flowed(t), self.h, surface=self.surface, route=self.route)

    def min_angle(self, skip_singular: bool = True) -> float:
        E = self.E
        u, w = E, -np.roll(E, 1, axis=1)
        ang = np.abs(np.angle(u.conjugate() * w))
        if skip_singular:
            sing = self.cone_vertices()
            mask = ~np.isin(self.tri.vid, sing).any(axis=1)
            ang = ang[mask] if mask.any() else ang
        return float(ang.min())

    def cone_vertices(self) -> np.ndarray:
        return np.nonzero(np.abs(self.tri.vertex_angle - 2 * math.pi) > 1e-6)[0]

    def max_edge(self) -> float:
        return float(np.abs(self.edge_vec).max())

    # -- cochains ----------------------------------------------------------
    def half(self, c: np.ndarray) -> np.ndarray:
        """Per half-edge values, shape (T, 3) or (T, 3, k)."""
        c = np.asarray(c, dtype=float)
        if c.ndim == 1:
            return self.eor * c[self.eid]
        return self.eor[..., None] * c[self.eid]

    def closed_residual(self, c: np.ndarray) -> float:
        s = self.half(c).sum(axis=1)
        return float(np.abs(s).max() / max(np.abs(c).max(), 1e-300))

    def coclosed_residual(self, c: np.ndarray) -> float:
        r = self.d0.T @ (self.W[:, None] * c if np.ndim(c) > 1 else self.W * c)
        scale = np.abs(self.d0.T).dot(np.abs(self.W[:, None] * c if np.ndim(c) > 1 else self.W * c))
        return float(np.abs(r).max() / max(np.abs(scale).max(), 1e-300))

    def vectors(self, c: np.ndarray) -> np.ndarray:
        """Constant vector Vx + i Vy per triangle of a closed cochain."""
        ch = self.half(c)
        E = self.E
        A2 = 2 * self.area_t
        if ch.ndim == 3:
            E, A2 = E[..., None], A2[:, None]
        c0, c1 = ch[:, 0], ch[:, 1]
        e0, e1 = E[:, 0], E[:, 1]
        vx = (c0 * e1.imag - c1 * e0.imag) / A2
        vy = (e0.real * c1 - e1.real * c0) / A2
        return vx + 1j * vy

    def phi(self, c: np.ndarray) -> np.ndarray:
        """h_c / omega per triangle: Vx - i Vy."""
        return self.vectors(c).conjugate()

    def constant_form(self, a: float, b: float) -> np.ndarray:
        """Cochain of the constant form a dx + b dy."""
        return a * self.edge_vec.real + b * self.edge_vec.imag

    def laplacian(self) -> sp.csr_matrix:
        return (self.d0.T @ sp.diags(self.W) @ self.d0).tocsr()

    def _solver(self):
        if self._solve is None:
            L = self.laplacian().tocsc()[1:, 1:]
            try:
                self._solve = spla.factorized(L)
            except RuntimeError as exc:  # pragma: no cover - singular factor
                raise SolverFailure(str(exc)) from exc
            self._L = L
        return self._solve

    def harmonic_part(self, c: np.ndarray) -> np.ndarray:
        """Harmonic representative c - d f of the class of c."""
        c = np.asarray(c, dtype=float)
        solve = self._solver()
        cols = c[:, None] if c.ndim == 1 else c
        out = np.empty_like(cols)
        for k in range(cols.shape[1]):
            rhs = self.d0.T @ (self.W * cols[:, k])
            f = np.zeros(self.n_vertices)
            f[1:] = solve(rhs[1:])
            res = np.linalg.norm(self._L @ f[1:] - rhs[1:])
            if res > SOLVER_TOL * max(np.linalg.norm(rhs), 1.0) * 10:
                raise SolverFailure(f"Laplace solve residual {res:.3e}")
            out[:, k] = cols[:, k] - self.d0 @ f
        return out[:, 0] if c.ndim == 1 else out

    def energy(self, c: np.ndarray) -> np.ndarray:
        """sum(area |V|^2) of a closed cochain (its Hodge norm squared once harmonic)."""
        V = self.vectors(c)
        A = self.area_t if V.ndim == 1 else self.area_t[:, None]
        return (A * np.abs(V) ** 2).sum(axis=0)

    def hodge_norm(self, c: np.ndarray) -> float:
        return float(math.sqrt(self.energy(self.harmonic_part(c))))

    def polygon_charts(self):
        """Polygon index and vertex positions in that polygon's (extended) chart.

        Triangles created by flips across a polygon seam have no polygon of
        origin; they borrow the chart of an adjacent triangle, so their
        coordinates may stick out of the polygon.
        """
        tri = self.tri
        T = tri.n_triangles
        poly = tri.origin.copy()
        s = np.ones(T, dtype=complex)
        c = np.zeros(T, dtype=complex)
        queue = deque(np.nonzero(poly >= 0)[0].tolist())
        while queue:
            u = queue.popleft()
            for j in range(3):
                t = int(tri.nbr[u, j])
                if poly[t] >= 0:
                    continue
                # z_u = sgn * z_t + shift, then into u's polygon chart
                sg, sh = tri.sgn[u, j], tri.shift[u, j]
                poly[t] = poly[u]
                s[t], c[t] = s[u] * sg, s[u] * sh + c[u]
                queue.append(t)
        return poly, s[:, None] * tri.pts + c[:, None]

    def singular_distance(self) -> np.ndarray:
        """Approximate distance from each triangle centroid to the nearest cone point."""
        from scipy.sparse.csgraph import dijkstra
        sing = self.cone_vertices()
        if len(sing) == 0:
            return np.full(self.n_triangles, np.inf)
        a, b = self.edge_ends[:, 0], self.edge_ends[:, 1]
        L = np.abs(self.edge_vec)
        keep = a != b
        u, v, w = np.r_[a[keep], b[keep]], np.r_[b[keep], a[keep]], np.r_[L[keep], L[keep]]
        order = np.argsort(w)
        _, first = np.unique(np.stack([u[order], v[order]], axis=1), axis=0, return_index=True)
        sel = order[first]
        G = sp.csr_matrix((w[sel], (u[sel], v[sel])), shape=(self.n_vertices,) * 2)
        dv = dijkstra(G, indices=sing, min_only=True)
        cen = self.tri.centroids()
        off = np.abs(cen[:, None] - self.tri.pts)
        return (dv[self.tri.vid] + off).min(axis=1)


# --------------------------------------------------------------------------
# cohomology

def _spanning_trees(mesh: Mesh, root: int = 0, depth_first: bool = False):
    """Primal spanning tree, dual spanning tree of the rest, and leftover edges.

    Returns ``(parent_edge, tree, dual_order, dual_parent, generators)`` where
    ``parent_edge[v]`` is the tree edge towards the root.
    """
    tri = mesh.tri
    nV, nE = mesh.n_vertices, mesh.n_edges
    adj = [[] for _ in range(nV)]
    for e, (a, b) in enumerate(mesh.edge_ends):
        if a != b:
            adj[a].append((e, b))
            adj[b].append((e, a))
    parent_edge = np.full(nV, -1, dtype=int)
    seen = np.zeros(nV, dtype=bool)
    seen[root] = True
    tree = np.zeros(nE, dtype=bool)
    work = deque([root])
    while work:
        v = work.pop() if depth_first else work.popleft()
        for e, w in adj[v]:
            if not seen[w]:
                seen[w] = True
                parent_edge[w] = e
                tree[e] = True
                work.append(w)
    if not seen.all():
        raise SolverFailure("mesh vertex graph is disconnected")
    T = mesh.n_triangles
    t0 = (T - 1) if depth_first else 0
    dual_parent = np.full(T, -1, dtype=int)  # half-edge index 3 t + i towards the parent
    seen_t = np.zeros(T, dtype=bool)
    seen_t[t0] = True
    order = [t0]
    dual = np.zeros(nE, dtype=bool)
    work = deque([t0])
    while work:
        t = work.pop() if depth_first else work.popleft()
        for i in range(3):
            e = mesh.eid[t, i]
            if tree[e]:
                continue
            u, j = int(tri.nbr[t, i]), int(tri.nedge[t, i])
            if not seen_t[u]:
                seen_t[u] = True
                dual_parent[u] = 3 * u + j
                dual[e] = True
                order.append(u)
                work.append(u)
    gens = np.nonzero(~tree & ~dual)[0]
    return parent_edge, tree, order, dual_parent, gens


def cohomology_basis(mesh: Mesh, trees=None) -> np.ndarray:
    """Closed integral cochains dual to the tree-cotree generators, shape (nE, 2g)."""
    parent_edge, tree, order, dual_parent, gens = trees or _spanning_trees(mesh)
    k = len(gens)
    C = np.zeros((mesh.n_edges, k))
    C[gens, np.arange(k)] = 1.0
    eid, eor = mesh.eid, mesh.eor
    for t in reversed(order[1:]):
        ip = dual_parent[t] % 3
        acc = np.zeros(k)
        for i in range(3):
            if i != ip:
                acc += eor[t, i] * C[eid[t, i]]
        C[eid[t, ip]] = -eor[t, ip] * acc
    return C


def cycle_basis(mesh: Mesh, trees=None) -> np.ndarray:
    """Integral edge cycles, one per tree-cotree generator, shape (nE, 2g)."""
    parent_edge, tree, order, dual_parent, gens = trees or _spanning_trees(mesh)
    ends = mesh.edge_ends

    def up(v):
        z = {}
        while parent_edge[v] >= 0:
            e = parent_edge[v]
            a, b = ends[e]
            z[e] = z.get(e, 0) + (1 if a == v else -1)
            v = b if a == v else a
        return z

    Z = np.zeros((mesh.n_edges, len(gens)))
    for k, g in enumerate(gens):
        a, b = ends[g]
        Z[g, k] += 1
        for e, s in up(b).items():
            Z[e, k] += s
        for e, s in up(a).items():
            Z[e, k] -= s
    return Z


def cycle_holonomy(mesh: Mesh, z: np.ndarray) -> np.ndarray:
    """Developed displacement of edge cycles (translation surfaces only)."""
    return mesh.edge_vec @ z


@dataclass
class HarmonicBasis:
    cochains: np.ndarray          # (nE, 2g) harmonic representatives
    classes: np.ndarray           # (nE, 2g) integral cocycles they represent
    cycles: np.ndarray            # (nE, 2g) independently built homology cycles
    pairing: np.ndarray           # classes evaluated on cycles
    closed_residual: float
    coclosed_residual: float
    star_error: float = float("nan")

    @property
    def dim(self) -> int:
        return self.cochains.shape[1]


def star_commutation_error(mesh: Mesh, H: np.ndarray) -> float:
    """Relative L2 gap between rotated harmonic forms and their re-projection."""
    if H.shape[1] == 0:
        return 0.0
    V = mesh.vectors(H)
    Vs = 1j * V  # Hodge star rotates by 90 degrees
    half = (np.conjugate(mesh.E)[..., None] * Vs[:, None, :]).real  # (T, 3, k) per half-edge values
    acc = np.zeros((mesh.n_edges, H.shape[1]))
    np.add.at(acc, mesh.eid.ravel(), 0.5 * (mesh.eor[..., None] * half).reshape(-1, H.shape[1]))
    # the average is not exactly closed; project out the exact part and the
    # remaining non-closed part by least squares on the triangle vectors
    Hs = mesh.harmonic_part(acc)
    Vp = _ls_vectors(mesh, Hs)
    A = mesh.area_t[:, None]
    return float(np.sqrt((A * np.abs(Vp - Vs) ** 2).sum() / (A * np.abs(Vs) ** 2).sum()))


def _ls_vectors(mesh: Mesh, c: np.ndarray) -> np.ndarray:
    """Least-squares constant vectors per triangle (for cochains that are not closed)."""
    ch = mesh.half(c)
    E = mesh.E
    ex, ey = E.real, E.imag
    a11, a12, a22 = (ex * ex).sum(1), (ex * ey).sum(1), (ey * ey).sum(1)
    b1 = (ex[..., None] * ch).sum(1)
    b2 = (ey[..., None] * ch).sum(1)
    det = (a11 * a22 - a12 * a12)[:, None]
    vx = (a22[:, None] * b1 - a12[:, None] * b2) / det
    vy = (a11[:, None] * b2 - a12[:, None] * b1) / det
    return vx + 1j * vy


def harmonic_basis(mesh: Mesh, star_check: bool = True) -> HarmonicBasis:
    """Harmonic representatives of a tree-cotree cohomology basis.

    The cycle basis used for the pairing check comes from a second,
    depth-first tree-cotree decomposition rooted elsewhere.
    """
    trees = _spanning_trees(mesh)
    C = cohomology_basis(mesh, trees)
    if C.shape[1] != 2 * mesh.genus:
        raise SolverFailure(f"found {C.shape[1]} generators for genus {mesh.genus}")
    H = mesh.harmonic_part(C)
    other = _spanning_trees(mesh, root=mesh.n_vertices - 1, depth_first=True)
    Z = cycle_basis(mesh, other)
    P = C.T @ Z
    if C.shape[1] and abs(np.linalg.det(P)) < 0.5:
        raise SolverFailure("cohomology basis does not pair nondegenerately with homology")
    return HarmonicBasis(H, C, Z, P, mesh.closed_residual(H) if H.size else 0.0,
                         mesh.coclosed_residual(H) if H.size else 0.0,
                         star_commutation_error(mesh, H) if star_check else float("nan"))


def hodge_gram(mesh: Mesh, cochains: np.ndarray, harmonic: bool = True) -> np.ndarray:
    """Hodge inner products sum(area <V_i, V_j>) of the harmonic representatives.

    Per triangle, ``h_i ^ *h_j = <V_i, V_j> dA`` for constant forms, so the
    one-point rule is exact.
    """
    H = mesh.harmonic_part(cochains) if not harmonic else np.asarray(cochains, float)
    V = mesh.vectors(H)
    A = mesh.area_t[:, None]
    G = (V.real.T @ (A * V.real)) + (V.imag.T @ (A * V.imag))
    return 0.5 * (G + G.T)


def closed_form_torus_gram(mesh: Mesh, classes: np.ndarray, cycles: np.ndarray) -> np.ndarray:
    """Gram of integral classes on a flat torus from periods alone.

    Each class is represented by the constant form with the same periods on
    the given cycle basis; no Laplace solve is involved.
    """
    hol = cycle_holonomy(mesh, cycles)
    M = np.stack([hol.real, hol.imag], axis=1)  # (2, 2): rows cycles, cols (x, y)
    per = classes.T @ cycles  # (k, 2)
    ab = np.linalg.solve(M, per.T).T  # coefficients of dx, dy
    return mesh.area * ab @ ab.T


# --------------------------------------------------------------------------
# involution and the odd/even split

def mesh_involution(mesh: Mesh, polygon_map) -> np.ndarray:
    """Half-edge permutation of a sheet swap ``z -> -z`` between paired polygons.

    Returns ``(tau, shift)``: triangle ``t`` maps to ``tau[t]`` with corner
    ``j`` going to corner ``(j + shift[t]) % 3``.
    """
    tri = mesh.tri
    scale = math.sqrt(mesh.area)
    index = {}
    for t in range(tri.n_triangles):
        index[(int(tri.origin[t]), _key(tri.pts[t].mean(), scale))] = t
    tau = np.empty(tri.n_triangles, dtype=int)
    shift = np.empty(tri.n_triangles, dtype=int)
    for t in range(tri.n_triangles):
        p = int(tri.origin[t])
        if p < 0:
            raise InvolutionMismatch("mesh triangle lost its polygon of origin")
        u = index.get((int(polygon_map[p]), _key(-tri.pts[t].mean(), scale)))
        if u is None:
            raise InvolutionMismatch(f"no image for triangle {t}")
        d = np.abs(tri.pts[u][None, :] + tri.pts[t][:, None])  # |P_u[k] - (-P_t[j])|
        k = int(np.argmin(d[0]))
        if max(d[j, (j + k) % 3] for j in range(3)) > 1e-9 * scale:
            raise InvolutionMismatch(f"triangle {t} is not mapped simplicially")
        tau[t], shift[t] = u, k
    if not (tau[tau] == np.arange(len(tau))).all():
        raise InvolutionMismatch("sheet swap is not an involution on triangles")
    return tau, shift


def pullback_matrix(mesh: Mesh, tau, shift) -> sp.csr_matrix:
    """Signed edge permutation acting on cochains as iota^*."""
    rows, cols, vals = [], [], []
    for e, (t, i) in enumerate(mesh.reps):
        u, j = tau[t], (i + shift[t]) % 3
        rows.append(e)
        cols.append(mesh.eid[u, j])
        vals.append(float(mesh.eor[u, j]))
    return sp.csr_matrix((vals, (rows, cols)), shape=(mesh.n_edges,) * 2)


@dataclass
class OddEvenSplit:
    odd: np.ndarray
    even: np.ndarray
    involution: sp.csr_matrix
    square_defect: float     # max |iota*^2 c - c| over the basis
    odd_residual: float      # ||iota* h + h|| / ||h|| over the odd basis
    even_residual: float


def _orth_span(M: np.ndarray, ref: float, tol=1e-8) -> np.ndarray:
    """Orthonormal columns spanning range(M); directions below tol * ref are dropped."""
    if M.shape[1] == 0:
        return M
    w, U = np.linalg.eigh(M.T @ M)
    keep = w > tol * ref
    return M @ (U[:, keep] / np.sqrt(w[keep]))


def odd_even_split(mesh: Mesh, polygon_map, basis: HarmonicBasis | None = None) -> OddEvenSplit:
    """Split harmonic cohomology of a double cover into iota-odd and even parts."""
    basis = basis or harmonic_basis(mesh, star_check=False)
    tau, shift = mesh_involution(mesh, polygon_map)
    I = pullback_matrix(mesh, tau, shift)
    H = basis.cochains
    sq = float(np.abs(I @ (I @ H) - H).max()) if H.size else 0.0
    # iota is an isometry, so it maps harmonic forms to harmonic forms
    ref = float(np.linalg.eigvalsh(H.T @ H).max()) if H.size else 1.0
    odd = _orth_span(0.5 * (H - I @ H), ref)
    even = _orth_span(0.5 * (H + I @ H), ref)

    def res(B, sgn):
        if B.shape[1] == 0:
            return 0.0
        return float(np.abs(I @ B - sgn * B).max() / np.abs(B).max())

    return OddEvenSplit(odd, even, I, sq, res(odd, -1), res(even, 1))


# --------------------------------------------------------------------------
# Forni's formula and the spectral gap

def forni_derivative(mesh: Mesh, c: np.ndarray, eps_check: bool = False, tol: float = 5e-2) -> float:
    """d/dt log ||c|| along the Teichmuller flow: -Re sum(area f^2) / sum(area |f|^2).

    ``f = h_c / omega`` is read off the harmonic representative.  With
    ``eps_check`` the sum is recomputed outside eps-disks around cone points,
    eps in {4, 2, 1} fan radii (the local mesh size of the graded fan),
    extrapolated to eps -> 0 and compared.
    """
    h = mesh.harmonic_part(np.asarray(c, float))
    f = mesh.phi(h)
    A = mesh.area_t
    norm2 = float((A * np.abs(f) ** 2).sum())
    if not norm2 > 0:
        raise BadParams("class has zero Hodge norm")
    val = -float((A * f * f).sum().real) / norm2
    if eps_check and len(mesh.cone_vertices()):
        dist = mesh.singular_distance()
        vals = []
        r0 = fan_radius(mesh)
        for eps in (4 * r0, 2 * r0, r0):
            w = A * (dist >= eps)
            vals.append(-float((w * f * f).sum().real) / float((w * np.abs(f) ** 2).sum()))
        extrap = richardson(vals)
        if abs(extrap - val) > tol:
            raise QuadratureUnstable(f"cone-point contribution unstable: {extrap:.4g} vs {val:.4g}")
    return val


def richardson(vals, ratio: float = 2.0, order: float = 1.0) -> float:
    """Extrapolate a sequence sampled at eps, eps/ratio, ... to eps -> 0."""
    v = list(vals)
    k = ratio ** order
    while len(v) > 1:
        v = [(k * b - a) / (k - 1) for a, b in zip(v, v[1:])]
    return float(v[0])


def flow_derivative_fd(mesh: Mesh, c: np.ndarray, dt: float = 1e-3) -> float:
    """Central difference of log ||c|| along g_t, holding the cochain fixed.

    The mesh combinatorics do not change under the flow, so the same edge
    values represent the same cohomology class on the flowed surface.
    """
    if not dt > 0:
        raise BadParams("dt must be positive")
    c = np.asarray(c, float)
    lp = math.log(mesh.flowed(dt).hodge_norm(c))
    lm = math.log(mesh.flowed(-dt).hodge_norm(c))
    return (lp - lm) / (2 * dt)


def im_ratio(mesh: Mesh, f: np.ndarray) -> float:
    """||Im f||_2 / ||f||_2 for a per-triangle field."""
    A = mesh.area_t
    return float(math.sqrt((A * f.imag ** 2).sum() / (A * np.abs(f) ** 2).sum()))


@dataclass
class MeromorphicField:
    values: np.ndarray            # one complex value per triangle
    source: str = ""               # which eta products span the field
    coefficients: np.ndarray | None = None

    def l2_norm(self, mesh: Mesh) -> float:
        return float(math.sqrt((mesh.area_t * np.abs(self.values) ** 2).sum()))

    def im_norm(self, mesh: Mesh) -> float:
        return float(math.sqrt((mesh.area_t * self.values.imag ** 2).sum()))

    def mean(self, mesh: Mesh) -> complex:
        return complex((mesh.area_t * self.values).sum() / mesh.area)

    def cr_residual(self, mesh: Mesh) -> float:
        """Relative jump of the field across interior edges.

        Piecewise constant values are trivially holomorphic inside each
        triangle, so the Cauchy-Riemann defect shows up as edge jumps.
        """
        v = self.values
        t = np.arange(mesh.n_triangles)[:, None]
        jump = np.abs(v[mesh.tri.nbr] - v[t])
        return float(np.median(jump) / max(np.median(np.abs(v)), 1e-300))


@dataclass
class SpectralGapResult:
    delta: float
    argmin_field: MeromorphicField
    gram_condition: float
    l2_dimension: int
    space_dimension: int
    holomorphic_gap: float
    eps_deltas: tuple = ()
    delta_extrapolated: float = float("nan")
    eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))
    basis: np.ndarray | None = None   # (T, m) real-span basis of admissible fields


def holomorphic_forms(mesh: Mesh, basis: HarmonicBasis):
    """g fields eta_k / omega spanning the holomorphic 1-forms; the first is omega itself.

    Every ``phi_c = (h_c + i *h_c) / omega`` is holomorphic, so the complex
    span of the 2g harmonic fields is g-dimensional up to discretisation
    error.  The constant field (omega) is split off first and the leading
    g - 1 weighted singular vectors of the remainder are kept.  Returns the
    forms and the ratio of the first discarded to the last kept singular
    value (a holomorphicity diagnostic).
    """
    Phi = mesh.phi(basis.cochains)
    A = mesh.area_t
    g = basis.dim // 2
    one = np.ones(mesh.n_triangles, dtype=complex)
    R = Phi - np.outer(one, (A @ Phi) / A.sum())
    U, S, Vh = np.linalg.svd(np.sqrt(A)[:, None] * R, full_matrices=False)
    eta = [one] + [R @ Vh[k].conj() for k in range(g - 1)]
    gap = float(S[g - 1] / S[g - 2]) if g >= 2 and len(S) > g - 1 else 0.0
    return np.stack(eta, axis=1), gap


def _real_gram(F: np.ndarray, w: np.ndarray, imag_only: bool = False) -> np.ndarray:
    if imag_only:
        X = F.imag
        G = X.T @ (w[:, None] * X)
    else:
        G = (F.conj().T @ (w[:, None] * F)).real
    return 0.5 * (G + G.T)


def _realify(P: np.ndarray) -> np.ndarray:
    return np.concatenate([P, 1j * P], axis=1)


def fan_radius(mesh: Mesh) -> float:
    """Longest mesh edge incident to a cone point (0 if there are none)."""
    cones = mesh.cone_vertices()
    if len(cones) == 0:
        return 0.0
    hit = np.isin(mesh.edge_ends, cones).any(axis=1)
    return float(np.abs(mesh.edge_vec[hit]).max())


def spectral_gap(mesh: Mesh, basis: HarmonicBasis | None = None, l2_filter: float = 1.5,
                 filter_rings: float = 4.0, cond_cap: float = 1e10, eps_check: bool = True,
                 strict: bool = False, tol: float = 0.05) -> SpectralGapResult:
    """delta = min ||Im f|| over unit fields f in span{eta_i eta_j / omega^2}, <f, 1> = 0.

    Products containing omega itself are square integrable.  The remaining
    products are kept only if they pass an L2 test: a field that is not
    square integrable near a cone point keeps a fixed fraction of its mass in
    the innermost rings of the graded fan, so the ratio of its full norm to
    its norm outside ``filter_rings`` fan radii stays well above 1.
    """
    if not mesh.translation:
        raise BadParams("spectral gap needs a translation surface mesh (use the orienting double cover)")
    basis = basis or harmonic_basis(mesh, star_check=False)
    g = basis.dim // 2
    if g < 2:
        raise BadParams("no non-constant fields in genus below 2")
    eta, hgap = holomorphic_forms(mesh, basis)
    A = mesh.area_t
    center = lambda P: P - (A @ P) / A.sum()
    names = [(0, j) for j in range(1, g)]
    Pa = center(eta[:, 1:])
    raw = [Pa]
    Fa = _realify(Pa)
    Qa = _normalise(_real_gram(Fa, A))
    F = Fa @ Qa
    cands = [(i, j) for i in range(1, g) for j in range(i, g)]
    kept = 0
    if cands:
        Pc = center(np.stack([eta[:, i] * eta[:, j] for i, j in cands], axis=1))
        raw.append(Pc)
        Fc = _realify(Pc)
        Fc = Fc - F @ (F.conj().T @ (A[:, None] * Fc)).real  # remove the admissible span
        Fc = Fc @ _normalise(_real_gram(Fc, A))
        dist = mesh.singular_distance()
        wex = A * (dist >= filter_rings * fan_radius(mesh))
        if Fc.shape[1]:
            nu, Y = sla.eigh(_real_gram(Fc, A), _real_gram(Fc, wex))
            keep = nu <= l2_filter
            kept = int(keep.sum())
            if kept:
                F = np.concatenate([F, Fc @ Y[:, keep]], axis=1)
                F = F @ _normalise(_real_gram(F, A))
                names += [c for c in cands]
    Graw = _real_gram(_realify(np.concatenate(raw, axis=1)), A)
    wr = np.linalg.eigvalsh(Graw)
    cond = float(wr.max() / max(wr.min(), 1e-300))
    if cond > cond_cap:
        raise GramIllConditioned(f"field Gram condition {cond:.3e} exceeds {cond_cap:.1e}")
    lam, Y = sla.eigh(_real_gram(F, A, imag_only=True), _real_gram(F, A))
    f = F @ Y[:, 0]
    f = f / math.sqrt((A * np.abs(f) ** 2).sum())
    delta = float(math.sqrt(max(lam[0], 0.0)))
    eps_deltas, extrap = (), float("nan")
    if eps_check and len(mesh.cone_vertices()):
        dist = mesh.singular_distance()
        ds, r0 = [], fan_radius(mesh)
        for k in (4, 2, 1):
            wk = A * (dist >= k * r0)
            mu = sla.eigh(_real_gram(F, wk, imag_only=True), _real_gram(F, wk), eigvals_only=True)
            ds.append(float(math.sqrt(max(mu[0], 0.0))))
        eps_deltas, extrap = tuple(ds), richardson(ds)
        if strict and abs(extrap - delta) > tol:
            raise QuadratureUnstable(f"eps-extrapolated delta {extrap:.4g} differs from {delta:.4g}")
    field_ = MeromorphicField(f, source="span of eta_i eta_j / omega^2 for (i, j) in " + str(names))
    return SpectralGapResult(delta, field_, cond, F.shape[1], 2 * (g - 1 + len(cands)), hgap,
                             eps_deltas, extrap, np.sqrt(np.maximum(lam, 0)), F)


def _normalise(G: np.ndarray) -> np.ndarray:
    w, U = np.linalg.eigh(G)
    keep = w > 1e-12 * max(w.max(), 1e-300)
    return U[:, keep] / np.sqrt(w[keep])


def sampled_min_im_ratio(mesh: Mesh, result: SpectralGapResult, n: int = 10_000, seed: int = 0) -> float:
    """Minimum of ||Im f|| / ||f|| over random fields in the admissible span."""
    rng = np.random.default_rng(seed)
    F = result.basis
    A = mesh.area_t
    # the ratio only depends on the coefficient vector through two quadratic forms
    Gi, G = _real_gram(F, A, imag_only=True), _real_gram(F, A)
    Y = rng.standard_normal((F.shape[1], n))
    r = np.sqrt(np.einsum("in,ij,jn->n", Y, Gi, Y) / np.einsum("in,ij,jn->n", Y, G, Y))
    return float(r.min())


# --------------------------------------------------------------------------
# matrix text format

def format_matrix(M) -> str:
    """``rows cols`` header, then one row per line, 17 significant digits."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    lines = [f"{M.shape[0]} {M.shape[1]}"]
    lines += [" ".join(format(x, ".17g") for x in row) for row in M]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    rows = [r for r in text.strip().splitlines() if r.strip()]
    n, m = (int(x) for x in rows[0].split())
    M = np.array([[float(x) for x in r.split()] for r in rows[1:]], dtype=float).reshape(n, m)
    return M
