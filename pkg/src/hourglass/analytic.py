"""Numerical checks of the analytic estimates behind the spectral-gap bound.

Cylinders use coordinates ``(x, y)`` with ``-L < x < L`` and ``y`` periodic
of period ``2 pi s``; the map ``z = exp((x + i y) / s)`` turns them into round
annuli on which holomorphic functions are Laurent series.  Every check
reports empirical constants (observed ratio of the two sides of an estimate)
rather than asserting particular values.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import (BadParams, DiskNotEmbedded, FloorViolated, IllConditionedFit, NoPathFound,
                     PartitionInvalid)

LS_FLOOR = 10.0


# --------------------------------------------------------------------------
# cylinders and Laurent series

@dataclass(frozen=True)
class CylinderCoords:
    s: float
    L: float

    def __post_init__(self):
        if not (self.s > 0 and self.L > 0):
            raise BadParams("cylinder needs s > 0 and L > 0")

    @property
    def circumference(self) -> float:
        return 2 * math.pi * self.s

    @property
    def area(self) -> float:
        return 4 * math.pi * self.s * self.L

    @property
    def modulus_ratio(self) -> float:
        return self.L / self.s

    def z(self, x, y):
        return np.exp((np.asarray(x) + 1j * np.asarray(y)) / self.s)

    def quadrature(self, panels: int = 64, order: int = 16, M: int = 64):
        """Nodes and weights for the integral over the cylinder, dy dx."""
        g, w = leggauss(order)
        edges = np.linspace(-self.L, self.L, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        xs = (mid[:, None] + half[:, None] * g[None, :]).ravel()
        wx = (half[:, None] * w[None, :]).ravel()
        ys = self.circumference * np.arange(M) / M
        wy = np.full(M, self.circumference / M)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return X, Y, wx[:, None] * wy[None, :]


@dataclass
class LaurentSeries:
    """Coefficients f^(n) for n = -N..N, stored at index n + N."""

    coef: np.ndarray

    @property
    def N(self) -> int:
        return (len(self.coef) - 1) // 2

    def __getitem__(self, n: int) -> complex:
        return complex(self.coef[n + self.N]) if abs(n) <= self.N else 0j

    @classmethod
    def from_dict(cls, terms: dict, N: int | None = None) -> "LaurentSeries":
        N = max(abs(n) for n in terms) if N is None else N
        c = np.zeros(2 * N + 1, dtype=complex)
        for n, a in terms.items():
            c[n + N] = a
        return cls(c)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for n in range(-self.N, self.N + 1):
            a = self.coef[n + self.N]
            if a != 0:
                out = out + a * z ** n
        return out

    def on_cylinder(self, coords: CylinderCoords, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        out = np.zeros(np.broadcast(x, y).shape, dtype=complex)
        for n in range(-self.N, self.N + 1):
            a = self.coef[n + self.N]
            if a != 0:
                out = out + a * np.exp(n * (x + 1j * y) / coords.s)
        return out

    def derivative_on_cylinder(self, coords: CylinderCoords, x, y):
        """d f / d(x + i y) in cylinder coordinates."""
        out = 0
        for n in range(-self.N, self.N + 1):
            a = self.coef[n + self.N]
            if a != 0 and n != 0:
                out = out + a * (n / coords.s) * np.exp(n * (np.asarray(x) + 1j * np.asarray(y)) / coords.s)
        return out

    def scaled(self, lam) -> "LaurentSeries":
        return LaurentSeries(self.coef * lam)


def sample_cylinder(f, coords: CylinderCoords, N: int, circles: int | None = None,
                    points: int | None = None, margin: float = 0.0):
    """Equispaced circle samples ``f(x, y)`` meeting the fit's sampling requirements."""
    K = circles or (2 * N + 1)
    M = points or (4 * N + 4)
    xs = np.linspace(-coords.L + margin, coords.L - margin, K)
    ys = coords.circumference * np.arange(M) / M
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return xs, f(X, Y)


def laurent_fit(xs, F, coords: CylinderCoords, N: int, cond_cap: float = 1e300) -> LaurentSeries:
    """Laurent coefficients from samples on circles ``x = xs[k]``.

    ``F[k, m]`` is the value at ``y = 2 pi s m / M``.  Each circle is Fourier
    transformed; frequency ``n`` then satisfies ``a_k(n) = f^(n) e^{n x_k / s}``,
    solved by weighted least squares across circles.
    """
    xs = np.asarray(xs, float)
    F = np.asarray(F, dtype=complex)
    K, M = F.shape
    if K < 2 * N + 1 or M < 4 * N + 4:
        raise BadParams(f"need >= {2 * N + 1} circles with >= {4 * N + 4} points each")
    X = np.fft.fft(F, axis=1) / M
    coef = np.zeros(2 * N + 1, dtype=complex)
    for n in range(-N, N + 1):
        a = X[:, n % M]
        with np.errstate(over="ignore", under="ignore"):
            w = np.exp(n * xs / coords.s)
        if not np.isfinite(w).all() or not (w > 0).any():
            raise IllConditionedFit(f"radial weights overflow for n = {n}")
        cond = float(w.max() / max(w.min(), 1e-300))
        if cond > cond_cap:
            raise IllConditionedFit(f"radial system for n = {n} has condition {cond:.3e}")
        coef[n + N] = (w * a).sum() / (w * w).sum()
    return LaurentSeries(coef)


def reconstruction_error(series: LaurentSeries, f, coords: CylinderCoords, n: int = 200, seed: int = 0) -> float:
    """Max relative error of the series against ``f`` at random held-out points."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-coords.L, coords.L, n)
    y = rng.uniform(0, coords.circumference, n)
    ref = f(x, y)
    return float(np.abs(series.on_cylinder(coords, x, y) - ref).max() / max(np.abs(ref).max(), 1e-300))


def parseval_sum(series: LaurentSeries, coords: CylinderCoords) -> float:
    """Closed form of the squared L2 norm over the cylinder."""
    s, L = coords.s, coords.L
    tot = 2 * L * abs(series[0]) ** 2
    for n in range(1, series.N + 1):
        tot += (abs(series[n]) ** 2 + abs(series[-n]) ** 2) * math.sinh(2 * n * L / s) / (n / s)
    return 2 * math.pi * s * tot


def quadrature_norm2(series: LaurentSeries, coords: CylinderCoords, part: str = "abs", **quad) -> float:
    X, Y, W = coords.quadrature(**quad)
    v = series.on_cylinder(coords, X, Y)
    val = {"abs": np.abs(v), "im": v.imag, "re": v.real}[part]
    return float((W * val ** 2).sum())


def parseval_check(series: LaurentSeries, coords: CylinderCoords, **quad) -> float:
    """Relative gap between the sinh formula and direct 2-D quadrature."""
    quad.setdefault("M", max(64, 4 * series.N + 8))
    a = parseval_sum(series, coords)
    b = quadrature_norm2(series, coords, **quad)
    return abs(a - b) / max(abs(a), 1e-300)


def random_laurent(rng, N: int, coords: CylinderCoords | None = None, decay: bool = True) -> LaurentSeries:
    """Random series; with ``decay`` the coefficients shrink like e^{-|n| L / s}."""
    c = rng.standard_normal(2 * N + 1) + 1j * rng.standard_normal(2 * N + 1)
    if decay and coords is not None:
        n = np.arange(-N, N + 1)
        c = c * np.exp(-np.abs(n) * coords.L / coords.s)
    return LaurentSeries(c)


@dataclass
class CylinderLemmaReport:
    delta: float                 # ||Im f||_2 over the cylinder
    fhat0: complex
    sup_core: float              # sup |f - f^(0)| over |x| < L - B s
    C_a: float                   # sup_core * s / delta
    average_error: float         # worst |average over a rotation-invariant band - f^(0)|
    norm2: float
    C_c: float                   # ||f||^2 / (L s |f^(0)|^2 + ||Im f||^2)
    C_decay: float               # max_n |f^(+-n)| / (sqrt(n) (delta / s) e^{-n L / s})
    b: float


def cylinder_lemma_check(series: LaurentSeries, coords: CylinderCoords, b: float = 0.25,
                         floor: float = LS_FLOOR, grid: int = 201, bands: int = 5, seed: int = 0,
                         **quad) -> CylinderLemmaReport:
    """Empirical constants for the three cylinder estimates and coefficient decay."""
    if not 0 < b < 0.5:
        raise BadParams("b must lie in (0, 1/2)")
    if coords.modulus_ratio < floor:
        raise FloorViolated(f"L/s = {coords.modulus_ratio:.3g} is below the floor {floor}")
    s, L, B = coords.s, coords.L, 1.0 / b
    quad.setdefault("M", max(64, 4 * series.N + 8))
    delta = math.sqrt(quadrature_norm2(series, coords, "im", **quad))
    norm2 = quadrature_norm2(series, coords, "abs", **quad)
    f0 = series[0]
    xs = np.linspace(-(L - B * s), L - B * s, grid)
    ys = coords.circumference * np.arange(4 * series.N + 8) / (4 * series.N + 8)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    sup = float(np.abs(series.on_cylinder(coords, X, Y) - f0).max())
    # rotation-invariant bands: averages over [x1, x2] x circle
    rng = np.random.default_rng(seed)
    g, w = leggauss(24)
    worst = 0.0
    M = quad["M"]
    yy = coords.circumference * np.arange(M) / M
    for _ in range(bands):
        x1, x2 = np.sort(rng.uniform(-L, L, 2))
        xq = 0.5 * (x1 + x2) + 0.5 * (x2 - x1) * g
        XX, YY = np.meshgrid(xq, yy, indexing="ij")
        avg = (series.on_cylinder(coords, XX, YY).mean(axis=1) * w).sum() / 2.0
        worst = max(worst, abs(avg - f0))
    ratio = lambda num, den: 0.0 if num == 0 else (num / den if den > 0 else math.inf)
    C_a = ratio(sup * s, delta)
    C_c = ratio(norm2, L * s * abs(f0) ** 2 + delta ** 2)
    dec = 0.0
    for n in range(1, series.N + 1):
        for m in (n, -n):
            bound = math.sqrt(n) * (delta / s) * math.exp(-n * L / s)
            dec = max(dec, ratio(abs(series[m]), bound))
    return CylinderLemmaReport(delta, f0, sup, C_a, worst, norm2, C_c, dec, b)


# --------------------------------------------------------------------------
# dyadic shells on expanding annuli

@dataclass
class Shell:
    j: int
    r_lo: float
    r_hi: float
    diameter: float
    area: float


@dataclass
class ShellPartition:
    shells: list
    outer_radius: float
    cone_angle: float
    C: float                      # observed lower constants for diameter/area
    C_prime: float                # observed upper constants

    @property
    def j0(self) -> int:
        return self.shells[0].j

    def index(self, r: np.ndarray) -> np.ndarray:
        """Shell position (0-based) for each radius, -1 outside every shell."""
        out = np.full(np.shape(r), -1, dtype=int)
        for k, sh in enumerate(self.shells):
            out[(r > sh.r_lo) & (r <= sh.r_hi)] = k
        return out


def shell_partition(outer_radius: float, j0: int, N: int, cone_angle: float = 2 * math.pi,
                    radii=None) -> ShellPartition:
    """Shells W_j = {R 2^{-j-1} < r <= R 2^{-j}} around the degenerate boundary.

    ``radii`` (descending, length N - j0 + 2) overrides the dyadic radii; the
    neighbour-containment certificate is checked either way.
    """
    R = float(outer_radius)
    if N < j0:
        raise PartitionInvalid("need N >= j0")
    if radii is None:
        radii = [R * 2.0 ** (-j) for j in range(j0, N + 2)]
    radii = [float(r) for r in radii]
    if len(radii) != N - j0 + 2 or any(b >= a for a, b in zip(radii, radii[1:])):
        raise PartitionInvalid("shell radii must be strictly decreasing, one per boundary")
    shells = []
    for k, j in enumerate(range(j0, N + 1)):
        hi, lo = radii[k], radii[k + 1]
        diam = 2 * hi if cone_angle >= math.pi else 2 * hi * math.sin(cone_angle / 2)
        shells.append(Shell(j, lo, hi, diam, 0.5 * cone_angle * (hi * hi - lo * lo)))
    # neighbourhood certificate: R 2^{-j-2} around W_j stays inside W_{j-1..j+1}
    for k, sh in enumerate(shells):
        eps = R * 2.0 ** (-sh.j - 2)
        outer = shells[k - 1].r_hi if k > 0 else R * 2.0 ** (-sh.j + 1)
        inner = shells[k + 1].r_lo if k + 1 < len(shells) else sh.r_lo / 2
        if sh.r_hi + eps > outer * (1 + 1e-12) or sh.r_lo - eps < inner * (1 - 1e-12):
            raise PartitionInvalid(f"neighbourhood of shell {sh.j} leaves its neighbours")
    dr = [sh.diameter * 2.0 ** sh.j / R for sh in shells]
    ar = [sh.area * 4.0 ** sh.j / R ** 2 for sh in shells]
    return ShellPartition(shells, R, cone_angle, min(dr + ar), max(dr + ar))


def polar_samples(f, r_in: float, r_out: float, cone_angle: float = 2 * math.pi,
                  nr: int = 400, nt: int = 128):
    """Quadrature samples of ``f(r, theta)`` on a (possibly conical) annulus.

    Radii are Gauss-Legendre in ``log r`` so that dyadic shells get equal
    resolution.  Returns ``values, radii, weights`` (weights are area).
    """
    g, w = leggauss(nr)
    a, b = math.log(r_in), math.log(r_out)
    lr = 0.5 * (a + b) + 0.5 * (b - a) * g
    r = np.exp(lr)
    wr = 0.5 * (b - a) * w * r * r  # dA = r dr dtheta = r^2 d(log r) dtheta
    th = cone_angle * (np.arange(nt) + 0.5) / nt
    Rg, Tg = np.meshgrid(r, th, indexing="ij")
    W = wr[:, None] * (cone_angle / nt)
    return f(Rg, Tg).ravel(), Rg.ravel(), np.broadcast_to(W, Rg.shape).ravel()


@dataclass
class ShellsReport:
    delta0: float
    hypotheses_hold: bool
    M: np.ndarray                 # sup |f| per shell
    I: np.ndarray                 # ||Im f||_2 per shell
    C_a: float                    # max_j M_j / (delta0 2^j)
    C_b: float                    # ||1_W f||_1 / (delta0 2^{j0})
    C_c: float                    # ||1_W f||_2 / delta0


def shells_check(values, radii, weights, partition: ShellPartition, delta0: float | None = None) -> ShellsReport:
    """Empirical constants for the small-norm estimates on dyadic shells.

    Radii are measured in units of the partition's outer radius, so ``2^j``
    means ``2^j / R``.  When ``delta0`` is omitted the smallest value meeting
    both hypotheses is used, which makes every ratio scale invariant.
    """
    values = np.asarray(values, dtype=complex)
    radii = np.asarray(radii, float)
    weights = np.asarray(weights, float)
    R = partition.outer_radius
    k = partition.index(radii)
    inside = k >= 0
    nS = len(partition.shells)
    M = np.zeros(nS)
    I = np.zeros(nS)
    for q in range(nS):
        sel = k == q
        if sel.any():
            M[q] = np.abs(values[sel]).max()
            I[q] = math.sqrt((weights[sel] * values[sel].imag ** 2).sum())
    j = np.array([sh.j for sh in partition.shells], float)
    scale = 2.0 ** j / R  # 2^j in the lemma's normalisation
    im_norm = math.sqrt((weights[inside] * values[inside].imag ** 2).sum())
    need = max(im_norm, M[0] / scale[0])
    if delta0 is None:
        delta0 = need * (1 + 1e-9)
    hyp = bool(M[0] < delta0 * scale[0] and im_norm < delta0)
    l1 = float((weights[inside] * np.abs(values[inside])).sum())
    l2 = math.sqrt((weights[inside] * np.abs(values[inside]) ** 2).sum())
    if delta0 == 0:
        zero = not np.abs(values[inside]).any()
        return ShellsReport(0.0, hyp, M, I, 0.0 if zero else math.inf, 0.0 if zero else math.inf,
                            0.0 if zero else math.inf)
    return ShellsReport(float(delta0), hyp, M, I, float((M / (delta0 * scale)).max()),
                        l1 / (delta0 * scale[0]), l2 / delta0)


# --------------------------------------------------------------------------
# gradient estimate

def disk_quadrature(center: complex, radius: float, nr: int = 48, nt: int = 96):
    g, w = leggauss(nr)
    r = 0.5 * radius * (g + 1)
    wr = 0.5 * radius * w * r
    th = 2 * math.pi * np.arange(nt) / nt
    Z = center + r[:, None] * np.exp(1j * th)[None, :]
    W = wr[:, None] * (2 * math.pi / nt) * np.ones((1, nt))
    return Z, W


@dataclass
class GradientReport:
    t: float
    gradients: np.ndarray
    im_norms: np.ndarray
    ratios: np.ndarray

    @property
    def c_t(self) -> float:
        return float(self.ratios.max()) if len(self.ratios) else 0.0


def gradient_estimate_check(f, points, radii, t: float = 1.0, step: float = 1e-5) -> GradientReport:
    """|grad f(x)| against ||Im f||_2 on the disk of radius t r(x) about x.

    ``f`` is evaluated in a flat chart around each point (vectorised over
    complex arrays) and ``radii`` are the embedded singularity-free radii
    r(x), e.g. from the distance field.  For holomorphic f the gradient norm is
    |f'|, estimated by a central difference of width ``step * r(x)``.
    """
    if not 0 < t <= 1:
        raise BadParams("t must lie in (0, 1]")
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    rad = np.broadcast_to(np.asarray(radii, float), pts.shape)
    grads, ims = [], []
    for x, r in zip(pts, rad):
        eta = step * r
        if not r > 0 or eta <= 1e-14 * max(1.0, abs(x)):
            raise DiskNotEmbedded(f"radius {r:.3g} at {x} is below the sampling stencil")
        d = (f(np.array([x + eta])) - f(np.array([x - eta])))[0] / (2 * eta)
        Z, W = disk_quadrature(x, t * r)
        ims.append(math.sqrt((W * np.imag(f(Z)) ** 2).sum()))
        grads.append(abs(d))
    grads, ims = np.array(grads), np.array(ims)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(grads == 0, 0.0, grads / ims)
    return GradientReport(t, grads, ims, ratios)


# --------------------------------------------------------------------------
# mesh fields: point location and efficient paths

class MeshLocator:
    """Find the mesh triangle containing a point given in polygon coordinates."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.poly, self.P = mesh.polygon_charts()

    def locate(self, p: int, z: complex, periods=()) -> int:
        """Triangle index; ``periods`` are translations tried when a point sits on a seam."""
        best = None
        for w in (0,) + tuple(periods) + tuple(-q for q in periods):
            k, worst = self._locate(p, z + w)
            if worst >= -1e-9:
                return k
            if best is None or worst > best[1]:
                best = (k, worst)
        if best[1] < -1e-6:
            raise BadParams(f"point {z} is not inside polygon {p}")
        return best[0]

    def _locate(self, p, z):
        cand = np.nonzero(self.poly == p)[0]
        if len(cand) == 0:
            raise BadParams(f"no triangles in polygon {p}")
        a, b, c = self.P[cand, 0], self.P[cand, 1], self.P[cand, 2]
        cr = lambda u, v: (u.conjugate() * v).imag
        area = cr(b - a, c - a)
        l1 = cr(c - b, z - b) / area
        l2 = cr(a - c, z - c) / area
        l3 = 1 - l1 - l2
        worst = np.minimum(np.minimum(l1, l2), l3)
        k = int(np.argmax(worst))
        return int(cand[k]), float(worst[k])

    def centroids(self):
        return self.poly, self.P.mean(axis=1)


def _as_triangle(locator: MeshLocator, x) -> int:
    if isinstance(x, (int, np.integer)):
        return int(x)
    p, z = x
    return locator.locate(int(p), complex(*z) if isinstance(z, tuple) else complex(z))


def _dual_edges(mesh):
    t = np.repeat(np.arange(mesh.n_triangles), 3)
    u = mesh.tri.nbr.ravel()
    return t, u


def max_clearance(mesh, t1: int, t2: int, clearance: np.ndarray) -> float:
    """Largest r such that t1 and t2 are joined through triangles with clearance >= r."""
    order = np.argsort(-clearance, kind="stable")
    parent = np.arange(mesh.n_triangles)
    active = np.zeros(mesh.n_triangles, dtype=bool)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    nbr = mesh.tri.nbr
    for t in order:
        active[t] = True
        for u in nbr[t]:
            if active[u]:
                ra, rb = find(t), find(u)
                if ra != rb:
                    parent[ra] = rb
        if active[t1] and active[t2] and find(t1) == find(t2):
            return float(clearance[t])
    raise NoPathFound("points lie on different components")


def _connected(mesh, t1, t2, keep) -> bool:
    if not (keep[t1] and keep[t2]):
        return False
    seen = np.zeros(mesh.n_triangles, dtype=bool)
    seen[t1] = True
    work = deque([t1])
    nbr = mesh.tri.nbr
    while work:
        t = work.popleft()
        if t == t2:
            return True
        for u in nbr[t]:
            if keep[u] and not seen[u]:
                seen[u] = True
                work.append(u)
    return False


@dataclass
class PathReport:
    difference: float             # |f(x1) - f(x2)|
    clearance: float              # r
    im_norm: float                # ||Im f||_2
    ratio: float                  # difference * r / im_norm
    triangles: tuple


def efficient_path_check(mesh, values, x1, x2, r: float | None = None) -> PathReport:
    """|f(x1) - f(x2)| r / ||Im f||_2 along a path keeping distance r from cone points.

    Points are triangle indices or ``(polygon, point)`` pairs.  Without ``r``
    the largest admissible clearance is used.
    """
    values = np.asarray(values, dtype=complex)
    loc = MeshLocator(mesh)
    t1, t2 = _as_triangle(loc, x1), _as_triangle(loc, x2)
    clear = mesh.singular_distance()
    if r is None:
        r = max_clearance(mesh, t1, t2, clear) if t1 != t2 else float(clear[t1])
    elif not _connected(mesh, t1, t2, clear >= r):
        raise NoPathFound(f"no path with clearance {r:.4g}")
    A = mesh.area_t
    im = math.sqrt((A * values.imag ** 2).sum())
    diff = abs(values[t1] - values[t2])
    ratio = 0.0 if diff == 0 else (diff * r / im if im > 0 else math.inf)
    return PathReport(float(diff), float(r), im, float(ratio), (t1, t2))


def value_diameter(values) -> float:
    """Largest pairwise distance in a set of complex values."""
    v = np.unique(np.round(np.asarray(values, dtype=complex), 15))
    if len(v) < 2:
        return 0.0
    pts = np.stack([v.real, v.imag], axis=1)
    if len(v) > 3:
        from scipy.spatial import ConvexHull
        try:
            pts = pts[ConvexHull(pts).vertices]
        except Exception:  # degenerate (collinear) clouds
            pass
    d = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((d ** 2).sum(-1)).max())


# --------------------------------------------------------------------------
# genus-2 walkthrough

REGIONS = ("T", "U", "A", "E", "M")


def genus2_regions(mesh, S: float, s: float, L: float, b: float):
    """Label each triangle T, U, A, E or M from its centroid.

    Polygon 0 is the slit torus (slit along ``y = 0``, ``0 <= x <= 2 pi s``)
    and polygon 1 the cylinder ``[0, 2 pi s] x [0, 2L]``.  Returns labels,
    distance to the slit and distance to the cone point per triangle.
    """
    a = 2 * math.pi * s
    B = 1.0 / b
    poly, P = mesh.polygon_charts()
    cen = P.mean(axis=1)
    X, Y = cen.real, cen.imag
    d_slit = np.empty(len(cen))
    d_cone = np.empty(len(cen))
    tor = poly == 0
    # torus: nearest lattice image of the slit segment and its endpoints
    xt, yt = np.mod(X[tor], S), np.mod(Y[tor], S)
    ds = np.full(xt.shape, np.inf)
    dc = np.full(xt.shape, np.inf)
    for kx in (-1, 0, 1):
        for ky in (-1, 0, 1):
            px, py = xt + kx * S, yt + ky * S
            cx = np.clip(px, 0, a)
            ds = np.minimum(ds, np.hypot(px - cx, py))
            dc = np.minimum(dc, np.minimum(np.hypot(px, py), np.hypot(px - a, py)))
    d_slit[tor], d_cone[tor] = ds, dc
    cyl = ~tor
    xc = np.mod(X[cyl], a)
    yc = Y[cyl]
    dy = np.minimum(np.abs(yc), np.abs(2 * L - yc))
    d_slit[cyl] = dy
    d_cone[cyl] = np.hypot(np.minimum(xc, a - xc), dy)
    lab = np.empty(len(cen), dtype="<U1")
    lab[tor & (d_slit >= b * S)] = "T"
    lab[tor & (d_slit < b * S)] = "M"
    lab[cyl] = "A"
    lab[d_slit < B * s] = "E"
    lab[d_cone < b * s] = "U"
    return lab, d_slit, d_cone


@dataclass
class WalkthroughRow:
    region: str
    area: float
    boundary_sup: float
    integral: float               # |int_V g |q||
    norm2: float                  # int_V |g|^2 |q|
    predicted: tuple              # predicted bounds for the four columns
    ratios: tuple                 # computed / predicted (None where predicted is 0)


@dataclass
class WalkthroughReport:
    S: float
    s: float
    L: float
    b: float
    case: int
    delta: float
    delta_hat: float
    d: float
    fhat0: complex
    f_pT: complex
    rows: list
    steps: dict
    areas: dict
    integral_A_residual: float    # |int_A (f - f^(0))| / int_A |f|
    n_triangles: int = 0
    extra: dict = field(default_factory=dict)

    def table(self) -> str:
        head = f"{'V':<3}{'Area':>12}{'(pred)':>10}{'sup|g| bd':>12}{'(pred)':>10}" \
               f"{'|int g|':>12}{'(pred)':>10}{'int|g|^2':>12}{'(pred)':>10}"
        lines = [f"case {self.case}: g = " + ("f - f^(0)" if self.case == 1 else "f - f(p_T)"),
                 f"delta = {self.delta:.6g}, d = {self.d:.6g}, delta_hat = {self.delta_hat:.6g}", head]
        for r in self.rows:
            vals = [r.area, r.predicted[0], r.boundary_sup, r.predicted[1], r.integral, r.predicted[2],
                    r.norm2, r.predicted[3]]
            lines.append(f"{r.region:<3}" + "".join(f"{v:>12.4g}" if k % 2 == 0 else f"{v:>10.3g}"
                                                    for k, v in enumerate(vals)))
        lines.append("steps: " + ", ".join(f"{k}={v:.4g}" for k, v in self.steps.items()))
        return "\n".join(lines)

    def csv_rows(self):
        out = [["region", "area", "area_pred", "boundary_sup", "boundary_pred", "abs_integral",
                "integral_pred", "norm2", "norm2_pred"]]
        for r in self.rows:
            out.append([r.region, r.area, r.predicted[0], r.boundary_sup, r.predicted[1], r.integral,
                        r.predicted[2], r.norm2, r.predicted[3]])
        return out


def _boundary_mask(mesh, inside: np.ndarray) -> np.ndarray:
    nb = inside[mesh.tri.nbr]
    return inside & ~nb.all(axis=1)


def cylinder_fhat0(mesh, locator: MeshLocator, values, s: float, L: float, b: float,
                   circles: int = 9, points: int = 16) -> LaurentSeries:
    """Constant Laurent coefficient f^(0) of the mesh field on the cylinder.

    Every circle has mean f^(0); the non-constant modes decay like
    e^{-|n| (L - |x|) / s} away from the ends, so only the central half of the
    annulus is sampled and a degree-0 fit (the weighted circle mean) is used.
    """
    a = 2 * math.pi * s
    half = 0.5 * (L - s / b)
    if half <= 0:
        raise BadParams("cylinder too short for the core annulus")
    coords = CylinderCoords(s, L)
    xs = np.linspace(-half, half, circles)
    F = np.empty((circles, points), dtype=complex)
    for k, xp in enumerate(xs):
        for m in range(points):
            X = (-a * m / points) % a  # the circle coordinate runs against the polygon's x
            F[k, m] = values[locator.locate(1, complex(X, xp + L), periods=(a,))]
    return laurent_fit(xs, F, coords, 0)


def _predicted(case: int, S, s, L, delta, dhat):
    if case == 1:
        return {"A": (1.0, delta / s, 0.0, dhat ** 2),
                "E": (s * s, delta / s, s * delta, delta ** 2),
                "U": (s * s, delta / s, s * delta, dhat ** 2),
                "M": (S * S, delta / s, S * dhat, dhat ** 2),
                "T": (S * S, delta / s, S * dhat, dhat ** 2)}
    return {"T": (1.0, delta, delta, delta ** 2),
            "E": (s * s, delta / s, s * delta, delta ** 2),
            "U": (s * s, delta / s, s * dhat, dhat ** 2),
            "M": (1.0, delta / s, delta, delta ** 2),
            "A": (L * s, delta / s, delta * L, delta ** 2 + dhat ** 2)}


def walkthrough_case(S: float, s: float, L: float) -> int:
    """Case 1 when s/S >= sqrt(s/L) (the cylinder is at least as big), else case 2."""
    return 1 if s / S >= math.sqrt(s / L) else 2


def genus2_walkthrough(S: float, s: float, L: float, b: float = 0.25, h: float | None = None,
                       mesh=None, gap=None, pair_samples: int = 1500, seed: int = 0) -> WalkthroughReport:
    """Evaluate every cell of the region tables on the near-minimising field."""
    from .hodge import harmonic_basis, refine_mesh, spectral_gap
    from .surface import genus2_example
    if not 0 < b < 0.5:
        raise BadParams("b must lie in (0, 1/2)")
    surf = genus2_example(S, s, L)
    if mesh is None:
        h = h or min(S / 20, 2 * math.pi * s / 4)
        mesh = refine_mesh(surf, h)
    if gap is None:
        gap = spectral_gap(mesh, harmonic_basis(mesh, star_check=False))
    f = gap.argmin_field.values
    A = mesh.area_t
    f = f / math.sqrt((A * np.abs(f) ** 2).sum())
    delta = math.sqrt((A * f.imag ** 2).sum())
    d = max(s / S, math.sqrt(s / L))
    dhat = delta / d
    case = walkthrough_case(S, s, L)
    lab, d_slit, d_cone = genus2_regions(mesh, S, s, L, b)
    loc = MeshLocator(mesh)
    series = cylinder_fhat0(mesh, loc, f, s, L, b)
    f0 = series[0]
    a = 2 * math.pi * s
    pT = loc.locate(0, periods=(S, 1j * S), z=complex(0.5 * (a + S) if a < S / 2 else 0.5 * S, 0.5 * S))
    fpT = complex(f[pT])
    g = f - (f0 if case == 1 else fpT)
    pred = _predicted(case, S, s, L, delta, dhat)
    order = ("A", "E", "U", "M", "T") if case == 1 else ("T", "E", "U", "M", "A")
    rows, areas = [], {}
    for V in order:
        m = lab == V
        areas[V] = float(A[m].sum())
        bd = _boundary_mask(mesh, m)
        if V == "U":
            bd &= d_cone > 0.5 * b * s  # the outer circle, away from the cone point
        sup = float(np.abs(g[bd]).max()) if bd.any() else 0.0
        integ = float(abs((A[m] * g[m]).sum()))
        n2 = float((A[m] * np.abs(g[m]) ** 2).sum())
        vals = (areas[V], sup, integ, n2)
        ratios = tuple(None if p == 0 else v / p for v, p in zip(vals, pred[V]))
        rows.append(WalkthroughRow(V, *vals, pred[V], ratios))
    inA = lab == "A"
    resid = float(abs((A[inA] * (f[inA] - f0)).sum()) / max((A[inA] * np.abs(f[inA])).sum(), 1e-300))
    rng = np.random.default_rng(seed)

    def osc(mask):
        return value_diameter(f[mask])

    steps = {}
    steps["step1_osc_T_times_S_over_delta"] = osc(lab == "T") * S / delta
    steps["step2_4piLs_fhat0_sq"] = 4 * math.pi * L * s * abs(f0) ** 2
    steps["step3_supA_times_sqrtLs_over_delta"] = float(np.abs(f[inA] - f0).max()) * math.sqrt(L * s) / delta
    steps["step4_supT_times_S"] = float(np.abs(f[lab == "T"]).max()) * S
    for V in ("U", "M"):
        idx = np.nonzero(lab == V)[0]
        if len(idx) > pair_samples:
            idx = rng.choice(idx, pair_samples, replace=False)
        if len(idx) >= 2:
            diff = np.abs(f[idx][:, None] - f[idx][None, :])
            near = np.minimum(d_cone[idx][:, None], d_cone[idx][None, :])
            steps[f"step5_{V}"] = float((diff * near).max() / delta)
    steps["step6_osc_E_times_s_over_delta"] = osc(lab == "E") * s / delta
    steps["step7_osc_AETM_times_s_over_delta"] = osc(np.isin(lab, ["A", "E", "T", "M"])) * s / delta
    return WalkthroughReport(S, s, L, b, case, delta, dhat, d, f0, fpT, rows, steps, areas, resid,
                             mesh.n_triangles, {"series": series})


# --------------------------------------------------------------------------
# randomized suites (one row per trial)

@dataclass
class SuiteResult:
    name: str
    rows: list                    # dicts, one per trial (and parameter point)
    summary: dict

    def csv_rows(self):
        keys = list(self.rows[0]) if self.rows else []
        return [keys] + [[r[k] for k in keys] for r in self.rows]


def cylinder_suite(trials: int = 5, seed: int = 0, ratios=(10, 20, 40), N: int = 4, eps: float = 1e-2,
                   b: float = 0.25, s: float = 1.0) -> SuiteResult:
    """Cylinder constants for f = a + eps * (decaying random series) over several L / s.

    The same random coefficients are reused at every L / s (rescaled by
    e^{-|n| L / s}) so the constants can be compared across moduli.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for k in range(trials):
        a0 = rng.uniform(0.5, 2.0)
        c = rng.standard_normal(2 * N + 1) + 1j * rng.standard_normal(2 * N + 1)
        c[N] = 0
        for q in ratios:
            coords = CylinderCoords(s, q * s)
            n = np.arange(-N, N + 1)
            coef = eps * c * np.exp(-np.abs(n) * coords.L / s)
            coef[N] = a0
            rep = cylinder_lemma_check(LaurentSeries(coef), coords, b=b)
            rows.append({"trial": k, "L_over_s": q, "C_a": rep.C_a, "C_c": rep.C_c, "C_decay": rep.C_decay,
                         "average_error": rep.average_error})
    summary = {}
    for key in ("C_a", "C_c", "C_decay"):
        worst = [max(r[key] for r in rows if r["L_over_s"] == q) for q in ratios]
        summary[key] = dict(zip(ratios, worst))
        summary[key + "_spread"] = max(worst) / min(worst) if min(worst) > 0 else math.inf
    return SuiteResult("cylinder", rows, summary)


def shells_suite(trials: int = 50, seed: int = 0, j0: int = 0, N: int = 5, R: float = 1.0,
                 degree: int = 2) -> SuiteResult:
    """Shell constants for random holomorphic functions on conical annuli.

    A function holomorphic in the cone chart is a Laurent series in
    ``w = z^{2 pi / theta}``; cone angle theta is drawn from {2pi, 4pi, 6pi}.
    """
    rng = np.random.default_rng(seed)
    rows = []
    part_cache = {}
    for k in range(trials):
        theta = 2 * math.pi * int(rng.integers(1, 4))
        kap = 2 * math.pi / theta
        a = (rng.standard_normal(2 * degree + 1) + 1j * rng.standard_normal(2 * degree + 1))
        a *= np.exp(rng.uniform(-2, 2, 2 * degree + 1))

        def f(r, t, a=a, kap=kap):
            w = (r / R) ** kap * np.exp(1j * kap * t)
            return sum(a[n + degree] * w ** n for n in range(-degree, degree + 1))

        part = part_cache.get(theta) or part_cache.setdefault(theta, shell_partition(R, j0, N, theta))
        r_in, r_out = part.shells[-1].r_lo, part.shells[0].r_hi
        vals, rad, w = polar_samples(f, r_in, r_out, theta, nr=160, nt=96)
        rep = shells_check(vals, rad, w, part)
        rows.append({"trial": k, "cone_angle_over_pi": theta / math.pi, "hypotheses": rep.hypotheses_hold,
                     "C_a": rep.C_a, "C_b": rep.C_b, "C_c": rep.C_c})
    summary = {key: float(max(r[key] for r in rows)) for key in ("C_a", "C_b", "C_c")}
    summary["all_hypotheses"] = all(r["hypotheses"] for r in rows)
    return SuiteResult("shells", rows, summary)


def gradient_suite(trials: int = 100, seed: int = 0, t: float = 0.5, degrees=(1, 2, 3, 4)) -> SuiteResult:
    """Gradient ratios; row 0 is f(z) = z on the unit disk with t = 1 (ratio 2 / sqrt(pi)).

    The other rows use random polynomials (degrees cycling through
    ``degrees``) at random centres and radii, and report the scale-free ratio
    |f'(x)| r^2 / ||Im f||_{D(x, t r)}.
    """
    rng = np.random.default_rng(seed)
    rep = gradient_estimate_check(lambda z: z, [0j], [1.0], t=1.0)
    rows = [{"trial": 0, "degree": 1, "t": 1.0, "radius": 1.0, "ratio": float(rep.ratios[0]),
             "scaled_ratio": float(rep.ratios[0])}]
    for k in range(1, trials):
        d = degrees[(k - 1) % len(degrees)]
        c = rng.standard_normal(d + 1) + 1j * rng.standard_normal(d + 1)
        f = lambda z, c=c: np.polyval(c, z)
        x = complex(*rng.uniform(-1, 1, 2))
        r = float(rng.uniform(0.1, 2.0))
        rep = gradient_estimate_check(f, [x], [r], t=t)
        rows.append({"trial": k, "degree": d, "t": t, "radius": r, "ratio": float(rep.ratios[0]),
                     "scaled_ratio": float(rep.ratios[0] * r * r)})
    per_degree = {d: max(r["scaled_ratio"] for r in rows[1:] if r["degree"] == d) for d in degrees
                  if any(r["degree"] == d for r in rows[1:])}
    summary = {"unit_disk_ratio": rows[0]["ratio"], "exact": 2 / math.sqrt(math.pi),
               "max_scaled_ratio": max(r["scaled_ratio"] for r in rows[1:]) if len(rows) > 1 else 0.0,
               "per_degree": per_degree,
               "degree_spread": (max(per_degree.values()) / min(per_degree.values())) if per_degree else 1.0}
    return SuiteResult("gradient", rows, summary)
