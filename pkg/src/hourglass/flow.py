"""Teichmuller-flow traces: H, systole, delta and Hodge log-derivatives over time.

Geometry (hourglass ratio, systole, area) is recomputed from the flowed
surface at every sample.  Hodge quantities use one mesh built at ``t_start``;
later samples flow its charts, restore the Delaunay property by edge flips and
carry the tracked cochains through each flip, so every row refers to the same
cohomology classes.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .decomposition import PADParams, build_pad, hourglass_ratio
from .errors import BadParams, HourglassError, OrthogonalizationFailed
from .geometry import systole
from .hodge import (Mesh, flow_derivative_fd, forni_derivative, harmonic_basis, hodge_gram,
                    refine_mesh, spectral_gap)
from .surface import apply_flow, orienting_double_cover

AREA_TOL = 1e-9
ORTH_TOL = 1e-6
FD_TOL = 1e-2


@dataclass
class FlowSample:
    t: float
    H: float
    kappa: float
    delta: float
    area: float
    dlog: list
    flags: list = field(default_factory=list)


@dataclass
class FlowTrace:
    samples: list
    params: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.samples[0].dlog) if self.samples else 0

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples], dtype=float)

    def dlogs(self) -> np.ndarray:
        return np.array([s.dlog for s in self.samples], dtype=float).reshape(len(self.samples), self.k)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def trace_to_csv(trace: FlowTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "H", "kappa", "delta", "area"] + [f"dlog_{i + 1}" for i in range(trace.k)] + ["flags"])
    for s in trace.samples:
        w.writerow([_fmt(s.t), _fmt(s.H), _fmt(s.kappa), _fmt(s.delta), _fmt(s.area)]
                   + [_fmt(v) for v in s.dlog] + [";".join(s.flags)])
    return buf.getvalue()


def trace_from_csv(text: str) -> FlowTrace:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise BadParams("empty trace")
    head = rows[0]
    if head[:5] != ["t", "H", "kappa", "delta", "area"] or head[-1] != "flags":
        raise BadParams(f"unexpected trace header {head}")
    k = len(head) - 6
    if [f"dlog_{i + 1}" for i in range(k)] != head[5:-1]:
        raise BadParams("dlog columns out of order")
    out = []
    for r in rows[1:]:
        if not r:
            continue
        if len(r) != len(head):
            raise BadParams(f"row has {len(r)} fields, expected {len(head)}")
        v = [float(x) for x in r[:-1]]
        out.append(FlowSample(v[0], v[1], v[2], v[3], v[4], v[5:], [f for f in r[-1].split(";") if f]))
    return FlowTrace(out)


# --------------------------------------------------------------------------
# tracked classes

def transport(mesh: Mesh, cochains: np.ndarray, t: float, max_flips: int = 1_000_000):
    """Flow ``mesh`` by ``t``, make it Delaunay and carry edge cochains along."""
    tri = mesh.tri.flowed(t)
    C = np.asarray(cochains, float)
    C = C[:, None] if C.ndim == 1 else C
    halves = [mesh.half(C[:, k]).copy() for k in range(C.shape[1])]
    tri.make_delaunay(max_flips=max_flips, cochains=halves)
    new = Mesh(tri, mesh.h, surface=mesh.surface, route=mesh.route, translation=mesh.translation)
    out = np.empty((new.n_edges, C.shape[1]))
    rt = np.array([r[0] for r in new.reps])
    ri = np.array([r[1] for r in new.reps])
    for k, hc in enumerate(halves):
        out[:, k] = hc[rt, ri]
    return new, out


def omega_classes(mesh: Mesh) -> np.ndarray:
    """Cochains of Re omega = dx and Im omega = dy."""
    return np.stack([mesh.constant_form(1, 0), mesh.constant_form(0, 1)], axis=1)


def orthogonal_classes(mesh: Mesh, k: int | None = None, basis=None) -> np.ndarray:
    """Hodge-orthonormal basis of the complement of {[Re omega], [Im omega]}."""
    basis = basis or harmonic_basis(mesh, star_check=False)
    H = basis.cochains
    Om = mesh.harmonic_part(omega_classes(mesh))
    Go = hodge_gram(mesh, Om)
    # remove the omega components, then orthonormalise what is left
    Hp = H - Om @ np.linalg.solve(Go, hodge_gram(mesh, np.concatenate([Om, H], axis=1))[:2, 2:])
    G = hodge_gram(mesh, Hp)
    w, U = np.linalg.eigh(G)
    keep = w > 1e-9 * w.max()
    if keep.sum() != H.shape[1] - 2:
        raise OrthogonalizationFailed(f"complement has dimension {keep.sum()}, expected {H.shape[1] - 2}")
    U = U[:, keep][:, ::-1] / np.sqrt(w[keep][::-1])
    C = Hp @ U
    return C if k is None else C[:, :k]


def class_mesh(surface, h: float, **kw):
    """Mesh carrying the tracked classes.

    Translation surfaces are meshed directly.  Other surfaces are replaced by
    their orienting double cover, on which omega is a genuine 1-form; the
    tracked classes then live in its cohomology.
    """
    if surface.is_square:
        return refine_mesh(surface, h, **kw), "H1"
    cover = orienting_double_cover(surface).surface
    return refine_mesh(cover, h, **kw), "H1(cover)"


def orthogonality_residual(mesh: Mesh, C: np.ndarray) -> np.ndarray:
    """|<c, Re omega>|, |<c, Im omega>| relative to the norms, per class."""
    if C.shape[1] == 0:
        return np.zeros(0)
    Om = omega_classes(mesh)
    G = hodge_gram(mesh, np.concatenate([Om, C], axis=1))
    d = np.sqrt(np.diag(G))
    R = np.abs(G[:2, 2:]) / np.outer(d[:2], d[2:])
    return R.max(axis=0)


# --------------------------------------------------------------------------
# traces

def _sample_times(t_start, t_end, dt):
    n = int(math.floor((t_end - t_start) / dt + 1e-9))
    ts = [t_start + i * dt for i in range(n + 1)]
    if t_end - ts[-1] > 1e-9 * max(1.0, abs(t_end)):
        ts.append(t_end)
    return ts


def trace_flow(surface, t_start: float, t_end: float, dt_sample: float, params: PADParams | None = None,
               h: float | None = None, gap: bool = False, classes=None, fd: bool = True,
               surface_id: str = "") -> FlowTrace:
    """Sample H, systole, delta, area and the tracked log-derivatives along g_t.

    ``classes`` is ``None`` (all of the omega-orthogonal complement), an
    integer (that many of them) or an explicit cochain matrix on the mesh at
    ``t_start``.  Per-sample failures are recorded in the flags column.
    """
    if not t_start < t_end:
        raise BadParams("need t_start < t_end")
    if not dt_sample > 0:
        raise BadParams("dt_sample must be positive")
    params = params or PADParams()
    base = apply_flow(surface, t_start)
    area0 = base.area
    h = h or 0.1 * math.sqrt(area0)
    mesh0, convention = class_mesh(base, h)
    if classes is None or isinstance(classes, (int, np.integer)):
        C0 = orthogonal_classes(mesh0, None if classes is None else int(classes))
    else:
        C0 = np.asarray(classes, float).reshape(mesh0.n_edges, -1)
    k = C0.shape[1]
    samples = []
    for t in _sample_times(t_start, t_end, dt_sample):
        flags = []
        X = apply_flow(surface, t)
        area = X.area
        if abs(area - area0) > AREA_TOL * max(1.0, area0):
            flags.append("area")
        H = kappa = delta = math.nan
        try:
            H = hourglass_ratio(X, build_pad(X, params)).value
        except HourglassError as exc:
            flags.append(f"H:{type(exc).__name__}")
        try:
            kappa = systole(X)[0]
        except HourglassError as exc:
            flags.append(f"kappa:{type(exc).__name__}")
        dl = [math.nan] * k
        try:
            mesh, C = transport(mesh0, C0, t - t_start) if t != t_start else (mesh0, C0)
            res = orthogonality_residual(mesh, C)
            for i in range(k):
                if res[i] > ORTH_TOL:
                    flags.append(f"nonorth:{i + 1}")
                dl[i] = forni_derivative(mesh, C[:, i])
                if fd:
                    d2 = flow_derivative_fd(mesh, C[:, i])
                    if abs(d2 - dl[i]) > FD_TOL:
                        flags.append(f"fd:{i + 1}")
            if gap:
                delta = spectral_gap(mesh, eps_check=False).delta
        except HourglassError as exc:
            flags.append(f"hodge:{type(exc).__name__}")
        samples.append(FlowSample(t, H, kappa, delta, area, dl, flags))
    return FlowTrace(samples, {"surface": surface_id or surface.name, "mu0": params.mu0, "B": params.B,
                               "h": h, "dt": dt_sample, "classes": convention, "k": k})


# --------------------------------------------------------------------------
# integrals and the audit

def trapezoid(t, y) -> float:
    t, y = np.asarray(t, float), np.asarray(y, float)
    return float((0.5 * (y[1:] + y[:-1]) * np.diff(t)).sum())


def integral_h_squared(trace: FlowTrace):
    """Trapezoid integrals of H^2 and kappa^2 over the trace."""
    if len(trace.samples) < 2:
        raise BadParams("need at least two samples")
    t = trace.column("t")
    return trapezoid(t, trace.column("H") ** 2), trapezoid(t, trace.column("kappa") ** 2)


def halving_change(trace: FlowTrace):
    """Relative change of both integrals when every other sample is dropped.

    The coarse trace keeps the end points, so it has twice the spacing of the
    original; the change estimates the trapezoid error of the fine trace.
    """
    n = len(trace.samples)
    if n < 3:
        raise BadParams("need at least three samples")
    idx = list(range(0, n, 2))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    coarse = FlowTrace([trace.samples[i] for i in idx], trace.params)
    a, b = integral_h_squared(trace), integral_h_squared(coarse)
    return tuple(abs(x - y) / max(abs(x), 1e-300) for x, y in zip(a, b))


@dataclass
class AuditResult:
    margins: np.ndarray           # (samples, classes): (1 - |dlog|) / H^2
    c: float
    passed: bool
    systole_margins: np.ndarray   # (1 - |dlog|) / kappa^2
    c_systole: float
    systole_passed: bool
    classes: tuple = ()


def hodge_gap_audit(trace: FlowTrace, classes=None) -> AuditResult:
    """Fit the largest c with |d/dt log ||alpha||| <= 1 - c H^2 at every sample.

    Samples flagged as not orthogonal to {Re omega, Im omega} for an audited
    class make the comparison meaningless and are rejected.
    """
    k = trace.k
    cols = tuple(range(k)) if classes is None else tuple(int(c) for c in classes)
    if not cols:
        raise BadParams("no classes to audit")
    if any(c < 0 or c >= k for c in cols):
        raise BadParams(f"class index out of range 0..{k - 1}")
    for s in trace.samples:
        for c in cols:
            if f"nonorth:{c + 1}" in s.flags:
                raise OrthogonalizationFailed(
                    f"class {c + 1} is not Hodge-orthogonal to Re omega, Im omega at t = {s.t:.6g}")
    D = np.abs(trace.dlogs()[:, cols])
    H = trace.column("H")[:, None]
    K = trace.column("kappa")[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        M = (1 - D) / H ** 2
        Mk = (1 - D) / K ** 2
    c = float(M.min()) if np.isfinite(M).all() else math.nan
    ck = float(Mk.min()) if np.isfinite(Mk).all() else math.nan
    return AuditResult(M, c, bool(np.isfinite(M).all() and c > 0), Mk, ck,
                       bool(np.isfinite(Mk).all() and ck > 0), cols)
