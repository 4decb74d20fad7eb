"""Property tests for the invariants every component has to respect."""
import math
from fractions import Fraction

import numpy as np
from hypothesis import HealthCheck, given, settings, strategies as st

from hourglass.analytic import CylinderCoords, LaurentSeries, laurent_fit, parseval_check, sample_cylinder
from hourglass.flow import FlowSample, FlowTrace, hodge_gap_audit, trapezoid
from hourglass.geometry import enumerate_saddle_connections
from hourglass.hodge import format_matrix, hodge_gram, parse_matrix
from hourglass.surface import apply_flow, standard_surface

SLOW = settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
FAST = settings(max_examples=60, deadline=None)

times = st.floats(-1.5, 1.5, allow_nan=False)
sides = st.fractions(Fraction(1, 3), Fraction(3), max_denominator=12)


def corners(X):
    return np.array([complex(float(x), float(y)) for p in X.polygons for x, y in p])


@FAST
@given(times, times)
def test_flow_composes(s, t):
    X = standard_surface("RegularOctagon")
    a = corners(apply_flow(apply_flow(X, s), t))
    b = corners(apply_flow(X, s + t))
    assert np.abs(a - b).max() <= 1e-9 * np.abs(b).max()


@FAST
@given(times)
def test_flow_preserves_area(t):
    X = standard_surface("RegularOctagon")
    assert math.isclose(float(apply_flow(X, t).area), float(X.area), rel_tol=1e-12)


@FAST
@given(sides, sides)
def test_rect_torus_gauss_bonnet(w, h):
    X = standard_surface("RectTorus", w, h)
    assert X.genus == 1 and X.gauss_bonnet_defect() == 0
    assert math.isclose(X.area, float(w * h), rel_tol=1e-15)


@settings(max_examples=12, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.floats(1.0, 2.6))
def test_torus_lattice(p, q, bound):
    # the holonomies on the p x q rectangle torus are exactly the primitive (p a, q b)
    X = standard_surface("RectTorus", p, q)
    hol = {(round(float(c.holonomy.real), 9), round(float(c.holonomy.imag), 9))
           for c in enumerate_saddle_connections(X, bound, oriented=True)}
    want = {(float(p * a), float(q * b)) for a in range(-3, 4) for b in range(-3, 4)
            if math.gcd(a, b) == 1 and math.hypot(p * a, q * b) <= bound}
    assert hol == want


def coef_arrays(N):
    part = st.floats(-1, 1, allow_nan=False)
    return st.lists(st.tuples(part, part), min_size=2 * N + 1, max_size=2 * N + 1)


@FAST
@given(coef_arrays(3), st.floats(0.5, 2.0), st.floats(0.5, 2.0))
def test_fit_recovers_series(pairs, s, L):
    c = CylinderCoords(s, L)
    coef = np.array([a + 1j * b for a, b in pairs]) * np.exp(-np.abs(np.arange(-3, 4)) * L / s)
    g = LaurentSeries(coef)
    xs, F = sample_cylinder(lambda x, y: g.on_cylinder(c, x, y), c, 3)
    f = laurent_fit(xs, F, c, 3)
    assert np.abs(f.coef - g.coef).max() <= 1e-8 * max(1.0, np.abs(g.coef).max())


@FAST
@given(coef_arrays(2), st.floats(0.5, 2.0), st.floats(0.5, 3.0))
def test_parseval(pairs, s, L):
    c = CylinderCoords(s, L)
    g = LaurentSeries(np.array([a + 1j * b for a, b in pairs]) * np.exp(-np.abs(np.arange(-2, 3)) * L / s))
    if np.abs(g.coef).max() > 0:
        assert parseval_check(g, c) <= 1e-6


@SLOW
@given(st.lists(st.floats(-2, 2, allow_nan=False), min_size=4, max_size=4))
def test_gram_congruence(octagon_mesh, octagon_basis, entries):
    A = np.array(entries).reshape(2, 2)
    C = octagon_basis.cochains[:, :2]
    G = hodge_gram(octagon_mesh, C)
    np.testing.assert_allclose(hodge_gram(octagon_mesh, C @ A), A.T @ G @ A, atol=1e-9 * (1 + np.abs(G).max()))


@FAST
@given(st.lists(st.tuples(st.floats(0.05, 2), st.floats(-0.99, 0.99)), min_size=1, max_size=8),
       st.floats(0.1, 10))
def test_audit_scaling(rows, lam):
    mk = lambda k: FlowTrace([FlowSample(float(i), k * H, k * H, math.nan, 1.0, [d])
                              for i, (H, d) in enumerate(rows)])
    a, b = hodge_gap_audit(mk(1.0)), hodge_gap_audit(mk(lam))
    assert math.isclose(b.c * lam ** 2, a.c, rel_tol=1e-9)
    assert a.passed and b.passed


@FAST
@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=20, unique=True))
def test_trapezoid_overestimates_convex(ts):
    t = np.sort(np.array(ts))
    exact = (t[-1] ** 3 - t[0] ** 3) / 3
    assert trapezoid(t, t ** 2) >= exact - 1e-15


@FAST
@given(st.integers(1, 4), st.integers(1, 4), st.randoms(use_true_random=False))
def test_matrix_text_roundtrip(n, m, rnd):
    M = np.array([[rnd.uniform(-1e3, 1e3) for _ in range(m)] for _ in range(n)])
    np.testing.assert_array_equal(parse_matrix(format_matrix(M)), M)
