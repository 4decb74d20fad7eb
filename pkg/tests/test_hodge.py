import math
from fractions import Fraction

import numpy as np
import pytest

from hourglass import genus2_example, orienting_double_cover, standard_surface
from hourglass.errors import BadParams
from hourglass.hodge import (closed_form_torus_gram, flow_derivative_fd, format_matrix, forni_derivative,
                             harmonic_basis, hodge_gram, im_ratio, odd_even_split, parse_matrix,
                             refine_mesh, sampled_min_im_ratio, spectral_gap)


def test_torus_mesh(torus_mesh):
    m = torus_mesh
    assert m.n_triangles >= 200
    assert m.genus == 1
    assert m.area == pytest.approx(1, abs=1e-12)
    assert math.degrees(m.min_angle()) >= 30


def test_mesh_guard(torus):
    for h in (0, -0.1, math.inf):
        with pytest.raises(BadParams):
            refine_mesh(torus, h)


def test_octagon_fan_counts(octagon):
    m = refine_mesh(octagon, 0.2)
    for v in m.cone_vertices():
        fan = int((m.tri.vid == v).sum())
        assert fan >= 6 * m.tri.vertex_angle[v] / (2 * math.pi)
    assert m.area == pytest.approx(octagon.area, abs=1e-9)


def test_torus_basis(torus_mesh):
    b = harmonic_basis(torus_mesh)
    assert b.dim == 2
    assert abs(abs(np.linalg.det(b.pairing)) - 1) < 1e-6
    assert b.closed_residual < 1e-10 and b.coclosed_residual < 1e-10
    G = hodge_gram(torus_mesh, b.cochains)
    assert np.allclose(G, closed_form_torus_gram(torus_mesh, b.classes, b.cycles), atol=1e-8)


def test_torus_gram_identity(torus_mesh):
    m = torus_mesh
    C = np.stack([m.constant_form(1, 0), m.constant_form(0, 1)], axis=1)
    assert np.allclose(hodge_gram(m, C, harmonic=False), np.eye(2), atol=1e-4)


def test_rect_torus_side_ratio():
    m = refine_mesh(standard_surface("RectTorus", 2, Fraction(1, 2)), 0.1)
    C = np.stack([m.constant_form(1, 0), m.constant_form(0, 1)], axis=1)
    G = hodge_gram(m, C, harmonic=False)
    # classes dual to the sides (periods 1 on the side cycles): dx / 2 and 2 dy
    D = np.diag([0.5, 2.0])
    Gs = D @ G @ D
    assert math.sqrt(Gs[1, 1] / Gs[0, 0]) == pytest.approx(4, abs=1e-3)
    b = harmonic_basis(m)
    assert np.allclose(hodge_gram(m, b.cochains), closed_form_torus_gram(m, b.classes, b.cycles), atol=1e-8)


def test_octagon_basis(octagon_mesh, octagon_basis):
    b = octagon_basis
    assert b.dim == 4
    assert abs(abs(np.linalg.det(b.pairing)) - 1) < 1e-6
    G = hodge_gram(octagon_mesh, b.cochains)
    assert np.linalg.eigvalsh(G).min() > 0
    A = np.array([[1, 2, 0, 0], [0, 1, 0, 0], [0, 0, 1, -1], [1, 0, 0, 1]], float)
    G2 = hodge_gram(octagon_mesh, b.cochains @ A)
    assert np.allclose(G2, A.T @ G @ A, atol=1e-8 * np.abs(G).max())


def test_pillowcase_cover_split(pillowcase):
    cov = orienting_double_cover(pillowcase)
    m = refine_mesh(cov.surface, 0.1, grade=False)
    b = harmonic_basis(m)
    assert b.dim == 2
    G = hodge_gram(m, b.cochains)
    assert np.allclose(G, closed_form_torus_gram(m, b.classes, b.cycles), atol=1e-8)
    sp = odd_even_split(m, cov.involution, b)
    assert sp.odd.shape[1] == 2 and sp.even.shape[1] == 0
    assert sp.square_defect == 0
    assert sp.odd_residual < 1e-8
    # pulling back twice is the identity on any cochain
    c = np.random.default_rng(0).standard_normal(m.n_edges)
    assert np.array_equal(sp.involution @ (sp.involution @ c), c)


@pytest.mark.parametrize("which", ["torus", "octagon"])
def test_forni_extremes(which, torus_mesh, octagon_mesh):
    m = torus_mesh if which == "torus" else octagon_mesh
    dx, dy = m.constant_form(1, 0), m.constant_form(0, 1)
    assert forni_derivative(m, dx) == pytest.approx(-1, abs=1e-3)
    assert forni_derivative(m, dy) == pytest.approx(1, abs=1e-3)
    assert flow_derivative_fd(m, dx) == pytest.approx(-1, abs=1e-3)
    assert flow_derivative_fd(m, dy) == pytest.approx(1, abs=1e-3)


def test_fd_scale_invariance(octagon_mesh, octagon_basis):
    c = octagon_basis.cochains[:, 0]
    assert abs(flow_derivative_fd(octagon_mesh, 2 * c) - flow_derivative_fd(octagon_mesh, c)) < 1e-10


def test_octagon_class_derivatives(octagon_mesh, octagon_basis):
    for k in range(octagon_basis.dim):
        c = octagon_basis.cochains[:, k]
        v = forni_derivative(octagon_mesh, c)
        assert -1 - 1e-2 <= v <= 1 + 1e-2
        assert abs(v - flow_derivative_fd(octagon_mesh, c)) < 1e-2


def test_quadratic_identity(octagon_mesh, octagon_basis):
    rng = np.random.default_rng(1)
    A = octagon_mesh.area_t
    for _ in range(5):
        c = octagon_basis.cochains @ rng.standard_normal(4)
        f = octagon_mesh.phi(c)
        lhs = -2 * (A * f * f).sum().real
        rhs = -2 * ((A * f.real ** 2).sum() - (A * f.imag ** 2).sum())
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)
        d = im_ratio(octagon_mesh, f)
        assert -forni_derivative(octagon_mesh, c) == pytest.approx(1 - 2 * d * d, abs=1e-12)


def test_octagon_gap(octagon_mesh):
    r = spectral_gap(octagon_mesh)
    # eightfold rotation symmetry forces delta = 2^{-1/2}
    assert r.delta <= 2 ** -0.5 + 1e-6
    assert r.delta == pytest.approx(2 ** -0.5, rel=2e-3)
    s = sampled_min_im_ratio(octagon_mesh, r)
    assert r.delta <= s + 1e-12
    assert s - r.delta < 1e-6


def test_gap_guards(torus_mesh, pillowcase):
    with pytest.raises(BadParams):
        spectral_gap(torus_mesh)


def test_genus2_gap(g2_mesh):
    r = spectral_gap(g2_mesh)
    assert 0 < r.delta <= 2 ** -0.5 + 1e-6
    assert r.argmin_field.l2_norm(g2_mesh) == pytest.approx(1, rel=1e-9)
    assert abs(r.argmin_field.mean(g2_mesh)) < 1e-8
    assert r.argmin_field.im_norm(g2_mesh) == pytest.approx(r.delta, rel=1e-6)
    assert 0 <= sampled_min_im_ratio(g2_mesh, r) - r.delta < 1e-6


def test_matrix_text_roundtrip():
    M = np.random.default_rng(2).standard_normal((3, 5)) * 1e-7
    assert np.array_equal(parse_matrix(format_matrix(M)), M)
