import math
from fractions import Fraction

import numpy as np
import pytest

from hourglass import (GluingKind, apply_flow, build_surface, delaunay, genus2_example,
                       orienting_double_cover, standard_surface)
from hourglass.errors import (BadParams, EdgeLengthMismatch, GlobalSquare, NonSimplePolygon,
                              OrientationError, UnmatchedEdge)
from hourglass.surface import riemann_hurwitz_ok

from .conftest import corpus

SQ = [(0, 0), (1, 0), (1, 1), (0, 1)]
TORUS_GLUE = [((0, 0), (0, 2), "translation"), ((0, 1), (0, 3), "translation")]


def non_marked(X):
    return [s for s in X.singularities if not s.is_marked]


def test_unit_square_torus():
    X = build_surface([SQ], TORUS_GLUE)
    assert X.genus == 1 and X.area == 1
    assert non_marked(X) == []
    assert X.exact and X.gauss_bonnet_exact()


def test_octagon_single_six_pi_point(octagon):
    assert octagon.genus == 2
    (s,) = octagon.singularities
    assert s.cone_angle == pytest.approx(6 * math.pi, abs=1e-9)
    assert s.order == 4


def test_pillowcase_four_poles(pillowcase):
    assert pillowcase.genus == 0
    assert len(pillowcase.singularities) == 4
    assert all(s.is_pole for s in pillowcase.singularities)
    assert all(s.cone_angle == pytest.approx(math.pi) for s in pillowcase.singularities)
    assert not pillowcase.is_square


def test_rect_torus_exact():
    X = standard_surface("RectTorus", 2, Fraction(1, 2))
    assert X.area == 1 and X.genus == 1 and X.exact


@pytest.mark.parametrize("poly,glue,err", [
    ([(0, 0), (2, 0), (2, 1), (0, 1)], TORUS_GLUE[:1] + [((0, 1), (0, 3), "translation")], None),
    ([(0, 0), (2, 0), (1, 1), (0, 1)], TORUS_GLUE, EdgeLengthMismatch),
    (SQ, TORUS_GLUE[:1], UnmatchedEdge),
    (SQ, [((0, 0), (0, 0), "translation"), ((0, 1), (0, 3), "translation")], UnmatchedEdge),
    (SQ, [((0, 0), (0, 2), "half_turn"), ((0, 1), (0, 3), "translation")], OrientationError),
    ([(0, 0), (4, 0), (4, 4), (2, -1), (0, 4)], TORUS_GLUE, NonSimplePolygon),
    ([(0, 0), (0, 1), (1, 1), (1, 0)], TORUS_GLUE, OrientationError),
])
def test_validation(poly, glue, err):
    if err is None:
        assert build_surface([poly], glue).area == 2
    else:
        with pytest.raises(err):
            build_surface([poly], glue)


def test_genus2_example_fidelity(g2):
    cone = non_marked(g2)
    assert len(cone) == 1
    assert cone[0].cone_angle == pytest.approx(6 * math.pi, abs=1e-9)
    assert g2.area == pytest.approx(1 + 4 * math.pi * 0.02, abs=1e-9)
    assert g2.is_square


def test_genus2_example_guard():
    with pytest.raises(BadParams):
        genus2_example(1, 0.2, 0.5)


@pytest.mark.parametrize("X", corpus(), ids=lambda X: X.name)
def test_gauss_bonnet(X):
    assert abs(X.gauss_bonnet_defect()) < 1e-9
    if X.exact:
        assert X.gauss_bonnet_exact()


def test_flow_identity_and_rectangle(torus):
    assert apply_flow(torus, 0).polygons == torus.polygons
    Y = apply_flow(torus, math.log(2))
    xs = sorted({round(x, 12) for x, _ in Y.polygons[0]})
    ys = sorted({round(y, 12) for _, y in Y.polygons[0]})
    assert xs == [0, 2] and ys == [0, 0.5]
    assert Y.area == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("t", [-1, 0.3, 2])
def test_flow_preserves_area(octagon, t):
    assert apply_flow(octagon, t).area == pytest.approx(octagon.area, abs=1e-12)


def test_flow_composes(octagon):
    a = np.array(apply_flow(apply_flow(octagon, 0.7), 0.3).polygons)
    b = np.array(apply_flow(octagon, 1.0).polygons)
    assert np.abs(a - b).max() < 1e-12


def test_pillowcase_double_cover(pillowcase):
    cov = orienting_double_cover(pillowcase)
    Y = cov.surface
    assert Y.genus == 1 and Y.is_square
    assert all(g.kind is GluingKind.TRANSLATION for g in Y.gluings)
    assert riemann_hurwitz_ok(pillowcase, Y)
    # each angle-pi point has one preimage of angle 2 pi (the branch points)
    assert sum(1 for s in Y.singularities if s.cone_angle == pytest.approx(2 * math.pi)) == 4
    assert all(cov.involution[cov.involution[p]] == p for p in range(len(Y.polygons)))


def test_cover_of_square_rejected(g2):
    with pytest.raises(GlobalSquare):
        orienting_double_cover(g2)


def test_cover_preimage_counts():
    # L-shaped surface with a half-turn gluing: principal-stratum test case
    P = standard_surface("Pillowcase", 2, 1)
    Y = orienting_double_cover(P).surface
    for s in Y.singularities:
        assert round(s.cone_angle / math.pi) % 2 == 0
    odd = sum(1 for s in P.singularities if s.order % 2)
    even = len(P.singularities) - odd
    assert len(Y.singularities) == odd + 2 * even


def test_delaunay(torus, g2):
    tri = delaunay(torus)
    assert tri.n_triangles == 2 and tri.is_delaunay()
    t2 = delaunay(g2)
    assert t2.area == pytest.approx(g2.area, abs=1e-9)
    assert t2.make_delaunay() == 0


def test_standard_surface_unknown():
    with pytest.raises(BadParams):
        standard_surface("Klein")
    with pytest.raises(BadParams):
        standard_surface("SquareTorus", -1)


def test_normalize_area(octagon):
    X = standard_surface("RegularOctagon", normalize_area=True)
    assert X.area == pytest.approx(1, abs=1e-12)
