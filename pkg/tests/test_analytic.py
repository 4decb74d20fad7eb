import math

import numpy as np
import pytest

from hourglass.analytic import (CylinderCoords, LaurentSeries, cylinder_lemma_check, cylinder_suite,
                                efficient_path_check, genus2_walkthrough, gradient_estimate_check,
                                gradient_suite, laurent_fit, parseval_check, parseval_sum, polar_samples,
                                random_laurent, reconstruction_error, sample_cylinder, shell_partition,
                                shells_check, shells_suite, walkthrough_case)
from hourglass.errors import (BadParams, DiskNotEmbedded, FloorViolated, IllConditionedFit, NoPathFound,
                              PartitionInvalid)
from hourglass.hodge import spectral_gap


def fit(series, coords, N):
    xs, F = sample_cylinder(lambda x, y: series.on_cylinder(coords, x, y), coords, N)
    return laurent_fit(xs, F, coords, N)


def test_fit_identity():
    c = CylinderCoords(1, 1)
    f = fit(LaurentSeries.from_dict({1: 1}, N=4), c, 4)
    assert abs(f[1] - 1) < 1e-10
    assert max(abs(f[n]) for n in range(-4, 5) if n != 1) < 1e-10


def test_fit_two_terms():
    c = CylinderCoords(1, 1)
    f = fit(LaurentSeries.from_dict({-2: 3, 0: 1j}, N=4), c, 4)
    assert abs(f[-2] - 3) < 1e-9 and abs(f[0] - 1j) < 1e-9


def test_fit_random_degree_8():
    c = CylinderCoords(1, 1)
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        g = random_laurent(rng, 8)
        f = fit(g, c, 8)
        worst = max(worst, np.abs(f.coef - g.coef).max())
    assert worst <= 1e-8


def test_fit_reconstruction():
    c = CylinderCoords(0.5, 1.5)
    g = random_laurent(np.random.default_rng(3), 4, c)
    f = fit(g, c, 8)
    assert reconstruction_error(f, lambda x, y: g.on_cylinder(c, x, y), c) < 1e-9


def test_fit_guards():
    c = CylinderCoords(0.01, 5)
    xs = np.linspace(-5, 5, 9)
    with pytest.raises(BadParams):
        laurent_fit(xs[:3], np.zeros((3, 20)), c, 4)
    with pytest.raises(IllConditionedFit):
        laurent_fit(xs, np.zeros((9, 20), complex), c, 4, cond_cap=1e12)
    with pytest.raises(BadParams):
        CylinderCoords(0, 1)


def test_parseval_z():
    c = CylinderCoords(1, 1)
    z = LaurentSeries.from_dict({1: 1})
    assert parseval_check(z, c) <= 1e-6
    # closed form: 2 pi s * (s / 2) (e^{2L/s} - e^{-2L/s}) / 2 * 2 = 2 pi s^2 sinh(2L/s)
    assert parseval_sum(z, c) == pytest.approx(2 * math.pi * math.sinh(2), rel=1e-14)


def test_parseval_constant():
    c = CylinderCoords(0.7, 2.5)
    k = LaurentSeries.from_dict({0: 2 - 1j})
    want = 4 * math.pi * 2.5 * 0.7 * 5
    assert parseval_sum(k, c) == pytest.approx(want, abs=1e-12)
    assert parseval_check(k, c) < 1e-12


@pytest.mark.parametrize("s,L", [(1, 3), (0.5, 5)])
def test_parseval_random(s, L):
    c = CylinderCoords(s, L)
    rng = np.random.default_rng(7)
    for _ in range(10):
        assert parseval_check(random_laurent(rng, 6, c), c) <= 1e-6


def test_cylinder_real_constant():
    rep = cylinder_lemma_check(LaurentSeries.from_dict({0: 3.0}, N=2), CylinderCoords(1, 20))
    assert rep.delta == 0 and rep.sup_core == 0 and rep.C_a == 0


def eps_z_plus_inv(delta, coords):
    unit = LaurentSeries.from_dict({1: 1, -1: 1})
    return unit.scaled(delta / cylinder_lemma_check(unit, coords).delta)


def test_cylinder_example():
    c = CylinderCoords(1, 20)
    f = eps_z_plus_inv(0.01, c)
    rep = cylinder_lemma_check(f, c)
    assert rep.delta == pytest.approx(0.01, rel=1e-6)
    assert rep.C_a <= 10


def test_cylinder_sweep_non_increasing():
    vals = []
    for L in (10, 20, 40):
        c = CylinderCoords(1, L)
        vals.append(cylinder_lemma_check(eps_z_plus_inv(0.01, c), c).C_a)
    assert vals[0] >= vals[1] >= vals[2]


def test_cylinder_floor():
    with pytest.raises(FloorViolated):
        cylinder_lemma_check(LaurentSeries.from_dict({0: 1}), CylinderCoords(1, 5))
    with pytest.raises(BadParams):
        cylinder_lemma_check(LaurentSeries.from_dict({0: 1}), CylinderCoords(1, 20), b=0.6)


def test_cylinder_scale_invariance():
    c = CylinderCoords(1, 20)
    f = LaurentSeries(np.array([0.01j, 0.02, 1.3, -0.01, 0.005j]) * np.exp(-np.abs(np.arange(-2, 3)) * 20))
    a, b = cylinder_lemma_check(f, c), cylinder_lemma_check(f.scaled(37.5), c)
    for k in ("C_a", "C_c", "C_decay"):
        assert abs(getattr(a, k) - getattr(b, k)) <= 1e-10 * max(1, getattr(a, k))


def test_cylinder_suite_stable():
    res = cylinder_suite(trials=3)
    for k in ("C_a", "C_c", "C_decay"):
        assert res.summary[k + "_spread"] <= 4


def test_shell_partition():
    p = shell_partition(1.0, 0, 4)
    assert [sh.j for sh in p.shells] == [0, 1, 2, 3, 4]
    assert p.shells[0].r_hi == 1 and p.shells[-1].r_lo == 2 ** -5
    assert p.C > 0 and p.C_prime < math.inf
    with pytest.raises(PartitionInvalid):
        shell_partition(1.0, 3, 2)
    with pytest.raises(PartitionInvalid):
        shell_partition(1.0, 0, 1, radii=[1.0, 0.99, 0.1])


def test_shells_zero_field():
    p = shell_partition(1.0, 0, 4)
    vals, r, w = polar_samples(lambda r, t: 0 * r, p.shells[-1].r_lo, 1.0)
    rep = shells_check(vals, r, w, p, delta0=1.0)
    assert rep.C_a == rep.C_b == rep.C_c == 0


def test_shells_c_over_z():
    p = shell_partition(1.0, 0, 5)
    f = lambda r, t: (0.3 + 0.1j) / (r * np.exp(1j * t))
    vals, r, w = polar_samples(f, p.shells[-1].r_lo, 1.0)
    rep = shells_check(vals, r, w, p)
    assert rep.hypotheses_hold
    # |f| = |c| / r is largest on the innermost shell: M_j 2^{-j} is constant
    M = rep.M * 2.0 ** -np.arange(6)
    assert np.ptp(M) / M.max() < 0.05
    assert math.isfinite(rep.C_a)


def test_shells_scale_invariance():
    p = shell_partition(2.0, 1, 5, cone_angle=4 * math.pi)
    f = lambda r, t: 1 + 0.2j * np.sqrt(r) * np.exp(0.5j * t)
    vals, r, w = polar_samples(f, p.shells[-1].r_lo, p.shells[0].r_hi, 4 * math.pi)
    a, b = shells_check(vals, r, w, p), shells_check(5 * vals, r, w, p)
    for k in ("C_a", "C_b", "C_c"):
        assert abs(getattr(a, k) - getattr(b, k)) <= 1e-10 * getattr(a, k)


def test_shells_suite():
    res = shells_suite(trials=50)
    assert res.summary["all_hypotheses"]
    assert res.summary["C_c"] <= 20


def test_gradient_linear():
    rep = gradient_estimate_check(lambda z: z, [0j], [1.0])
    assert rep.ratios[0] == pytest.approx(2 / math.sqrt(math.pi), abs=1e-3)


def test_gradient_constant_and_guards():
    rep = gradient_estimate_check(lambda z: 0 * z + 2.0, [0.1 + 0.2j, -0.3j], [0.5, 0.1])
    assert rep.c_t == 0
    with pytest.raises(DiskNotEmbedded):
        gradient_estimate_check(lambda z: z, [0j], [0.0])
    with pytest.raises(BadParams):
        gradient_estimate_check(lambda z: z, [0j], [1.0], t=0)


def test_gradient_scale_invariance():
    f = lambda z: z ** 2 + 1j * z
    a = gradient_estimate_check(f, [0.2 + 0.1j], [0.7], t=0.5)
    b = gradient_estimate_check(lambda z: 3 * f(z), [0.2 + 0.1j], [0.7], t=0.5)
    assert abs(a.c_t - b.c_t) <= 1e-10 * a.c_t


def test_gradient_suite():
    res = gradient_suite()
    assert res.summary["unit_disk_ratio"] == pytest.approx(2 / math.sqrt(math.pi), abs=1e-3)
    assert math.isfinite(res.summary["max_scaled_ratio"])
    assert res.summary["degree_spread"] <= 2


@pytest.fixture(scope="module")
def g2_gap(g2_mesh):
    return spectral_gap(g2_mesh)


def test_efficient_path_same_point(g2_mesh, g2_gap):
    f = g2_gap.argmin_field.values
    assert efficient_path_check(g2_mesh, f, (0, 0.5 + 0.5j), (0, 0.5 + 0.5j)).ratio == 0


def test_efficient_path_through_cylinder(g2_mesh, g2_gap):
    f = g2_gap.argmin_field.values
    inside = efficient_path_check(g2_mesh, f, (0, 0.5 + 0.5j), (0, 0.9 + 0.2j))
    across = efficient_path_check(g2_mesh, f, (0, 0.5 + 0.5j), (1, 0.1 + 2j))
    assert across.clearance < 0.5 * 2 * math.pi * 0.05 + 0.01
    assert across.ratio > inside.ratio
    with pytest.raises(NoPathFound):
        efficient_path_check(g2_mesh, f, (0, 0.5 + 0.5j), (1, 0.1 + 2j), r=0.2)


def test_case_rule():
    assert walkthrough_case(1, 0.01, 2) == 2
    assert walkthrough_case(1, 0.05, 20) == 1


@pytest.fixture(scope="module")
def walk_case2():
    return genus2_walkthrough(1, 0.01, 2)


def test_walkthrough_case2(walk_case2):
    r = walk_case2
    assert r.case == 2
    assert r.f_pT is not None
    s, L, b = 0.01, 2, 0.25
    a = 2 * math.pi * s
    assert r.areas["A"] == pytest.approx(a * (2 * L - 2 * s / b), rel=0.01)
    assert r.areas["T"] == pytest.approx(1 - (2 * b * a + math.pi * b * b), rel=0.01)
    assert sum(r.areas.values()) == pytest.approx(1 + 4 * math.pi * L * s, abs=1e-9)
    for row in r.rows:
        assert all(math.isfinite(v) for v in (row.area, row.boundary_sup, row.integral, row.norm2))
        assert all(q is None or math.isfinite(q) for q in row.ratios)
    assert r.integral_A_residual < 1e-6
    assert r.steps["step2_4piLs_fhat0_sq"] <= 1 + 1e-9
    assert "case 2" in r.table()


def test_walkthrough_case1():
    r = genus2_walkthrough(1, 0.05, 20, h=0.1)
    assert r.case == 1
    row_A = next(x for x in r.rows if x.region == "A")
    assert row_A.predicted[2] == 0 and row_A.ratios[2] is None
    assert row_A.integral < 1e-4 * math.sqrt(row_A.area)
