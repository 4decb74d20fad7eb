"""One pass/fail check per acceptance criterion, at the stated tolerances and runtime caps."""
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy.optimize import brentq

from hourglass.analytic import (CylinderCoords, cylinder_suite, genus2_walkthrough, gradient_suite,
                                parseval_check, random_laurent, shells_suite)
from hourglass.cli import main
from hourglass.decomposition import build_pad, hourglass_ratio, hourglass_ratio_exhaustive
from hourglass.flow import hodge_gap_audit, orthogonal_classes, trace_flow
from hourglass.geometry import systole
from hourglass.hodge import flow_derivative_fd, forni_derivative, im_ratio, refine_mesh, spectral_gap
from hourglass.surface import apply_flow, genus2_example, standard_surface

from .conftest import corpus

GENUS2_SWEEP = (0.05, 0.02, 0.01)


@contextmanager
def cap(seconds):
    t0 = time.perf_counter()
    yield
    elapsed = time.perf_counter() - t0
    assert elapsed < seconds, f"took {elapsed:.1f}s, cap {seconds}s"


def test_01_gauss_bonnet_corpus():
    with cap(5):
        surfaces = corpus()
        # square and rectangular torus, octagon, pillowcase, three genus-2 examples
        assert len(surfaces) == 7
        for X in surfaces:
            total = sum(2 * math.pi - s.cone_angle for s in X.singularities)
            assert abs(total - 2 * math.pi * (2 - 2 * X.genus)) <= 1e-9, X.name
            if X.exact:
                assert X.gauss_bonnet_exact(), X.name


def test_02_genus2_fidelity():
    with cap(1):
        X = genus2_example(1, 0.01, 2)
        cones = [s for s in X.singularities if abs(s.cone_angle - 2 * math.pi) > 1e-9]
        assert len(cones) == 1
        assert abs(cones[0].cone_angle - 6 * math.pi) <= 1e-9
        assert abs(X.area - (1 + 0.08 * math.pi)) <= 1e-9


def test_03_systole_under_flow():
    with cap(10):
        T = apply_flow(standard_surface("SquareTorus", 1), 0.5)
        assert abs(systole(T)[0] - math.exp(-0.5)) <= 1e-6
        for s in GENUS2_SWEEP:
            assert abs(systole(genus2_example(1, s, 2))[0] - 2 * math.pi * s) <= 1e-6


def test_04_parseval():
    with cap(30):
        rng = np.random.default_rng(2024)
        for s, L in ((1, 3), (0.5, 5)):
            c = CylinderCoords(s, L)
            errs = [parseval_check(random_laurent(rng, int(rng.integers(1, 9)), c), c) for _ in range(100)]
            assert max(errs) <= 1e-6


@pytest.mark.parametrize("name,h", [("SquareTorus", 0.1), ("RegularOctagon", 0.3)])
def test_05_forni_extremes(name, h):
    with cap(60):
        m = refine_mesh(standard_surface(name), h)
        for c, want in ((m.constant_form(1, 0), -1.0), (m.constant_form(0, 1), 1.0)):
            var, fd = forni_derivative(m, c), flow_derivative_fd(m, c)
            assert abs(var - want) <= 1e-3
            assert abs(fd - want) <= 1e-3
            assert abs(var - fd) <= 1e-2


def test_06_one_minus_two_delta_squared():
    with cap(60):
        m = refine_mesh(standard_surface("RegularOctagon"), 0.3)
        R = orthogonal_classes(m)
        dx, dy = m.constant_form(1, 0), m.constant_form(0, 1)
        rng = np.random.default_rng(6)
        n = 0
        for target in (0.05, 0.2, 0.5):
            for _ in range(7):
                r, eps = R @ rng.standard_normal(R.shape[1]), rng.uniform(0.2, 1.0)
                cls = lambda th: math.cos(th) * dx + math.sin(th) * (dy + eps * r)
                th = brentq(lambda th: im_ratio(m, m.phi(cls(th))) - target, 0, math.pi / 2, xtol=1e-14)
                c = cls(th) / m.hodge_norm(cls(th))
                f = m.phi(c)
                assert abs(math.sqrt((m.area_t * np.abs(f) ** 2).sum()) - 1) < 1e-9
                d = im_ratio(m, f)
                assert abs(d - target) < 1e-9
                assert abs(-forni_derivative(m, c) - (1 - 2 * d * d)) <= 1e-3
                assert abs(-flow_derivative_fd(m, c) - (1 - 2 * d * d)) <= 1e-3
                n += 1
        assert n >= 20


def test_07_hourglass_oracle():
    with cap(60):
        for X in corpus():
            pad = build_pad(X)
            assert hourglass_ratio(X, pad) == hourglass_ratio_exhaustive(pad), X.name
        octagon = standard_surface("RegularOctagon")
        assert hourglass_ratio(octagon, build_pad(octagon)).value == 1.0
        H = [hourglass_ratio(X, build_pad(X)).value for X in (genus2_example(1, s, 2) for s in GENUS2_SWEEP)]
        assert H[0] > H[1] > H[2]


def test_08_spectral_gap():
    with cap(600):
        bound = 2 ** -0.5 + 1e-6
        deltas = [spectral_gap(refine_mesh(genus2_example(1, s, 2), 0.1)).delta for s in GENUS2_SWEEP]
        assert all(0 < d <= bound for d in deltas)
        assert deltas[0] > deltas[1] > deltas[2]
        for X, h in ((standard_surface("RegularOctagon"), 0.3), (genus2_example(1, 0.05, 2), 0.1)):
            coarse = spectral_gap(refine_mesh(X, h)).delta
            fine = spectral_gap(refine_mesh(X, h / 2)).delta
            assert coarse <= bound and fine <= bound
            assert abs(fine - coarse) <= 0.05 * fine, X.name


def test_09_main_inequality_audit():
    with cap(900):
        surfaces = [genus2_example(1, s, 2) for s in GENUS2_SWEEP] + [standard_surface("RegularOctagon")]
        for X in surfaces:
            tr = trace_flow(X, 0.0, 0.5, 0.25, h=0.1 if X.name.startswith("genus2") else 0.3)
            assert tr.k == 2 * X.genus - 2
            assert not any(f.startswith(("nonorth", "fd", "hodge")) for s in tr.samples for f in s.flags)
            a = hodge_gap_audit(tr)
            assert a.passed and a.c > 0, X.name
            assert a.systole_passed and a.c_systole > 0, X.name


def test_10_lemma_harnesses():
    with cap(300):
        cyl = cylinder_suite()
        assert set(cyl.summary["C_a"]) == {10, 20, 40}
        for k in ("C_a", "C_c", "C_decay"):
            assert cyl.summary[k + "_spread"] <= 4
        sh = shells_suite(trials=50)
        assert sh.summary["C_c"] <= 20
        gr = gradient_suite()
        assert abs(gr.summary["unit_disk_ratio"] - 2 / math.sqrt(math.pi)) <= 1e-3


def test_11_walkthrough():
    with cap(600):
        r = genus2_walkthrough(1, 0.01, 2)
        assert r.case == 2
        assert abs(r.integral_A_residual) <= 1e-6
        for row in r.rows:
            cells = [row.area, row.boundary_sup, row.integral, row.norm2] + [q for q in row.ratios if q is not None]
            assert all(math.isfinite(v) for v in cells), row.region
            assert any(q is not None for q in row.ratios), row.region


def test_12_cli_determinism(tmp_path):
    with cap(120):
        outs = []
        for i in range(2):
            p = tmp_path / f"run{i}.csv"
            assert main(["--out", str(p), "flow", "RegularOctagon", "--t1", "0.5", "--dt", "0.25",
                         "--h", "0.3"]) == 0
            outs.append(p.read_bytes())
        assert outs[0] == outs[1] and len(outs[0]) > 0
