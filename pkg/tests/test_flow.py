import math

import numpy as np
import pytest

from hourglass.errors import BadParams, OrthogonalizationFailed
from hourglass.flow import (FlowSample, FlowTrace, class_mesh, halving_change, hodge_gap_audit,
                            integral_h_squared, omega_classes, orthogonal_classes, orthogonality_residual,
                            trace_flow, trace_from_csv, trace_to_csv, transport, trapezoid)
from hourglass.hodge import hodge_gram


def synthetic(ts, H, kappa=None, dlog=None):
    kappa = H if kappa is None else kappa
    dlog = [[0.0]] * len(ts) if dlog is None else dlog
    return FlowTrace([FlowSample(t, h, k, math.nan, 1.0, list(d)) for t, h, k, d in zip(ts, H, kappa, dlog)])


def test_csv_roundtrip():
    tr = synthetic([0, 0.1, 0.2], [1, 0.5, 1 / 3], dlog=[[0.1, -0.2], [math.pi, 0], [1e-17, -1]])
    tr.samples[1].flags = ["fd:1", "nonorth:2"]
    back = trace_from_csv(trace_to_csv(tr))
    assert trace_to_csv(back) == trace_to_csv(tr)
    assert back.samples[1].flags == ["fd:1", "nonorth:2"]
    assert back.samples[0].dlog[0] == 0.1 and math.isnan(back.samples[0].delta)


def test_csv_rejects_bad_header():
    with pytest.raises(BadParams):
        trace_from_csv("t,H,area\n0,1,1\n")
    with pytest.raises(BadParams):
        trace_from_csv("")


def test_integral_constant():
    tr = synthetic(np.linspace(0, 2, 11), [1.0] * 11)
    assert integral_h_squared(tr) == pytest.approx((2.0, 2.0), abs=1e-14)


def test_integral_exponential_and_halving():
    ts = np.linspace(0, 1, 41)
    tr = synthetic(ts, np.exp(-ts))
    exact = (1 - math.exp(-2)) / 2
    ih, _ = integral_h_squared(tr)
    assert ih == pytest.approx(exact, rel=1e-3)
    # trapezoid error scales as dt^2: dropping every other sample roughly quadruples it
    ch, _ = halving_change(tr)
    assert ch == pytest.approx(3 * abs(ih - exact) / ih, rel=0.05)
    with pytest.raises(BadParams):
        halving_change(synthetic([0, 1], [1, 1]))


def test_trapezoid_linear_exact():
    t = np.array([0, 0.3, 1.0, 2.5])
    assert trapezoid(t, 3 * t + 1) == pytest.approx(3 * 2.5 ** 2 / 2 + 2.5, abs=1e-14)


def test_audit_margins_and_scale():
    tr = synthetic([0, 1, 2], [0.5, 1.0, 0.25], dlog=[[0.9], [-0.5], [0.99]])
    a = hodge_gap_audit(tr)
    np.testing.assert_allclose(a.margins[:, 0], [0.1 / 0.25, 0.5, 0.01 / 0.0625])
    assert a.c == pytest.approx(0.16) and a.passed
    # the margin scales as 1/H^2 under H -> lam H
    lam = 3.0
    b = hodge_gap_audit(synthetic([0, 1, 2], [1.5, 3.0, 0.75], dlog=[[0.9], [-0.5], [0.99]]))
    assert b.c == pytest.approx(a.c / lam ** 2, rel=1e-12)


def test_audit_fails_on_extreme_class():
    a = hodge_gap_audit(synthetic([0, 1], [1, 1], dlog=[[1.0], [0.2]]))
    assert not a.passed and a.c == 0


def test_audit_guards():
    tr = synthetic([0], [1], dlog=[[0.1, 0.2]])
    with pytest.raises(BadParams):
        hodge_gap_audit(tr, [2])
    tr.samples[0].flags = ["nonorth:2"]
    assert hodge_gap_audit(tr, [0]).passed
    with pytest.raises(OrthogonalizationFailed):
        hodge_gap_audit(tr)


@pytest.fixture(scope="module")
def oct_trace(octagon):
    return trace_flow(octagon, 0.0, 0.5, 0.25, h=0.3)


def test_octagon_trace(oct_trace):
    tr = oct_trace
    assert [s.t for s in tr.samples] == [0, 0.25, 0.5]
    assert tr.k == 2 and tr.params["classes"] == "H1"
    assert all(not s.flags for s in tr.samples)
    assert np.all(np.abs(tr.dlogs()) < 1)
    a = hodge_gap_audit(tr)
    assert a.passed and a.systole_passed


def test_log_systole_lipschitz(oct_trace):
    t, k = oct_trace.column("t"), np.log(oct_trace.column("kappa"))
    assert np.all(np.abs(np.diff(k)) <= np.diff(t) * (1 + 1e-9))


def test_area_preserved_genus2(g2):
    tr = trace_flow(g2, 0.0, 1.0, 0.5, h=0.2, fd=False)
    area = tr.column("area")
    assert np.all(np.abs(area - area[0]) <= 1e-9)
    assert not any("area" in s.flags for s in tr.samples)


def test_complement_is_orthogonal(octagon_mesh):
    C = orthogonal_classes(octagon_mesh)
    assert C.shape[1] == 2
    assert orthogonality_residual(octagon_mesh, C).max() < 1e-9
    for i in range(2):
        assert hodge_gram(octagon_mesh, C[:, i:i + 1])[0, 0] == pytest.approx(1, rel=1e-9)


def test_transport_keeps_orthogonality(octagon_mesh):
    C = orthogonal_classes(octagon_mesh)
    m, Ct = transport(octagon_mesh, C, 0.7)
    assert m.n_edges == octagon_mesh.n_edges
    assert orthogonality_residual(m, Ct).max() < 1e-6


def test_omega_class_rejected(octagon):
    mesh, _ = class_mesh(octagon, 0.3)
    tr = trace_flow(octagon, 0.0, 0.2, 0.2, h=0.3, classes=omega_classes(mesh)[:, :1], fd=False)
    assert all("nonorth:1" in s.flags for s in tr.samples)
    # the tracked Re omega class is extremal: |d/dt log| = 1
    assert np.allclose(np.abs(tr.dlogs()), 1, atol=1e-6)
    with pytest.raises(OrthogonalizationFailed):
        hodge_gap_audit(tr)


def test_trace_guards(octagon):
    with pytest.raises(BadParams):
        trace_flow(octagon, 1.0, 0.0, 0.1)
    with pytest.raises(BadParams):
        trace_flow(octagon, 0.0, 1.0, 0.0)


def test_determinism(octagon):
    a = trace_to_csv(trace_flow(octagon, 0.0, 0.2, 0.1, h=0.4))
    b = trace_to_csv(trace_flow(octagon, 0.0, 0.2, 0.1, h=0.4))
    assert a == b


def test_audit_sweep_same_order():
    from hourglass.surface import genus2_example
    cs = [hodge_gap_audit(trace_flow(genus2_example(1, s, 2), 0.0, 0.5, 0.25, h=0.1)).c for s in (0.1, 0.05)]
    assert min(cs) > 0
    assert max(cs) / min(cs) < 10
