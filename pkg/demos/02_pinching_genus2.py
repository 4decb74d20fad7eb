"""Pinching a cylinder on the genus-2 example: H, delta and the flow audit as s shrinks.

A unit torus with a slit of length 2*pi*s is glued to a cylinder of
circumference 2*pi*s and length 2L.  As s -> 0 the cylinder becomes a thin
neck, the hourglass ratio drops, and so does the spectral gap.

Run:  python demos/02_pinching_genus2.py
"""
import math

from hourglass.decomposition import build_pad, hourglass_ratio
from hourglass.flow import hodge_gap_audit, integral_h_squared, trace_flow
from hourglass.geometry import systole
from hourglass.hodge import refine_mesh, spectral_gap
from hourglass.surface import genus2_example

print(f"{'s':>6} {'area':>9} {'systole':>9} {'H':>9} {'delta':>9} {'c':>8} {'c_sys':>8}")
for s in (0.05, 0.02, 0.01):
    X = genus2_example(1, s, 2)
    H = hourglass_ratio(X, build_pad(X)).value
    delta = spectral_gap(refine_mesh(X, 0.1)).delta
    tr = trace_flow(X, 0.0, 0.5, 0.25, h=0.1)
    a = hodge_gap_audit(tr)
    print(f"{s:6.2f} {X.area:9.5f} {systole(X)[0]:9.5f} {H:9.5f} {delta:9.5f} {a.c:8.4f} {a.c_systole:8.4f}")

# %% for a thin neck the witness is the pair of level circles around the cylinder middle,
# so H ~ 2 * (2 pi s) / sqrt(area of the middle)
X = genus2_example(1, 0.01, 2)
r = hourglass_ratio(X, build_pad(X))
a = 2 * math.pi * 0.01
print("H = %.6f, 2a/sqrt(middle) = %.6f" % (r.value, 2 * a / math.sqrt(r.smaller_side_area)))

# %% integrals of H^2 and kappa^2 along a short stretch of the flow
tr = trace_flow(X, 0.0, 1.0, 0.25, h=0.2, fd=False)
print("int H^2 dt = %.6f   int kappa^2 dt = %.6f" % integral_h_squared(tr))
