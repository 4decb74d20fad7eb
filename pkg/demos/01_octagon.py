"""The regular octagon: one cone point, no short curves, and the largest possible gap.

Run:  python demos/01_octagon.py
"""
import math

import numpy as np

from hourglass.decomposition import build_pad, hourglass_ratio
from hourglass.geometry import enumerate_saddle_connections, systole
from hourglass.hodge import flow_derivative_fd, forni_derivative, harmonic_basis, refine_mesh, spectral_gap
from hourglass.surface import standard_surface

X = standard_surface("RegularOctagon")
print(X.name, "genus", X.genus, "area %.6f" % X.area)
print("cone angles / pi:", [round(s.cone_angle / math.pi, 9) for s in X.singularities])

# %% saddle connections come in the eight side directions first
scs = enumerate_saddle_connections(X, 1.01 * min(abs(c.holonomy) for c in enumerate_saddle_connections(X, 2.0)))
print("shortest saddle connections:", len(scs),
      "directions (deg):", sorted({round(math.degrees(np.angle(c.holonomy)), 6) % 180 for c in scs}))
print("systole %.6f" % systole(X)[0])

# %% nothing is thin, so the decomposition is the whole surface and H = 1
pad = build_pad(X)
print("annuli:", len(pad.annuli), " hourglass ratio:", hourglass_ratio(X, pad).value)

# %% Hodge side: the horizontal and vertical classes are the extreme directions of the flow
m = refine_mesh(X, 0.3)
dx, dy = m.constant_form(1, 0), m.constant_form(0, 1)
for name, c in (("Re omega", dx), ("Im omega", dy)):
    print(f"d/dt log|| {name} ||: variational {forni_derivative(m, c):+.6f}  "
          f"finite difference {flow_derivative_fd(m, c):+.6f}")

basis = harmonic_basis(m)
print("harmonic basis dimension", basis.dim)

# %% eightfold symmetry pins the gap at 2^{-1/2}
r = spectral_gap(m)
print(f"delta = {r.delta:.7f}   (2^-1/2 = {2 ** -0.5:.7f}),  {m.n_triangles} triangles")
