"""Empirical constants for the cylinder, dyadic-shell and gradient estimates.

Run:  python demos/04_lemma_harnesses.py
"""
import math

import numpy as np

from hourglass.analytic import (CylinderCoords, LaurentSeries, cylinder_suite, gradient_estimate_check,
                                gradient_suite, laurent_fit, parseval_check, random_laurent,
                                sample_cylinder, shells_suite)

# %% fitting and Parseval on a cylinder of circumference 2 pi s and length 2L
c = CylinderCoords(0.5, 5)
rng = np.random.default_rng(0)
g = random_laurent(rng, 6, c)
xs, F = sample_cylinder(lambda x, y: g.on_cylinder(c, x, y), c, 6)
f = laurent_fit(xs, F, c, 6)
print("fit error %.2e   Parseval relative error %.2e" % (np.abs(f.coef - g.coef).max(), parseval_check(g, c)))

# %% the three suites
for res in (cylinder_suite(), shells_suite(trials=50), gradient_suite()):
    print(f"\n{res.name}: {len(res.rows)} rows")
    for k, v in res.summary.items():
        print(f"  {k}: {v}")

# %% f(z) = z on the unit disk: the ratio |f'(0)| / (||f||_2 / r^2) is exactly 2/sqrt(pi)
rep = gradient_estimate_check(lambda z: z, [0j], [1.0])
print("\nunit disk ratio %.7f   2/sqrt(pi) = %.7f" % (rep.ratios[0], 2 / math.sqrt(math.pi)))
