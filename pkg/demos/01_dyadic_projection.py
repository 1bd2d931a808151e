"""Dyadic nodes, piecewise-linear projection and exact integration.

Run with ``python demos/01_dyadic_projection.py``.
"""

import numpy as np

from hybridfp.schauder_basis import integrate_partial_2d, integrate_prefix, node_sequence, project_1d, project_2d

# The nodes come in the natural dyadic order: ends first, then midpoints level by level.
print("first 9 nodes:", node_sequence(1.0, 9).nodes)
print("sorted       :", node_sequence(1.0, 9).sorted())

# Projecting onto the first n nodes is interpolation at those nodes.
f = lambda t: np.sin(2 * np.pi * t) + t
t = np.linspace(0, 1, 2001)
for k in range(1, 8):
    n = 2 ** k + 1
    err = np.max(np.abs(project_1d(f, n)(t) - f(t)))
    print(f"n = {n:4d}  sup |f - P_n f| = {err:.3e}")

# Prefix integrals of the interpolant are exact (piecewise quadratic in t).
pl = project_1d(f, 33)
print("int_0^0.7 P_33 f =", integrate_prefix(pl, 0.7))
print("int_0^0.7 f      =", 0.7 ** 2 / 2 + (1 - np.cos(2 * np.pi * 0.7)) / (2 * np.pi))

# In two dimensions the grid is the tensor product; integrals run along s.
b = project_2d(lambda t, s: np.exp(-t * s), 17)
print("int_0^0.5 P(t=0.3, s) ds =", integrate_partial_2d(b, 0.3, 0.5),
      " exact:", (1 - np.exp(-0.15)) / 0.3)
