"""Geometry from a single function.

Every geometry here is described by its world function sigma(P, Q),
half the squared distance. Scalar products, collinearity and
equivalence of vectors are all built from sigma alone, so swapping the
world function swaps the whole geometry.
"""

import numpy as np

from sigmaspace import core
from sigmaspace.core import GeometrySpec

euclid = GeometrySpec.euclidean(2)
print("sigma((0,0),(3,4)) =", core.sigma(euclid, (0, 0), (3, 4)))

# a vector is an ordered pair of points, not an element of a linear space
v, w = ((0, 0), (1, 0)), ((0, 1), (1, 1))
print("scalar product of two unit translates:", core.scalar_product(euclid, v, w))
print("equivalent?", bool(core.is_equivalent(euclid, v, w).holds))

# with d > 0 the straight continuation is no longer equivalent to the first step
for d in (0.0, 0.05):
    g = GeometrySpec.deformed_minkowski(2, d)
    a, b = ((0, 0), (1, 0)), ((1, 0), (2, 0))
    chk = core.is_equivalent(g, a, b)
    print(f"d={d}: consecutive unit time steps equivalent? {bool(chk.holds)} "
          f"(residual {float(chk.residual):.3g})")

# the collinearity expression factorizes only with coefficient 2
for coeff in (2, 4):
    fc = core.factorization_check(0.5, 0.5, 2.0, coefficient=coeff)
    print(f"factorization with coefficient {coeff}: residual {fc.residual:.3g}")

rng = np.random.default_rng(0)
P, Q, R = rng.normal(size=(3, 2))
print("triangle defect of a random Euclidean triangle:", core.triangle_defect(euclid, P, Q, R))
