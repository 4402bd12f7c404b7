"""One vector, many equals.

In Euclidean space exactly one vector at Q0 is equivalent to a given
vector: its translate. Deforming Minkowski space by d splits that
answer into two (in 1+1) or a whole sphere (in 1+3), and composing
equivalences stops being transitive.
"""

import numpy as np

from sigmaspace.core import GeometrySpec
from sigmaspace.multivariance import SolverConfig, solve_equivalent, transitivity_probe

unit = ((0.0, 0.0), (1.0, 0.0))

s = solve_equivalent(GeometrySpec.euclidean(2), unit, (0, 1))
print("Euclidean:", s.verdict, s.solutions.tolist())

for d in (0.01, 0.02, 0.05):
    s = solve_equivalent(GeometrySpec.deformed_minkowski(2, d), unit, (1, 0))
    print(f"d={d}: {s.verdict}, endpoints {np.round(s.solutions, 6).tolist()}")

s = solve_equivalent(GeometrySpec.deformed_minkowski(4, 0.02), ((0,) * 4, (1, 0, 0, 0)), (1, 0, 0, 0),
                     SolverConfig(starts=400))
print(f"1+3, d=0.02: {s.verdict}, estimated dimension {s.est_dimension:.2f}")

for name, geom, q0, r0 in (("Euclidean", GeometrySpec.euclidean(2), (0, 1), (2, -1)),
                           ("deformed d=0.05", GeometrySpec.deformed_minkowski(2, 0.05), (1, 0), (2, 0))):
    rep = transitivity_probe(geom, unit, q0, r0, n_chains=100)
    print(f"{name}: {rep.violations}/100 composed chains break transitivity")
