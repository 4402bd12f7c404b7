"""Deterministic motion turns into diffusion.

A world chain is built link by link, each link equivalent to the
first. With d = 0 the chain is a straight line. With d > 0 every step
picks one of several equivalent continuations, so an ensemble of
chains spreads like a random walk with variance growing as
(6d + 9d^2) per step.

Pass a path to also write the variance curve as CSV.
"""

import sys

from sigmaspace.chains import random_walk_slope, simulate_ensemble
from sigmaspace.core import GeometrySpec

unit = ((0.0, 0.0), (1.0, 0.0))
for d in (0.0, 0.02, 0.05):
    s = simulate_ensemble(GeometrySpec.deformed_minkowski(2, d), unit, 1000, 4000, seed=1)
    print(f"d={d}: slope {s.fitted_slope:.5f} +- {s.slope_stderr:.5f} "
          f"(random walk predicts {random_walk_slope(d):.5f}), R^2 {s.r_squared:.4f}")

if len(sys.argv) > 1:
    with open(sys.argv[1], "w") as fh:
        fh.write(s.to_csv())
    print("variance curve written to", sys.argv[1])
