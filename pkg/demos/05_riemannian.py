"""World functions from geodesics.

For a Riemannian chart, sigma is half the squared length of the
shortest geodesic. It is found by minimizing a discrete path energy and
checked against closed forms and the eikonal equation. Cutting a hole
in the plane shows that sigma depends on global topology, not just on
the local metric.
"""

import math

from sigmaspace.riemann import Chart, eikonal_residual, geodesic, punctured_sigma, sigma_R

disk = Chart("poincare_disk")
for r in (0.2, 0.5, 0.8):
    print(f"disk, radius {r}: sigma {sigma_R(disk, (0, 0), (r, 0)):.6f} "
          f"closed form {0.5 * (2 * math.atanh(r)) ** 2:.6f}")

path = geodesic(disk, (-0.5, 0.2), (0.5, 0.2))
print(f"off-centre geodesic bows to y = {path.nodes[len(path.nodes) // 2][1]:.4f}")
print("eikonal residual at (0.5, 0):", f"{eikonal_residual(disk, (0.5, 0), (0, 0), h=1e-4):.2e}")

hole = ((0.0, 0.0), 1.0)
print("\nplane minus the unit disk")
print("  around the hole:", punctured_sigma(hole, (-2, 0), (2, 0)))
print("  Euclidean value:", 0.5 * 4**2)
print("  chord that misses the hole:", punctured_sigma(hole, (-2, 2), (2, 2)))
