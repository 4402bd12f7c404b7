"""Is a world function Euclidean?

The battery checks three conditions using sigma alone: a Gram
determinant that vanishes one dimension up, a quadratic form that
reproduces sigma from coordinates, and a coordinate map that is one to
one. Euclidean space passes; the Poincare disk and deformed Minkowski
space fail, each with a witness.
"""

from sigmaspace.core import GeometrySpec
from sigmaspace.euclidicity import euclidicity_report

cases = {
    "Euclidean plane": GeometrySpec.euclidean(2),
    "Euclidean space": GeometrySpec.euclidean(3),
    "Poincare disk": GeometrySpec.riemannian_chart("poincare_disk", method="exact"),
    "deformed Minkowski, d=0.1": GeometrySpec.deformed_minkowski(2, 0.1),
}

for name, geom in cases.items():
    rep = euclidicity_report(geom)
    print(f"\n{name}: {rep.verdict}")
    for label, cond in (("I", rep.condition_I), ("II", rep.condition_II), ("III", rep.condition_III)):
        print(f"  condition {label:>3}: passed={cond.passed} worst={cond.worst_residual:.2e}"
              + (f"  {cond.note}" if cond.note else ""))
    for cond in (rep.condition_I, rep.condition_II, rep.condition_III):
        if cond.passed is False and cond.witness:
            print("  first witness:", {k: cond.witness[k] for k in list(cond.witness)[:3]})
            break
