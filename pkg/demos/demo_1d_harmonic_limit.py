"""The flagship one-dimensional experiment: solutions of problems with the
oscillating coefficient 2 + sin(2 pi n x) converge weakly to the solution
with the constant coefficient sqrt(3) -- the harmonic mean, not the
arithmetic one.

The experiment couples the mesh to the oscillation (64 cells per period) and
pairs the solution and flux differences against fixed smooth probes.
"""

import numpy as np

from homlab import CoefficientSequence, MeshRule, RHSFunctional, hconvergence_experiment
from homlab.homogenize import laminate_limit

profile = lambda y: 2.0 + np.sin(2 * np.pi * np.asarray(y))
a_h, a_m = laminate_limit(profile)
print(f"harmonic mean {a_h:.6f} (= sqrt(3)), arithmetic mean {a_m:.6f}")

seq = CoefficientSequence.laminate(profile, bounds=(1.0, 3.0))
f = RHSFunctional.density(lambda p: np.ones(len(p)))

for name, candidate in (("harmonic", a_h), ("arithmetic", a_m)):
    rep = hconvergence_experiment(seq, f, candidate, [1, 2, 4, 8, 16, 32],
                                  mesh_rule=MeshRule(64))
    print(f"\ncandidate = {name} mean ({candidate:.4f})")
    print(f"{'n':>4} {'cells':>6} {'solution err':>13} {'flux err':>10}")
    for row in rep.rows:
        print(f"{row['n']:4d} {row['cells_per_axis']:6d} "
              f"{row['err_solution']:13.4e} {row['err_flux']:10.4e}")

print("\nonly the harmonic candidate absorbs the oscillations; the")
print("arithmetic mean stalls at an order-one probe error")
