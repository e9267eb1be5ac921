"""Products of weakly convergent sequences: when they converge and when
they do not.

The pairing of a gradient-structured sequence against a field sequence with
compact divergences converges to the pairing of the weak limits. Without the
structure, the pairing of sin(2 pi n x) with itself tends to half the cutoff
mass -- an order-one distance from the product of the (vanishing) weak
limits.
"""

import numpy as np

from homlab import CoefficientField, GridDomain, RHSFunctional, build_grad
from homlab import divcurl_pairing, solve_elliptic
from homlab.elliptic import smooth_bump

# compliant: q_n = grad u_n for oscillating solves, r a fixed smooth field
profile = lambda y: 2.0 + np.sin(2 * np.pi * np.asarray(y))
f = RHSFunctional.density(lambda p: np.ones(len(p)))
r_fn = lambda pts: np.stack([np.cos(np.pi * pts[:, 0])], axis=-1)

print("compliant sequence (gradients paired against a fixed field):")
vals = []
for n in (2, 4, 8, 16):
    dom = GridDomain.interval(0, 1, 64 * n)
    a = CoefficientField.from_function(
        dom, lambda p, n=n: profile((n * p[:, 0]) % 1.0), bounds=(1.0, 3.0))
    u, _ = solve_elliptic(dom, a, f)
    g = build_grad(dom)
    val = divcurl_pairing(dom, [g.matrix @ u], [g.sample_vector(r_fn)])[0]
    vals.append(val)
    print(f"  n={n:3d}: pairing = {val.real:.6f}")

dom = GridDomain.interval(0, 1, 1024)
a_h = CoefficientField.constant(dom, np.sqrt(3.0), bounds=(1.0, 3.0))
u, _ = solve_elliptic(dom, a_h, f)
g = build_grad(dom)
lim = divcurl_pairing(dom, [g.matrix @ u], [g.sample_vector(r_fn)])[0]
print(f"  pairing of the weak limits:   {lim.real:.6f}")

# counterexample: both sequences oscillate with nothing compact in sight
m = 4096
dom = GridDomain.interval(0, 1, m)
phi = smooth_bump(dom)
gb = build_grad(dom)
half_mass = 0.5 * (gb.elem_measure * phi(gb.elem_mid)).sum()
fields = [(lambda pts, n=n: np.sin(2 * np.pi * n * pts)) for n in (8, 16, 32, 64)]
pair = divcurl_pairing(dom, fields, fields, phi=phi)
print("\ncounterexample (sin(2 pi n x) against itself):")
for n, v in zip((8, 16, 32, 64), pair):
    print(f"  n={n:3d}: pairing = {v.real:.6f}")
print(f"  half the cutoff mass:        {half_mass:.6f}")
print("  product of the weak limits:  0.000000")
