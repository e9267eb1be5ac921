"""The four block maps of an operator along an orthogonal splitting.

For a = [[2, 1], [1, 2]] split along the first coordinate, the maps are
(1/2, 1/2, 1/2, 3/2) and the 2x2 block-inverse formula reproduces the dense
inverse. Swapping the splitting and inverting the operator permutes the four
maps into each other, which is the inversion homeomorphism at desk scale.
"""

import numpy as np

from homlab import (
    Decomposition,
    HilbertSpace,
    LinearOp,
    Subspace,
    block_inverse,
    inversion_swap_check,
    schur_complement_coercivity,
    schur_maps,
)

space = HilbertSpace(2)
h0 = Subspace(space, basis=np.array([[1.0], [0.0]]))
dec = Decomposition.from_subspace(space, h0)
a = LinearOp(space, space, matrix=np.array([[2.0, 1.0], [1.0, 2.0]]))

maps = schur_maps(a, dec)
print("m00inv =", maps.m00inv_mat.ravel())
print("m01    =", maps.m01_mat.ravel())
print("m10    =", maps.m10_mat.ravel())
print("ms     =", maps.ms_mat.ravel())

inv = block_inverse(a, dec).to_dense()
print("\nblock-formula inverse:\n", inv)
print("dense inverse:\n", np.linalg.inv(a.to_dense()))

print("\ninversion swap identity holds:", inversion_swap_check(a, dec))

# the complement inherits the coercivity class of the full operator
rng = np.random.default_rng(1)
n = 10
q, _ = np.linalg.qr(rng.standard_normal((n, n)))
big_space = HilbertSpace(n)
big = LinearOp(big_space, big_space,
               matrix=q @ np.diag(rng.uniform(0.7, 2.8, n)) @ q.T)
sub = Subspace.from_span(big_space, [rng.standard_normal(n) for _ in range(4)])
rep = schur_complement_coercivity(big, Decomposition.from_subspace(big_space, sub),
                                  0.5, 4.0)
print("\ncomplement stays in the (0.5, 4.0) class:", rep.passed,
      f"(Re min {rep.re_min:.3f}, Re inv min {rep.re_inv_min:.3f})")
