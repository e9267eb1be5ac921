"""Periodic cell problems and effective tensors.

Three unit cells: a constant matrix (the corrector vanishes), a two-phase
laminate (harmonic across, arithmetic along), and the symmetric two-phase
checkerboard, whose effective tensor is sqrt(alpha beta) times the identity
by the classical duality argument.
"""

import numpy as np

from homlab import CoefficientField, GridDomain, cell_problem, homogenized_tensor

# constant matrix cell: effective tensor = the matrix itself
dom = GridDomain.box((16, 16))
mat = np.array([[2.0, 0.4], [0.4, 3.0]])
const = CoefficientField.constant(dom, mat, bounds=(1.0, 4.0))
v, w = cell_problem(const, np.array([1.0, 0.0]))
print("constant cell: corrector max =", np.abs(w).max())
print("effective tensor:\n", homogenized_tensor(const).round(12))

# two-phase laminate in the first coordinate
lam = CoefficientField.from_function(
    GridDomain.box((64, 64)),
    lambda p: np.where((p[:, 0] % 1.0) < 0.5, 1.0, 4.0), bounds=(0.5, 5.0))
print("\nlaminate {1,4}: expect diag(1.6, 2.5)")
print(homogenized_tensor(lam).round(6))

# symmetric checkerboard: duality forces sqrt(1 * 4) = 2
def checkerboard(p):
    return np.where(((np.floor(2 * p[:, 0]) + np.floor(2 * p[:, 1])) % 2) == 0,
                    1.0, 4.0)

for m in (64, 128, 256):
    cb = CoefficientField.from_function(GridDomain.box((m, m)), checkerboard,
                                        bounds=(0.5, 5.0))
    a_hom = homogenized_tensor(cb)
    err = np.abs(a_hom - 2.0 * np.eye(2)).max() / 2.0
    print(f"checkerboard {m:4d}^2: a_hom[0,0] = {a_hom[0, 0]:.5f}, "
          f"relative error {err:.2e}")
