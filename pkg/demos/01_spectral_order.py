"""
Spectral order on Hermitian matrices
====================================

Two Hermitian matrices are compared through their spectral families rather
than through A - B >= 0. The resulting order is a lattice, and on
projections it agrees with the usual order of subspaces.
"""

import numpy as np

from ctxobs.plattice import Projection, basis_projection, join
from ctxobs.spectral import (
    family_from_operator,
    mirrored_value,
    observable_value,
    spectral_join,
    spectral_leq,
    spectral_meet,
)

np.set_printoptions(precision=4, suppress=True)

# %%
# A spectral family is a finite staircase of projections.
a = np.diag([1.0, 2.0, 3.0])
fam = family_from_operator(a)
for lam, e in zip(fam.jumps, fam.cumulative):
    print(f"E({lam:g}) has rank {e.rank}")

# %%
# The spectral order is stricter than the operator order: here B - C is
# positive, but the spectral projections of B do not sit inside those of C.
b = np.array([[2.0, 1.0], [1.0, 1.0]])
c = np.diag([1.0, 0.0])
print("C <= B in operator order:", bool(np.all(np.linalg.eigvalsh(b - c) >= -1e-12)))
print("C <= B in spectral order:", spectral_leq(c, b))
print("C <= diag(1, 1) in spectral order:", spectral_leq(c, np.eye(2)))

# %%
# Joins and meets exist for non-commuting inputs as well.
x, y = np.diag([1.0, 2.0]), np.array([[1.5, 0.5], [0.5, 1.5]])
print("join:\n", np.round(spectral_join([x, y]).real, 12) + 0.0)
print("meet:\n", np.round(spectral_meet([x, y]).real, 12) + 0.0)

# %%
# r_A(P) is the smallest spectral value whose projection dominates P.
# s_A(P) is its mirror image from below.
line = Projection.span(np.array([1.0, 1.0, 0.0]))
print("r_A on the line through e1 + e2:", observable_value(a, line))
print("s_A on the same line:", mirrored_value(a, line))
print("r_A of a join is the larger value:",
      observable_value(a, join(line, basis_projection(3, [2]))))
