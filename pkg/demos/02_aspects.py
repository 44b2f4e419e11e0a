"""
Upper and lower aspects in a commutative context
================================================

Restricting an observable to an abelian subalgebra cannot keep it exact.
Instead we get the best approximations from above and from below in the
spectral order.
"""

import numpy as np

from ctxobs.context import AbelianContext
from ctxobs.restrict import coarse_grain, lower_aspect, upper_aspect
from ctxobs.sampling import random_hermitian
from ctxobs.spectral import spectral_leq

np.set_printoptions(precision=4, suppress=True)

# %%
# A context given by the atoms P_e1 and P_e2 + P_e3.
ctx = AbelianContext.from_partition([[0], [1, 2]])
a = np.diag([1.0, 2.0, 3.0])
print("upper aspect:", np.diag(upper_aspect(ctx, a).operator).real)
print("lower aspect:", np.diag(lower_aspect(ctx, a).operator).real)

# %%
# In the trivial context the aspects shrink to the extreme eigenvalues.
triv = AbelianContext.trivial(3)
print("trivial context:", upper_aspect(triv, a).spectrum, lower_aspect(triv, a).spectrum)

# %%
# For a generic observable the aspects sandwich it in the spectral order.
rng = np.random.default_rng(0)
h = random_hermitian(3, rng)
lo, up = lower_aspect(ctx, h).operator, upper_aspect(ctx, h).operator
print("eigenvalues of A:", np.linalg.eigvalsh(h))
print("lower <= A <= upper:", spectral_leq(lo, h) and spectral_leq(h, up))

# %%
# Coarse-graining along spectral points. The upper aspect keeps the points
# and the top eigenvalue. The lower aspect takes the smallest eigenvalue in
# each cell, which for a finite spectrum is not the left partition point.
cg = coarse_grain(np.diag([1.0, 2, 3, 4, 5]), (2, 4))
print("upper:", np.diag(cg.upper.operator).real)
print("lower:", np.diag(cg.lower.operator).real)
print("lower Riemann sum:", np.diag(cg.lower_riemann_sum).real)
