"""
State sections in C^2 need not be linear
========================================

Distinct maximal contexts of C^2 meet only in the scalars, so a global
section of the state presheaf may assign any probability vector to each
context. Such a section can break linearity, and then no density matrix
reproduces it.
"""

import numpy as np

from ctxobs.context import diagonal_contexts
from ctxobs.presheaf import ContextFamily
from ctxobs.states import c2_counterexample, fit_density, section_from_density

# %%
section, report = c2_counterexample()
print("section compatible:", report.section_valid)
print(f"P + Q = {report.a:.5f} R + {report.b:.5f} (I - R)")
print("phi(P) + phi(Q) =", report.lhs)
print("a phi(R) + b phi(I - R) =", round(report.rhs, 6))

# %%
# The best density matrix misses the section by a wide margin.
fit = fit_density(section)
print("best fit residual:", round(fit.residual, 4))

# %%
# In C^3 a section coming from a density matrix is recovered exactly.
rho = np.diag([0.5, 0.3, 0.2])
fam = ContextFamily(diagonal_contexts(3))
fit3 = fit_density(section_from_density(fam, rho))
print("C^3 recovery error:", np.max(np.abs(fit3.density - rho)))
