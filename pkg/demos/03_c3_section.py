"""
A contextual observable that no operator induces
================================================

In C^3 take two rank-one projections that do not commute. Give each context
the value I - P_k when it contains P_k and I otherwise. The assignment is
compatible on every pair of contexts, yet it is not the image of any
Hermitian matrix.
"""

import numpy as np

from ctxobs.plattice import Projection
from ctxobs.presheaf import (
    c3_counterexample,
    is_induced_by,
    refute_inducing_operator,
    structured_c3_family,
    validate_section,
)

# %%
p1 = Projection.span(np.array([1.0, 0.0, 0.0]))
p2 = Projection.span(np.array([1.0, 1.0, 0.0]))
family = structured_c3_family(p1, p2, n_random=1000, seed=0)
section = c3_counterexample(p1, p2, family)
ok, violations = validate_section(section)
print(f"{len(family)} contexts, compatible: {ok}, violations: {len(violations)}")

# %%
# The two natural candidates each fail somewhere.
for name, p in (("I - P1", p1), ("I - P2", p2)):
    induced, bad = is_induced_by(section, np.eye(3) - p.matrix)
    print(f"{name} induces the section: {induced} (fails on {len(bad)} contexts)")

# %%
# The structural argument rules out every operator, not just these two.
ref = refute_inducing_operator(section)
for step in ref.reasoning:
    print("-", step)
print("refuted:", ref.refuted)
