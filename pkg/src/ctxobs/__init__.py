"""Contextual observables on finite-dimensional matrix algebras.

Projection lattices, spectral families and the spectral order; restriction
of operators to abelian contexts; observable and state presheaves over
finite context families, with their global sections and counterexamples.
"""
from .context import (
    AbelianContext,
    Quasipoint,
    context_from_commuting,
    context_from_operator,
    context_meet,
    fiber,
    includes,
    projections_in,
    quasipoint_project,
)
from .linalg import (
    DEFAULT_TOLERANCES,
    DimensionMismatch,
    InvariantError,
    NumericError,
    Subspace,
    ToleranceConfig,
    jacobi_eigh,
    subspace_intersection,
    subspace_sum,
)
from .plattice import Projection, commutes, complement, eigh, join, leq, meet
from .presheaf import (
    ContextFamily,
    FormalObservable,
    GlobalSection,
    c3_counterexample,
    formal_eval,
    formal_restrict,
    glue_section,
    is_induced_by,
    presheaf_iso_check,
    refute_inducing_operator,
    section_from_operator,
    structured_c3_family,
    unglue,
    validate_section,
)
from .restrict import (
    AspectResult,
    coarse_grain,
    core,
    corner_lower,
    corner_upper,
    lower_aspect,
    support,
    upper_aspect,
)
from .spectral import (
    SpectralFamily,
    family_from_operator,
    mirrored_value,
    observable_value,
    spectral_join,
    spectral_leq,
    spectral_meet,
    to_operator,
)
from .states import (
    ContextState,
    ProjectionMeasure,
    StateSection,
    c2_counterexample,
    extend_measure,
    fit_density,
    point_measure_vector_state,
    quasistate_eval,
    restrict_state,
    section_from_density,
    section_from_measure,
    validate_state_section,
)

__version__ = "0.1.0"
