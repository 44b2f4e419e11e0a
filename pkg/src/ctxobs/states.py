"""Context states, the state presheaf and its global sections.

A state of an abelian context is a probability vector on its atoms; it is
at the same time a probability measure on the context's quasipoints. State
restriction to a smaller context sums the weights over each fiber.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .context import (
    AbelianContext,
    Quasipoint,
    fiber_map,
    overlap_matrix,
    projections_in,
    quasipoint_project,
)
from .linalg import (
    DEFAULT_TOLERANCES,
    InvariantError,
    NumericError,
    Subspace,
    ToleranceConfig,
    check_hermitian,
    check_same_dim,
    max_abs,
)
from .plattice import Projection, complement, eigh
from .presheaf import ContextFamily, projection_key
from .spectral import family_from_operator, observable_value


@dataclass(frozen=True)
class ContextState:
    context: AbelianContext
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(self.context),):
            raise InvariantError(f"need {len(self.context)} weights, got shape {w.shape}")
        if np.any(w < -1e-9) or abs(w.sum() - 1.0) > 1e-9:
            raise InvariantError(f"weights must be a probability vector, got {w.tolist()}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __call__(self, a, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> float:
        """φ(A) for A in the span of the context."""
        return float(self.context.coefficients(a, cfg) @ self.weights)

    def measure(self, p: Projection, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> float:
        subset = self.context.atom_subset(p, cfg)
        if subset is None:
            raise InvariantError("projection does not belong to the context")
        return float(self.weights[subset].sum())


def restrict_state(state: ContextState, a: AbelianContext,
                   cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> ContextState:
    """The restriction of a state of b to a ⊆ b: weights summed over fibers."""
    owners = fiber_map(state.context, a, cfg)
    out = np.zeros(len(a))
    np.add.at(out, owners, state.weights)
    return ContextState(a, out)


def extend_state(state: ContextState, b: AbelianContext,
                 cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> ContextState:
    """A state of b ⊇ a restricting to the given state (split each weight by atom rank)."""
    a = state.context
    owners = np.asarray(fiber_map(b, a, cfg))
    ranks = np.array([p.rank for p in b.atoms], dtype=float)
    totals = np.zeros(len(a))
    np.add.at(totals, owners, ranks)
    return ContextState(b, state.weights[owners] * ranks / totals[owners])


@dataclass
class StateSection:
    family: ContextFamily
    states: list

    def __post_init__(self):
        if len(self.states) != len(self.family):
            raise InvariantError(f"need {len(self.family)} states, got {len(self.states)}")
        for i, (ctx, st) in enumerate(zip(self.family, self.states)):
            if st.context is not ctx:
                raise InvariantError(f"state {i} belongs to a different context")

    @classmethod
    def from_weights(cls, family: ContextFamily, weights) -> "StateSection":
        return cls(family, [ContextState(ctx, w) for ctx, w in zip(family, weights)])


@dataclass(frozen=True)
class StateViolation:
    first: int
    second: int
    meet: int
    deviation: float


def validate_state_section(section: StateSection,
                           cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> tuple[bool, list[StateViolation]]:
    """Both states of every pair must restrict to the same state of their meet."""
    fam = section.family
    cache: dict[tuple[int, int], np.ndarray] = {}

    def restricted(i, k):
        if (i, k) not in cache:
            if fam[k].is_trivial():
                cache[i, k] = np.array([section.states[i].weights.sum()])
            else:
                owners = np.argmax(overlap_matrix(fam[k], fam[i], cfg), axis=0)
                out = np.zeros(len(fam[k]))
                np.add.at(out, owners, section.states[i].weights)
                cache[i, k] = out
        return cache[i, k]

    violations = []
    for i in range(len(fam)):
        for j in range(i + 1, len(fam)):
            k = int(fam.meet_index[i, j])
            dev = float(np.max(np.abs(restricted(i, k) - restricted(j, k))))
            if dev > cfg.tol_compare:
                violations.append(StateViolation(i, j, k, dev))
    return not violations, violations


# --- measures on projections ----------------------------------------------------

class ProjectionMeasure:
    """A [0, 1]-valued function recorded on finitely many projections."""

    def __init__(self, entries=()):
        self._values: dict[bytes, tuple[Projection, float]] = {}
        for p, v in entries:
            self.set(p, v)

    def set(self, p: Projection, value: float):
        value = float(value)
        if not -1e-9 <= value <= 1 + 1e-9:
            raise InvariantError(f"measure values lie in [0, 1], got {value}")
        self._values[projection_key(p)] = (p, value)

    def get(self, p: Projection) -> float | None:
        hit = self._values.get(projection_key(p))
        return None if hit is None else hit[1]

    def __len__(self):
        return len(self._values)

    def items(self):
        return list(self._values.values())

    @classmethod
    def from_function(cls, f, contexts) -> "ProjectionMeasure":
        """Record f on every projection of every context."""
        mu = cls()
        for ctx in contexts:
            for p in projections_in(ctx):
                mu.set(p, f(p))
        return mu

    @classmethod
    def from_density(cls, rho, contexts) -> "ProjectionMeasure":
        rho = np.asarray(rho, dtype=complex)
        return cls.from_function(lambda p: np.trace(rho @ p.matrix).real, contexts)


class AdditivityError(InvariantError):
    """A measure fails finite additivity; carries the offending orthogonal pair."""

    def __init__(self, message, pair=None, context=None):
        super().__init__(message)
        self.pair = pair
        self.context = context


@dataclass(frozen=True)
class LinearFunctional:
    """φ(Σ a_j P_j) = Σ a_j μ(P_j) on the span of a context."""

    context: AbelianContext
    measure: ProjectionMeasure
    weights: np.ndarray

    def __call__(self, a, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> float:
        return float(self.context.coefficients(a, cfg) @ self.weights)

    def evaluate(self, coefficients, projections, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> float:
        """Evaluate on an explicit orthogonal decomposition Σ a_j Q_j.

        The Q_j must be pairwise orthogonal projections of the context that
        sum to I; the value only uses μ(Q_j).
        """
        n = self.context.ambient_dim
        total = sum(p.rank for p in projections)
        if total != n or max_abs(sum(p.matrix for p in projections) - np.eye(n)) > cfg.tol_compare:
            raise InvariantError("representation projections must sum to I")
        out = 0.0
        for c, p in zip(coefficients, projections):
            value = self.measure.get(p)
            if value is None:
                raise InvariantError("measure undefined on a representation projection")
            out += float(c) * value
        return out

    @property
    def state(self) -> ContextState:
        return ContextState(self.context, self.weights)


def extend_measure(context: AbelianContext, mu: ProjectionMeasure,
                   cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> LinearFunctional:
    """Extend a finitely additive probability measure on P(context) to a state.

    Checks that μ is defined on all 2^m projections, that μ(I) = 1, and that
    μ(P_S) = Σ_{i∈S} μ(P_i) for every set S of atoms. The first failure is
    reported as an orthogonal pair (one atom, the rest of S).
    """
    m = len(context)
    projections = projections_in(context)
    values = []
    for mask, p in enumerate(projections):
        v = mu.get(p)
        if v is None:
            raise InvariantError(f"measure undefined on the projection with atom mask {mask:b}")
        values.append(v)
    if abs(values[-1] - 1.0) > cfg.tol_compare:
        raise AdditivityError(f"μ(I) = {values[-1]} != 1")
    for mask in range(1, 1 << m):
        low = mask & -mask
        rest = mask ^ low
        if rest and abs(values[mask] - values[low] - values[rest]) > cfg.tol_compare:
            raise AdditivityError(
                f"μ is not additive: μ(P+Q) = {values[mask]:.6g} but μ(P) + μ(Q) = "
                f"{values[low] + values[rest]:.6g}",
                pair=(projections[low], projections[rest]))
    weights = np.array([values[1 << i] for i in range(m)])
    return LinearFunctional(context, mu, weights)


def section_from_measure(family: ContextFamily, mu: ProjectionMeasure,
                         cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> StateSection:
    states = []
    for k, ctx in enumerate(family):
        try:
            states.append(extend_measure(ctx, mu, cfg).state)
        except AdditivityError as exc:
            raise AdditivityError(f"context {k}: {exc}", pair=exc.pair, context=k) from None
    return StateSection(family, states)


def section_from_density(family: ContextFamily, rho,
                         cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> StateSection:
    """The section ctx ↦ tr(ρ ·)|ctx."""
    rho = check_hermitian(rho, cfg)
    check_same_dim(rho.shape[0], family.ambient_dim)
    states = []
    for ctx in family:
        w = np.array([np.trace(rho @ p.matrix).real for p in ctx.atoms])
        states.append(ContextState(ctx, np.clip(w, 0.0, None) / np.clip(w, 0.0, None).sum()))
    return StateSection(family, states)


# --- measures on quasipoints ------------------------------------------------------

def measure_to_state(context: AbelianContext, nu) -> ContextState:
    """Φ: a probability measure on the quasipoints of a context ↦ its integral state."""
    return ContextState(context, np.asarray(nu, dtype=float))


def state_to_measure(state: ContextState) -> np.ndarray:
    """Φ⁻¹: the measure of each atomic quasipoint."""
    return np.array(state.weights)


def pushforward(b: AbelianContext, a: AbelianContext, nu,
                cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """Image of a quasipoint measure of b under the projection onto quasipoints of a."""
    out = np.zeros(len(a))
    for j, weight in enumerate(nu):
        out[quasipoint_project(b, a, Quasipoint(b, j), cfg).atom_index] += weight
    return out


def naturality_square(b: AbelianContext, a: AbelianContext, nu,
                      cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
    """Φ_a(push ν) == (Φ_b ν)|_a, compared exactly."""
    one = measure_to_state(a, pushforward(b, a, nu, cfg))
    other = restrict_state(measure_to_state(b, nu), a, cfg)
    return bool(np.array_equal(one.weights, other.weights))


# --- counterexample in C^2 -------------------------------------------------------

@dataclass(frozen=True)
class LinearityReport:
    """P + Q = a R + b (I - R); a linear φ vanishing on P, Q, R would give 0 = b."""

    a: float
    b: float
    lhs: float
    rhs: float
    residual: float
    section_valid: bool


def c2_counterexample(cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> tuple[StateSection, LinearityReport]:
    p = Projection(Subspace(np.array([1.0, 0.0]), 2))
    q = Projection(Subspace(np.array([1.0, 1.0]) / np.sqrt(2), 2))
    (b, low), (a, high) = eigh(p.matrix + q.matrix, cfg)
    r = high
    contexts = [AbelianContext([x, complement(x, cfg)], cfg) for x in (p, q, r)]
    family = ContextFamily(contexts, cfg)
    weights = []
    for ctx in family:
        # weight 0 on P, Q, R; everything on the complementary atom
        weights.append([1.0] if ctx.is_trivial() else [0.0, 1.0])
    section = StateSection.from_weights(family, weights)
    valid, _ = validate_state_section(section, cfg)
    # values of the would-be linear functional, read off the section itself
    phi = {}
    for x in (p, q, r):
        k = family.index_of(AbelianContext([x, complement(x, cfg)], cfg))
        phi[projection_key(x)] = section.states[k].measure(x, cfg)
    lhs = phi[projection_key(p)] + phi[projection_key(q)]
    rhs = a * phi[projection_key(r)] + b * (1.0 - phi[projection_key(r)])
    report = LinearityReport(a=a, b=b, lhs=lhs, rhs=rhs, residual=abs(lhs - rhs), section_valid=valid)
    return section, report


# --- density fitting ---------------------------------------------------------------

def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {x >= 0, Σx = 1}."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def _project_density(x: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh((x + x.conj().T) / 2)
    return (vectors * _project_simplex(values)) @ vectors.conj().T


@dataclass(frozen=True)
class DensityFit:
    density: np.ndarray
    residual: float
    iterations: int


def fit_density(section: StateSection, cfg: ToleranceConfig = DEFAULT_TOLERANCES,
                max_iter: int = 100_000, tol: float = 1e-10) -> DensityFit:
    """Least-squares density matrix for the section's values on every atom.

    Accelerated projected gradient on ½ Σ (tr(ρ P) - w_P)² over the set of
    unit-trace positive matrices, with adaptive restart. The reported
    residual is the largest |tr(ρ P) - value(P)| over every projection of
    every context.
    """
    n = section.family.ambient_dim
    if n < 2:
        raise InvariantError("density fitting needs dimension at least 2")
    mats, targets = [], []
    for st in section.states:
        for p, w in zip(st.context.atoms, st.weights):
            mats.append(p.matrix)
            targets.append(w)
    ops = np.array(mats)
    targets = np.array(targets)
    flat = ops.reshape(len(ops), -1)
    # tr(ρ P) = <vec P, vec ρ> for Hermitian P
    gram = (flat.conj() @ flat.T).real
    step = 1.0 / max(np.linalg.eigvalsh(gram)[-1], 1e-12)

    def residuals(x):
        return np.einsum("kij,ji->k", ops, x).real - targets

    def objective(x):
        return 0.5 * float(residuals(x) @ residuals(x))

    x = np.eye(n, dtype=complex) / n
    y, t = x.copy(), 1.0
    f_prev = objective(x)
    for it in range(1, max_iter + 1):
        grad = np.einsum("k,kij->ij", residuals(y), ops)
        x_new = _project_density(y - step * grad)
        moved = np.linalg.norm(x_new - y) / step
        f_new = objective(x_new)
        if f_new > f_prev:
            # restart the momentum when the objective goes up
            y, t = x.copy(), 1.0
            continue
        t_new = (1 + np.sqrt(1 + 4 * t * t)) / 2
        y = x_new + ((t - 1) / t_new) * (x_new - x)
        x, t, f_prev = x_new, t_new, f_new
        if moved <= tol:
            break
    else:
        raise NumericError(f"density fit did not converge; objective {f_prev:.3g}, "
                           f"last step {moved:.3g}", iterations=max_iter)
    residual = 0.0
    for st in section.states:
        for mask, p in enumerate(projections_in(st.context)):
            idx = [i for i in range(len(st.context)) if mask >> i & 1]
            value = float(st.weights[idx].sum())
            residual = max(residual, abs(np.trace(x @ p.matrix).real - value))
    return DensityFit(x, residual, it)


# --- vector states and point measures ---------------------------------------------

@dataclass(frozen=True)
class PointMeasure:
    state: ContextState
    is_dirac: bool
    atom_index: int | None


def point_measure_vector_state(context: AbelianContext, x,
                               cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> PointMeasure:
    """The vector state of x on a maximal context, as a measure on its quasipoints.

    It is a point measure exactly when x spans one of the atoms; otherwise
    the Born weights |<x, e_i>|² are returned, flagged non-Dirac.
    """
    if not context.is_maximal():
        raise InvariantError("the context must be maximal (rank-one atoms)")
    x = np.asarray(x, dtype=complex)
    check_same_dim(x.size, context.ambient_dim)
    if abs(np.linalg.norm(x) - 1) > 1e-9:
        raise InvariantError("x must be a unit vector")
    w = np.array([np.vdot(x, p.matrix @ x).real for p in context.atoms])
    w = np.clip(w, 0.0, None)
    w = w / w.sum()
    hits = np.flatnonzero(np.abs(w - 1) <= cfg.tol_compare)
    if hits.size:
        w = np.zeros(len(context))
        w[hits[0]] = 1.0
        return PointMeasure(ContextState(context, w), True, int(hits[0]))
    return PointMeasure(ContextState(context, w), False, None)


def vector_from_point_measure(state: ContextState, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """The unit ray (as a representative vector) of a Dirac state on a maximal context."""
    if not state.context.is_maximal():
        raise InvariantError("the context must be maximal (rank-one atoms)")
    hits = np.flatnonzero(np.abs(state.weights - 1) <= cfg.tol_compare)
    if hits.size != 1:
        raise InvariantError("state is not a point measure")
    return np.array(state.context.atoms[hits[0]].range.basis[:, 0])


# --- quasistates -------------------------------------------------------------------

def _compressed_value(a: np.ndarray, basis: np.ndarray, x: np.ndarray, cfg) -> float:
    """r of the compression PAP (in the corner algebra of P) at the ray of x."""
    b = basis.conj().T @ a @ basis
    y = basis.conj().T @ x
    k = basis.shape[1]
    fam = family_from_operator((b + b.conj().T) / 2, cfg)
    return observable_value(fam, Projection(Subspace(y / np.linalg.norm(y), k)), cfg)


@dataclass(frozen=True)
class QuasistateReport:
    value: float
    expectation: float
    sampled_inf: float
    samples: int


def quasistate_eval(x, a, samples: int = 100, seed: int = 0,
                    cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> QuasistateReport:
    """Compressed observable values along the quasipoint of projections above x.

    ``value`` is the value at P = P_{Cx}; ``sampled_inf`` is the smallest
    value seen over random projections P >= P_{Cx} (including P_{Cx}). No
    claim is made that the sample attains the true infimum.
    """
    a = check_hermitian(a, cfg)
    x = np.asarray(x, dtype=complex)
    n = check_same_dim(a.shape[0], x.size)
    if abs(np.linalg.norm(x) - 1) > 1e-9:
        raise InvariantError("x must be a unit vector")
    if samples < 1:
        raise InvariantError("samples must be positive")
    value = _compressed_value(a, x.reshape(-1, 1), x, cfg)
    rng = np.random.default_rng(seed)
    best = value
    for _ in range(samples):
        k = int(rng.integers(1, n + 1))
        extra = rng.standard_normal((n, k - 1)) + 1j * rng.standard_normal((n, k - 1))
        q, _ = np.linalg.qr(np.column_stack([x, extra]))
        best = min(best, _compressed_value(a, q, x, cfg))
    return QuasistateReport(value, float(np.vdot(x, a @ x).real), best, samples)
