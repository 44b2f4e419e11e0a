"""Observable presheaves over a finite family of contexts, and their global sections.

A :class:`ContextFamily` is an explicit, meet-closed list of contexts; it
stands in for the (uncountable) category of all abelian subalgebras. Every
statement about "global" sections is therefore relative to the family.

Restricting a context-valued operator to a smaller context only needs the
atom coefficients: for ``a ⊆ b`` the upper restriction takes the maximum of
the b-coefficients over each fiber, the lower one the minimum.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .context import (
    AbelianContext,
    context_meet,
    fiber_map,
    overlap_matrix,
    projections_in,
    random_context,
    random_unitary,
)
from .linalg import (
    DEFAULT_TOLERANCES,
    InvariantError,
    Subspace,
    ToleranceConfig,
    check_hermitian,
    check_same_dim,
)
from .plattice import Projection, commutes, complement, eigh, join
from .restrict import aspect_coefficients
from .spectral import observable_value

MODES = ("upper", "lower")


def _check_mode(mode):
    if mode not in MODES:
        raise InvariantError(f"mode must be 'upper' or 'lower', got {mode!r}")


def projection_key(p: Projection, decimals: int = 7) -> bytes:
    """Hashable fingerprint of a projection (its rounded matrix)."""
    # adding 0.0 turns -0.0 into 0.0 so that equal matrices give equal bytes
    return (np.round(p.matrix, decimals) + 0.0).tobytes()


def context_key(ctx: AbelianContext, decimals: int = 7) -> tuple:
    return tuple(sorted(projection_key(p, decimals) for p in ctx.atoms))


class ContextFamily:
    """A finite, duplicate-free family of contexts closed under pairwise meets.

    ``meet_index[i, j]`` is the index of ``contexts[i] ∩ contexts[j]``.
    Inputs are deduplicated; the closure may append new contexts (typically
    the trivial one).
    """

    def __init__(self, contexts, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
        contexts = list(contexts)
        if not contexts:
            raise InvariantError("a context family needs at least one context")
        self.ambient_dim = check_same_dim(*(c.ambient_dim for c in contexts))
        self.cfg = cfg
        self.contexts: list[AbelianContext] = []
        self._index: dict[tuple, int] = {}
        for c in contexts:
            self._add(c)
        self._close()

    def _add(self, ctx: AbelianContext) -> int:
        key = context_key(ctx)
        if key not in self._index:
            self._index[key] = len(self.contexts)
            self.contexts.append(ctx)
        return self._index[key]

    def _close(self):
        n, cfg = self.ambient_dim, self.cfg
        meets: dict[tuple[int, int], int] = {}
        frames = np.empty((n, 0), dtype=complex)
        trivial = None
        i = 0
        while i < len(self.contexts):
            ci = self.contexts[i]
            meets[i, i] = i
            if i:
                # all frame columns overlap: the overlap graph is complete, the meet trivial
                dense = (np.abs(ci.frame.conj().T @ frames[:, : i * n]) > cfg.tol_compare).reshape(n, i, n)
                complete = dense.all(axis=(0, 2))
                if complete.any() and trivial is None:
                    trivial = self._add(AbelianContext.trivial(n))
                for j in np.flatnonzero(complete):
                    meets[i, j] = meets[j, i] = trivial
                for j in np.flatnonzero(~complete):
                    k = self._add(context_meet(ci, self.contexts[j], cfg))
                    meets[i, j] = meets[j, i] = k
            if frames.shape[1] == i * n:
                # amortized growth of the stacked frames
                frames = np.hstack([frames, np.empty((n, max(i, 8) * n), dtype=complex)])
            frames[:, i * n:(i + 1) * n] = ci.frame
            i += 1
        size = len(self.contexts)
        table = np.empty((size, size), dtype=np.int64)
        for (a, b), k in meets.items():
            table[a, b] = k
        table.setflags(write=False)
        self.meet_index = table

    def __len__(self):
        return len(self.contexts)

    def __iter__(self):
        return iter(self.contexts)

    def __getitem__(self, i) -> AbelianContext:
        return self.contexts[i]

    def index_of(self, ctx: AbelianContext) -> int | None:
        return self._index.get(context_key(ctx))

    def chains(self) -> list[tuple[int, int]]:
        """All pairs (a, b) with contexts[a] ⊆ contexts[b], read off the meet table."""
        size = len(self)
        return [(a, b) for a in range(size) for b in range(size) if self.meet_index[a, b] == a]


def restrict_coefficients(b: AbelianContext, coefficients, a: AbelianContext, mode: str = "upper",
                          cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """Coefficients of the restriction from b to a ⊆ b: fiber max (upper) or min (lower)."""
    _check_mode(mode)
    owners = fiber_map(b, a, cfg)
    return _reduce_fibers(owners, np.asarray(coefficients, dtype=float), len(a), mode)


def _reduce_fibers(owners, coefficients, size, mode):
    if mode == "upper":
        out = np.full(size, -np.inf)
        np.maximum.at(out, owners, coefficients)
    else:
        out = np.full(size, np.inf)
        np.minimum.at(out, owners, coefficients)
    return out


@dataclass(frozen=True)
class Violation:
    first: int
    second: int
    meet: int
    deviation: float


@dataclass
class GlobalSection:
    """One operator per context of a family, stored by its atom coefficients.

    Compatibility is not enforced here; :func:`validate_section` checks it.
    ``origin`` records how the section was built (used by the refuter).
    """

    family: ContextFamily
    coefficients: list
    origin: tuple = field(default=())

    def __post_init__(self):
        if len(self.coefficients) != len(self.family):
            raise InvariantError(f"need {len(self.family)} values, got {len(self.coefficients)}")
        self.coefficients = [np.asarray(c, dtype=float) for c in self.coefficients]
        for i, (ctx, c) in enumerate(zip(self.family, self.coefficients)):
            if c.shape != (len(ctx),) or not np.all(np.isfinite(c)):
                raise InvariantError(f"value {i} does not match the atoms of its context")

    @classmethod
    def from_operators(cls, family: ContextFamily, operators,
                       cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> "GlobalSection":
        """Build from explicit operators; each must lie in its context's span."""
        operators = list(operators)
        if len(operators) != len(family):
            raise InvariantError(f"need {len(family)} operators, got {len(operators)}")
        coeffs = []
        for i, (ctx, op) in enumerate(zip(family, operators)):
            try:
                coeffs.append(ctx.coefficients(check_hermitian(op, cfg), cfg))
            except InvariantError as exc:
                raise InvariantError(f"value for context {i}: {exc}") from None
        return cls(family, coeffs)

    def value(self, i: int) -> np.ndarray:
        return self.family[i].operator(self.coefficients[i])

    def values(self) -> list[np.ndarray]:
        return [self.value(i) for i in range(len(self.family))]


def section_from_operator(a, family: ContextFamily, mode: str = "upper",
                          cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> GlobalSection:
    """The canonical section A ↦ (ρ_ctx A)_ctx, or (σ_ctx A)_ctx in lower mode."""
    _check_mode(mode)
    a = check_hermitian(a, cfg)
    check_same_dim(a.shape[0], family.ambient_dim)
    decomposition = eigh(a, cfg)
    coeffs = [aspect_coefficients(ctx, decomposition, mode, cfg) for ctx in family]
    return GlobalSection(family, coeffs, origin=("operator", mode))


class _Restrictor:
    """Memoized fiber reductions of section values onto meet contexts."""

    def __init__(self, section: GlobalSection, mode: str, cfg: ToleranceConfig):
        self.section, self.mode, self.cfg = section, mode, cfg
        self.cache: dict[tuple[int, int], np.ndarray] = {}

    def __call__(self, i: int, k: int) -> np.ndarray:
        hit = self.cache.get((i, k))
        if hit is None:
            fam = self.section.family
            coeffs = self.section.coefficients[i]
            if i == k:
                hit = coeffs
            elif fam[k].is_trivial():
                hit = np.array([coeffs.max() if self.mode == "upper" else coeffs.min()])
            else:
                owners = np.argmax(overlap_matrix(fam[k], fam[i], self.cfg), axis=0)
                hit = _reduce_fibers(owners, coeffs, len(fam[k]), self.mode)
            self.cache[i, k] = hit
        return hit


def validate_section(section: GlobalSection, mode: str = "upper",
                     cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> tuple[bool, list[Violation]]:
    """Check compatibility on every unordered pair of contexts.

    Both values are restricted to the meet of the two contexts and compared
    coefficientwise. Violations come back ordered by context indices.
    """
    _check_mode(mode)
    fam = section.family
    restrict = _Restrictor(section, mode, cfg)
    pick = np.max if mode == "upper" else np.min
    # restriction to the trivial context is the largest (smallest) coefficient
    extreme = np.array([pick(c) for c in section.coefficients])
    trivial = np.array([ctx.is_trivial() for ctx in fam])
    violations = []
    for i in range(len(fam)):
        rest = np.arange(i + 1, len(fam))
        meets = fam.meet_index[i, i + 1:]
        to_trivial = trivial[meets]
        dev = np.abs(extreme[rest] - extreme[i])
        for j in rest[to_trivial & (dev > cfg.tol_compare)]:
            violations.append(Violation(i, int(j), int(fam.meet_index[i, j]), float(dev[j - i - 1])))
        for j in rest[~to_trivial]:
            k = int(fam.meet_index[i, j])
            d = float(np.max(np.abs(restrict(i, k) - restrict(int(j), k))))
            if d > cfg.tol_compare:
                violations.append(Violation(i, int(j), k, d))
    violations.sort(key=lambda v: (v.first, v.second))
    return not violations, violations


def is_induced_by(section: GlobalSection, candidate, mode: str = "upper",
                  cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> tuple[bool, list[int]]:
    """Does the candidate operator induce the section? Returns the contexts where it does not."""
    induced = section_from_operator(candidate, section.family, mode, cfg)
    bad = [i for i, (x, y) in enumerate(zip(section.coefficients, induced.coefficients))
           if np.max(np.abs(x - y)) > cfg.tol_compare]
    return not bad, bad


def presheaf_iso_check(family: ContextFamily, a, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
    """f ↦ -f intertwines the two presheaves: σ_ctx(A) = -ρ_ctx(-A) in every context."""
    a = check_hermitian(a, cfg)
    lower = section_from_operator(a, family, "lower", cfg)
    upper_neg = section_from_operator(-a, family, "upper", cfg)
    return all(np.max(np.abs(x + y)) <= cfg.tol_compare
               for x, y in zip(lower.coefficients, upper_neg.coefficients))


# --- the counterexample in C^3 -------------------------------------------------

def _check_c3_generators(p1: Projection, p2: Projection, cfg):
    if p1.dim != 3 or p2.dim != 3:
        raise InvariantError("the counterexample lives in C^3")
    if p1.rank != 1 or p2.rank != 1:
        raise InvariantError("both generators must be rank-1 projections")
    if commutes(p1, p2, cfg):
        raise InvariantError("the generators must not commute")


def c3_counterexample(p1: Projection, p2: Projection, family: ContextFamily,
                      cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> GlobalSection:
    """The section valued I - P_k on contexts containing P_k and I elsewhere.

    No context contains both generators because they do not commute.
    """
    _check_c3_generators(p1, p2, cfg)
    if family.ambient_dim != 3:
        raise InvariantError("the family must consist of contexts in C^3")
    coeffs = []
    for ctx in family:
        c = np.ones(len(ctx))
        for p in (p1, p2):
            subset = ctx.atom_subset(p, cfg)
            if subset is not None:
                c[subset] = 0.0
        coeffs.append(c)
    return GlobalSection(family, coeffs, origin=("c3", p1, p2))


def _complement_frame(vectors, cfg):
    """Orthonormal basis of the orthogonal complement of the given vectors' span."""
    return Subspace.span(vectors, 3, cfg).complement(cfg).basis


def structured_c3_family(p1: Projection, p2: Projection, n_random: int = 1000, seed: int = 0,
                         cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> ContextFamily:
    """A family exercising every case of the counterexample, plus random contexts.

    It contains: contexts through each generator (maximal ones rotated in the
    orthogonal plane, and the two-atom ones), the two maximal contexts
    {P_k, Q, R_k} sharing Q = I - (P_1 ∨ P_2), their meet {Q, I - Q}, and
    ``n_random`` Haar-random contexts of two or three atoms.
    """
    _check_c3_generators(p1, p2, cfg)
    rng = np.random.default_rng(seed)
    q = complement(join(p1, p2, cfg), cfg)
    contexts = [AbelianContext.trivial(3)]
    for p in (p1, p2):
        x = p.range.basis[:, 0]
        contexts.append(AbelianContext([p, complement(p, cfg)], cfg))
        # {P_k, Q, R_k}: R_k completes P_k and Q to a frame
        r = Projection(Subspace(_complement_frame([x, q.range.basis[:, 0]], cfg), 3))
        contexts.append(AbelianContext([p, q, r], cfg))
        plane = _complement_frame([x], cfg)
        for _ in range(8):
            u = plane @ random_unitary(2, rng)
            contexts.append(AbelianContext.from_partition([[0], [1], [2]],
                                                          np.column_stack([x, u])))
    contexts.append(AbelianContext([q, complement(q, cfg)], cfg))
    for _ in range(n_random):
        contexts.append(random_context(3, rng, atoms=int(rng.integers(2, 4))))
    return ContextFamily(contexts, cfg)


@dataclass(frozen=True)
class Refutation:
    """Certificate that no single operator induces a counterexample section."""

    refuted: bool
    values_are_projections: bool
    zero_rays: tuple
    forced_rank: int
    candidates: tuple
    witness_norm: float
    candidate_failures: tuple
    reasoning: tuple


def refute_inducing_operator(section: GlobalSection,
                             cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Refutation:
    """Structural refutation for a section built by :func:`c3_counterexample`.

    1. Every value is a projection, so an inducing operator E is itself a
       projection (a maximal context diagonalizing E is fixed by restriction).
    2. For a projection E the function P ↦ r_E(P) vanishes on a rank-one P
       exactly when P ≤ I - E. The section vanishes on exactly two distinct
       rays, so I - E would have to be one ray: E has rank 2.
    3. A rank-2 projection has a single zero ray, which forces both
       E = I - P_1 and E = I - P_2; these differ by ‖P_1 - P_2‖ > 0.
    """
    if not section.origin or section.origin[0] != "c3":
        raise InvariantError("section was not built by c3_counterexample")
    _, p1, p2 = section.origin
    fam = section.family
    values_are_projections = all(
        np.all((np.abs(c) <= cfg.tol_compare) | (np.abs(c - 1) <= cfg.tol_compare))
        for c in section.coefficients)
    rays: dict[bytes, Projection] = {}
    for ctx, c in zip(fam, section.coefficients):
        for atom, value in zip(ctx.atoms, c):
            if atom.rank == 1 and abs(value) <= cfg.tol_compare:
                rays.setdefault(projection_key(atom), atom)
    zero_rays = tuple(rays.values())
    if not values_are_projections or len(zero_rays) != 2:
        raise InvariantError("section does not have the counterexample shape")
    candidates = tuple(complement(p, cfg) for p in zero_rays)
    witness = float(np.linalg.norm(candidates[0].matrix - candidates[1].matrix, 2))
    failures = []
    for e in candidates:
        _, bad = is_induced_by(section, e.matrix, "upper", cfg)
        failures.append(tuple(bad))
    reasoning = (
        "all section values are projections, so an inducing operator is a projection E",
        f"the section vanishes on exactly {len(zero_rays)} distinct rays; "
        "r_E vanishes on the rays below I - E, so I - E is a single ray and rank E = 2",
        f"E would equal both candidates, but they differ by {witness:.6g} in operator norm",
    )
    return Refutation(
        refuted=witness > cfg.tol_compare,
        values_are_projections=values_are_projections,
        zero_rays=zero_rays,
        forced_rank=2,
        candidates=candidates,
        witness_norm=witness,
        candidate_failures=tuple(failures),
        reasoning=reasoning,
    )


# --- sections as functions on projections ---------------------------------------

class ProjectionTable:
    """A real-valued function on finitely many nonzero projections."""

    def __init__(self):
        self._entries: dict[bytes, tuple[Projection, float]] = {}

    def set(self, p: Projection, value: float):
        self._entries[projection_key(p)] = (p, float(value))

    def get(self, p: Projection) -> float | None:
        hit = self._entries.get(projection_key(p))
        return None if hit is None else hit[1]

    def __getitem__(self, p: Projection) -> float:
        value = self.get(p)
        if value is None:
            raise KeyError("projection not in table")
        return value

    def __contains__(self, p: Projection) -> bool:
        return projection_key(p) in self._entries

    def __len__(self):
        return len(self._entries)

    def items(self):
        return list(self._entries.values())


def glue_section(section: GlobalSection, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> ProjectionTable:
    """The function f(P) = r_{value(ctx)}(P) for any context containing P.

    Refuses sections that fail validation; compatibility is exactly what
    makes f independent of the chosen context.
    """
    ok, violations = validate_section(section, "upper", cfg)
    if not ok:
        raise InvariantError(f"section is not compatible ({len(violations)} violating pairs)")
    table = ProjectionTable()
    for ctx, c in zip(section.family, section.coefficients):
        m = len(ctx)
        for mask, p in enumerate(projections_in(ctx)):
            if mask == 0:
                continue
            value = max(c[i] for i in range(m) if mask >> i & 1)
            known = table.get(p)
            if known is not None and abs(known - value) > cfg.tol_compare:
                raise InvariantError("glued function depends on the context")
            table.set(p, value)
    return table


@dataclass(frozen=True)
class SupViolation:
    context: int
    atoms: tuple
    value: float
    expected: float


def unglue(family: ContextFamily, table: ProjectionTable,
           cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> tuple[GlobalSection | None, list[SupViolation]]:
    """Rebuild a section from a function on projections.

    Inside each context f must send a join of atoms to the maximum over those
    atoms; every failure is reported with the offending family of atoms.
    """
    coeffs, violations = [], []
    for k, ctx in enumerate(family):
        m = len(ctx)
        projections = projections_in(ctx)
        missing = [mask for mask in range(1, 1 << m) if projections[mask] not in table]
        if missing:
            raise InvariantError(f"table is undefined on {len(missing)} projections of context {k}")
        c = np.array([table[ctx.atoms[i]] for i in range(m)])
        for mask in range(1, 1 << m):
            atoms = tuple(i for i in range(m) if mask >> i & 1)
            if len(atoms) < 2:
                continue
            expected = float(max(c[list(atoms)]))
            value = table[projections[mask]]
            if abs(value - expected) > cfg.tol_compare:
                violations.append(SupViolation(k, atoms, value, expected))
        coeffs.append(c)
    if violations:
        return None, violations
    return GlobalSection(family, coeffs, origin=("table",)), []


# --- formal differences of observable functions --------------------------------

@dataclass(frozen=True)
class FormalObservable:
    """Σ sign · r_A over a list of terms, optionally limited to one context."""

    terms: tuple
    domain: AbelianContext | None = None

    def __post_init__(self):
        if not self.terms:
            raise InvariantError("a formal observable needs at least one term")
        clean = []
        for sign, a in self.terms:
            if sign not in (1, -1):
                raise InvariantError(f"term sign must be +1 or -1, got {sign!r}")
            clean.append((int(sign), check_hermitian(a)))
        object.__setattr__(self, "terms", tuple(clean))

    @classmethod
    def of(cls, a) -> "FormalObservable":
        return cls(((1, a),))

    def __add__(self, other: "FormalObservable") -> "FormalObservable":
        return FormalObservable(self.terms + other.terms, self.domain or other.domain)

    def __neg__(self) -> "FormalObservable":
        return FormalObservable(tuple((-s, a) for s, a in self.terms), self.domain)

    def __sub__(self, other: "FormalObservable") -> "FormalObservable":
        return self + (-other)


def formal_eval(fo: FormalObservable, p: Projection, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> float:
    if fo.domain is not None and not fo.domain.contains(p, cfg):
        raise InvariantError("projection lies outside the domain of the restricted observable")
    return float(sum(sign * observable_value(a, p, cfg) for sign, a in fo.terms))


def formal_restrict(fo: FormalObservable, ctx: AbelianContext) -> FormalObservable:
    """Ordinary restriction: the same terms, evaluated only on projections of ctx."""
    return FormalObservable(fo.terms, ctx)
