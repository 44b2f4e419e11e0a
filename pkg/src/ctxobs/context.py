"""Abelian subalgebras of L(C^n) as partitions of unity, and the context category.

A context is stored by its atoms (minimal projections). Every finite
dimensional abelian von Neumann algebra is the span of its atoms, so the
atoms determine the subalgebra; the trivial context ``C·I`` has the single
atom ``I``.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .linalg import (
    DEFAULT_TOLERANCES,
    DimensionMismatch,
    InvariantError,
    Subspace,
    ToleranceConfig,
    check_same_dim,
    max_abs,
)
from .plattice import (
    Projection,
    commutes,
    complement,
    eigh,
    leq,
    meet,
    orthogonal,
    orthogonal_sum,
)

MAX_ENUMERATED_ATOMS = 20


class AbelianContext:
    """A partition of unity: pairwise orthogonal nonzero atoms summing to I."""

    __slots__ = ("atoms", "ambient_dim", "_frame", "_labels")

    def __init__(self, atoms, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
        atoms = tuple(atoms)
        if not atoms:
            raise InvariantError("a context needs at least one atom")
        n = check_same_dim(*(p.dim for p in atoms))
        if len(atoms) > n:
            raise InvariantError(f"{len(atoms)} atoms cannot be orthogonal in C^{n}")
        for i, p in enumerate(atoms):
            if p.is_zero():
                raise InvariantError(f"atom {i} is zero")
        frame = np.hstack([p.range.basis for p in atoms])
        if frame.shape[1] != n or max_abs(frame.conj().T @ frame - np.eye(n)) > cfg.tol_compare:
            raise InvariantError("atoms are not pairwise orthogonal or do not sum to I")
        self.atoms = atoms
        self.ambient_dim = n
        # unitary whose column blocks are the atom ranges; labels map columns to atoms
        self._frame = frame
        self._labels = np.repeat(np.arange(len(atoms)), [p.rank for p in atoms])

    @classmethod
    def trivial(cls, n: int) -> "AbelianContext":
        return cls([Projection.identity(n)])

    @classmethod
    def from_partition(cls, partition, basis=None, n: int | None = None,
                       cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> "AbelianContext":
        """Atoms spanned by groups of columns of an orthonormal ``basis``.

        ``partition`` is a list of index lists covering ``range(n)``; the
        default basis is the standard one.
        """
        if basis is None:
            if n is None:
                n = sum(len(block) for block in partition)
            basis = np.eye(n, dtype=complex)
        basis = np.asarray(basis, dtype=complex)
        n = basis.shape[0]
        flat = sorted(i for block in partition for i in block)
        if flat != list(range(n)):
            raise InvariantError(f"partition {partition} does not cover range({n}) exactly once")
        if max_abs(basis.conj().T @ basis - np.eye(n)) > cfg.tol_compare:
            raise InvariantError("basis is not orthonormal")
        return cls([Projection(Subspace(basis[:, sorted(block)], n)) for block in partition], cfg)

    def __len__(self):
        return len(self.atoms)

    @property
    def frame(self) -> np.ndarray:
        return self._frame

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    @property
    def block_starts(self) -> np.ndarray:
        """First frame column of each atom."""
        return np.concatenate([[0], np.cumsum([p.rank for p in self.atoms])[:-1]])

    def is_trivial(self) -> bool:
        return len(self.atoms) == 1

    def is_maximal(self) -> bool:
        return len(self.atoms) == self.ambient_dim

    def operator(self, coefficients) -> np.ndarray:
        """Σ c_i P_i."""
        coefficients = np.asarray(coefficients)
        if coefficients.shape != (len(self.atoms),):
            raise DimensionMismatch(f"need {len(self.atoms)} coefficients, got {coefficients.shape}")
        c = coefficients[self._labels]
        return (self._frame * c) @ self._frame.conj().T

    def coefficients(self, a, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
        """Coefficients of `a` on the atoms; raises if `a` is not in the span."""
        a = np.asarray(a, dtype=complex)
        check_same_dim(a.shape[0], self.ambient_dim)
        c = np.array([np.trace(p.matrix @ a).real / p.rank for p in self.atoms])
        if max_abs(self.operator(c) - a) > max(cfg.tol_compare, 1e-9 * max(1.0, max_abs(a))):
            raise InvariantError("operator does not lie in the span of the context")
        return c

    def contains_operator(self, a, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
        try:
            self.coefficients(a, cfg)
        except InvariantError:
            return False
        return True

    def atom_subset(self, p: Projection, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
        """Indices of the atoms summing to `p`, or None when p ∉ P(A)."""
        check_same_dim(p.dim, self.ambient_dim)
        subset = []
        for i, atom in enumerate(self.atoms):
            if leq(atom, p, cfg):
                subset.append(i)
            elif not orthogonal(atom, p, cfg):
                return None
        if sum(self.atoms[i].rank for i in subset) != p.rank:
            return None
        return subset

    def contains(self, p: Projection, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
        return self.atom_subset(p, cfg) is not None

    def sum_of(self, indices) -> Projection:
        return orthogonal_sum([self.atoms[i] for i in sorted(indices)], self.ambient_dim)

    def same_as(self, other: "AbelianContext", cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
        if self.ambient_dim != other.ambient_dim or len(self) != len(other):
            return False
        remaining = list(other.atoms)
        for p in self.atoms:
            for k, q in enumerate(remaining):
                if p.close_to(q, cfg):
                    del remaining[k]
                    break
            else:
                return False
        return True

    def __repr__(self):
        ranks = ",".join(str(p.rank) for p in self.atoms)
        return f"AbelianContext(dim={self.ambient_dim}, atom_ranks=[{ranks}])"


@dataclass(frozen=True)
class Quasipoint:
    """An atomic quasipoint: the dual ideal generated by one atom of a context."""

    context: AbelianContext
    atom_index: int

    def __post_init__(self):
        if not 0 <= self.atom_index < len(self.context):
            raise InvariantError(f"atom index {self.atom_index} out of range")

    @property
    def projection(self) -> Projection:
        return self.context.atoms[self.atom_index]


def context_from_commuting(projections, n: int | None = None,
                           cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> AbelianContext:
    """Context generated by pairwise commuting projections (common refinement)."""
    projections = list(projections)
    if not projections:
        if n is None:
            raise InvariantError("ambient dimension required for an empty generator list")
        return AbelianContext.trivial(n)
    n = check_same_dim(*(p.dim for p in projections))
    for (i, p), (j, q) in combinations(enumerate(projections), 2):
        if not commutes(p, q, cfg):
            raise InvariantError(f"projections {i} and {j} do not commute")
    atoms = [Projection.identity(n)]
    for q in projections:
        qc = complement(q, cfg)
        refined = []
        for a in atoms:
            for part in (meet(a, q, cfg), meet(a, qc, cfg)):
                if not part.is_zero():
                    refined.append(part)
        atoms = refined
    return AbelianContext(atoms, cfg)


def context_from_operator(a, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> AbelianContext:
    """The context generated by the spectral projections of a Hermitian matrix."""
    return AbelianContext([p for _, p in eigh(a, cfg)], cfg)


def overlap_matrix(a: AbelianContext, b: AbelianContext,
                   cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """Boolean matrix whose (i, j) entry says whether atom_i(a)·atom_j(b) != 0."""
    check_same_dim(a.ambient_dim, b.ambient_dim)
    gram = np.abs(a.frame.conj().T @ b.frame) > cfg.tol_compare
    rows = np.logical_or.reduceat(gram, a.block_starts, axis=0)
    return np.logical_or.reduceat(rows, b.block_starts, axis=1)


def overlap_components(overlap: np.ndarray):
    """Connected components of the bipartite overlap graph.

    Returns ``(comp_a, comp_b, count)``: the component label of each atom of
    either side and the number of components.
    """
    na, nb = overlap.shape
    comp_a = [-1] * na
    comp_b = [-1] * nb
    count = 0
    for start in range(na):
        if comp_a[start] >= 0:
            continue
        comp_a[start] = count
        stack = [start]
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(overlap[i]):
                if comp_b[j] < 0:
                    comp_b[j] = count
                    for k in np.flatnonzero(overlap[:, j]):
                        if comp_a[k] < 0:
                            comp_a[k] = count
                            stack.append(k)
        count += 1
    if min(comp_b, default=0) < 0:
        raise InvariantError("atom orthogonal to every atom of the other context")
    return comp_a, comp_b, count


def context_meet(a: AbelianContext, b: AbelianContext,
                 cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> AbelianContext:
    """a ∩ b: one atom per connected component of the overlap graph."""
    comp_a, _, count = overlap_components(overlap_matrix(a, b, cfg))
    if count == len(a):
        return a
    groups = [[i for i, c in enumerate(comp_a) if c == k] for k in range(count)]
    return AbelianContext([a.sum_of(g) for g in groups], cfg)


def includes(a: AbelianContext, b: AbelianContext,
             cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
    """a ⊆ b: every atom of a is a sum of atoms of b."""
    overlap = overlap_matrix(a, b, cfg)
    if np.any(overlap.sum(axis=0) != 1):
        return False
    for i, atom in enumerate(a.atoms):
        if not atom.close_to(b.sum_of(np.flatnonzero(overlap[i])), cfg):
            return False
    return True


def projections_in(a: AbelianContext) -> list[Projection]:
    """All 2^m projections of the context, ordered by the bitmask of atoms."""
    m = len(a)
    if m > MAX_ENUMERATED_ATOMS:
        raise InvariantError(f"refusing to enumerate 2^{m} projections (limit {MAX_ENUMERATED_ATOMS} atoms)")
    return [a.sum_of([i for i in range(m) if mask >> i & 1]) for mask in range(1 << m)]


def _check_inclusion(a, b, cfg):
    if not includes(a, b, cfg):
        raise InvariantError("the first context is not included in the second")


def fiber_map(b: AbelianContext, a: AbelianContext,
              cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> list[int]:
    """For a ⊆ b: the index of the a-atom above each b-atom."""
    _check_inclusion(a, b, cfg)
    overlap = overlap_matrix(a, b, cfg)
    return [int(np.flatnonzero(overlap[:, j])[0]) for j in range(len(b))]


def quasipoint_project(b: AbelianContext, a: AbelianContext, q: Quasipoint,
                       cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Quasipoint:
    """π^b_a: send a quasipoint of b to the quasipoint of a it refines."""
    if q.context is not b and not q.context.same_as(b, cfg):
        raise InvariantError("quasipoint does not belong to the source context")
    _check_inclusion(a, b, cfg)
    atom = b.atoms[q.atom_index]
    for i, p in enumerate(a.atoms):
        if leq(atom, p, cfg):
            return Quasipoint(a, i)
    raise InvariantError("no atom of the target context dominates the quasipoint")


def fiber(b: AbelianContext, a: AbelianContext, i: int,
          cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> list[Quasipoint]:
    """All quasipoints of b lying over the i-th atom of a."""
    owners = fiber_map(b, a, cfg)
    if not 0 <= i < len(a):
        raise InvariantError(f"atom index {i} out of range")
    return [Quasipoint(b, j) for j, owner in enumerate(owners) if owner == i]


def set_partitions(items):
    """All set partitions of a list (Bell-number many)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]
        yield [[first]] + part


def diagonal_contexts(n: int, basis=None) -> list[AbelianContext]:
    """Every context whose atoms are spanned by subsets of one orthonormal basis."""
    return [AbelianContext.from_partition(sorted(map(sorted, p)), basis, n)
            for p in set_partitions(range(n))]


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR with phase correction."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_context(n: int, rng: np.random.Generator, atoms: int | None = None,
                   basis=None) -> AbelianContext:
    """A random partition of a (random unitary) basis into ``atoms`` blocks."""
    if basis is None:
        basis = random_unitary(n, rng)
    if atoms is None:
        atoms = int(rng.integers(1, n + 1))
    labels = np.concatenate([np.arange(atoms), rng.integers(0, atoms, n - atoms)])
    rng.shuffle(labels)
    partition = [np.flatnonzero(labels == k).tolist() for k in range(atoms)]
    return AbelianContext.from_partition(partition, basis)

