"""The projection lattice of L(C^n): order, meet, join, complement."""
from __future__ import annotations

from functools import reduce

import numpy as np

from .linalg import (
    DEFAULT_TOLERANCES,
    InvariantError,
    Subspace,
    ToleranceConfig,
    check_hermitian,
    check_same_dim,
    eigenspaces,
    max_abs,
    subspace_intersection,
    subspace_sum,
)


class Projection:
    """An orthogonal projection, stored both as a matrix and as its range.

    The two representations are synchronized at construction and the
    instance is immutable afterwards.
    """

    __slots__ = ("matrix", "range")

    def __init__(self, range_: Subspace):
        self.range = range_
        self.matrix = range_.projector()
        self.matrix.setflags(write=False)

    @classmethod
    def from_matrix(cls, m, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> "Projection":
        a = check_hermitian(m, cfg)
        dev = max_abs(a @ a - a)
        if dev > max(cfg.tol_compare, cfg.tol_hermitian) * 10:
            raise InvariantError(f"matrix is not idempotent: max|P^2 - P| = {dev:.3g}")
        # the range is the eigenspace of eigenvalue 1
        u, s, _ = np.linalg.svd(a)
        return cls(Subspace(u[:, s > 0.5], a.shape[0]))

    @classmethod
    def span(cls, *vectors, ambient_dim: int | None = None,
             cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> "Projection":
        """Projection onto the span of the given vectors."""
        return cls(Subspace.span(list(vectors), ambient_dim, cfg))

    @classmethod
    def zero(cls, n: int) -> "Projection":
        return cls(Subspace.zero(n))

    @classmethod
    def identity(cls, n: int) -> "Projection":
        return cls(Subspace.full(n))

    @property
    def dim(self) -> int:
        return self.range.ambient_dim

    @property
    def rank(self) -> int:
        return self.range.rank

    def is_zero(self) -> bool:
        return self.rank == 0

    def is_identity(self) -> bool:
        return self.rank == self.dim

    def close_to(self, other: "Projection", cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
        check_same_dim(self.dim, other.dim)
        return self.rank == other.rank and max_abs(self.matrix - other.matrix) <= cfg.tol_compare

    def __repr__(self):
        return f"Projection(dim={self.dim}, rank={self.rank})"


def basis_projection(n: int, indices) -> Projection:
    """Projection onto the span of the standard basis vectors with given indices."""
    basis = np.eye(n, dtype=complex)[:, sorted(indices)]
    return Projection(Subspace(basis, n))


def leq(p: Projection, q: Projection, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
    """ran p ⊆ ran q, decided by max|(I - q) p| <= tol_compare."""
    check_same_dim(p.dim, q.dim)
    if p.rank > q.rank:
        return False
    return max_abs(p.matrix - q.matrix @ p.matrix) <= cfg.tol_compare


def meet(p: Projection, q: Projection, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Projection:
    return Projection(subspace_intersection(p.range, q.range, cfg))


def join(p: Projection, q: Projection, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Projection:
    return Projection(subspace_sum(p.range, q.range, cfg))


def meet_all(projections, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Projection:
    projections = list(projections)
    if not projections:
        raise InvariantError("meet of an empty family is undefined without an ambient unit")
    return reduce(lambda a, b: meet(a, b, cfg), projections)


def join_all(projections, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Projection:
    projections = list(projections)
    if not projections:
        raise InvariantError("join of an empty family is undefined without an ambient dimension")
    return Projection(Subspace.span(np.hstack([p.range.basis for p in projections]),
                                    projections[0].dim, cfg))


def complement(p: Projection, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Projection:
    return Projection(p.range.complement(cfg))


def commutes(p: Projection, q: Projection, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
    check_same_dim(p.dim, q.dim)
    a, b = p.matrix, q.matrix
    return max_abs(a @ b - b @ a) <= cfg.tol_compare


def orthogonal(p: Projection, q: Projection, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
    check_same_dim(p.dim, q.dim)
    return max_abs(p.matrix @ q.matrix) <= cfg.tol_compare


def orthogonal_sum(projections, n: int) -> Projection:
    """Sum of pairwise orthogonal projections (orthogonality is not re-checked)."""
    projections = list(projections)
    if not projections:
        return Projection.zero(n)
    return Projection(Subspace(np.hstack([p.range.basis for p in projections]), n))


def difference(e: Projection, f: Projection) -> Projection:
    """E - F for F <= E: the projection onto ran E ⊖ ran F."""
    check_same_dim(e.dim, f.dim)
    fb = f.range.basis
    residual = e.range.basis - fb @ (fb.conj().T @ e.range.basis)
    u, _, _ = np.linalg.svd(residual, full_matrices=False)
    return Projection(Subspace(u[:, : e.rank - f.rank], e.dim))


def eigh(a, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> list[tuple[float, Projection]]:
    """Clustered spectral decomposition ``[(eigenvalue, eigenprojection), ...]``.

    Eigenvalues are strictly increasing; the eigenprojections are pairwise
    orthogonal and sum to the identity.
    """
    return [(value, Projection(space)) for value, space in eigenspaces(a, cfg)]
