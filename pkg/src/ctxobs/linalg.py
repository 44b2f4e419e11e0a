"""Dense complex linear algebra: Jacobi eigensolver, subspaces, tolerances.

Every rank or ordering decision in the package goes through the thresholds
held by :class:`ToleranceConfig`; floats are never compared for equality.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InvariantError(ValueError):
    """An input violates a structural invariant (Hermitian, idempotent, ...)."""


class DimensionMismatch(ValueError):
    pass


class NumericError(ArithmeticError):
    """An iterative routine failed to converge."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


@dataclass(frozen=True)
class ToleranceConfig:
    tol_rank: float = 1e-9
    tol_eig_cluster: float = 1e-8
    tol_hermitian: float = 1e-10
    tol_compare: float = 1e-9

    def __post_init__(self):
        for name in ("tol_rank", "tol_eig_cluster", "tol_hermitian", "tol_compare"):
            value = getattr(self, name)
            if not (0.0 < value < 1e-3):
                raise InvariantError(f"{name} must lie in (0, 1e-3), got {value!r}")


DEFAULT_TOLERANCES = ToleranceConfig()


def max_abs(m) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def as_matrix(m) -> np.ndarray:
    """Return `m` as a square, finite complex array."""
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvariantError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvariantError("matrix has non-finite entries")
    return a


def check_hermitian(m, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """Validate the Hermitian invariant and return the symmetrized matrix."""
    a = as_matrix(m)
    dev = np.abs(a - a.conj().T)
    if dev.max() > cfg.tol_hermitian:
        i, j = np.unravel_index(int(np.argmax(dev)), dev.shape)
        raise InvariantError(
            f"matrix is not Hermitian: |M[{i},{j}] - conj(M[{j},{i}])| = {dev[i, j]:.3g}"
        )
    return (a + a.conj().T) / 2


def check_same_dim(*dims: int) -> int:
    if len(set(dims)) != 1:
        raise DimensionMismatch(f"ambient dimensions differ: {sorted(set(dims))}")
    return dims[0]


def _rotate(a, v, p, q):
    """One complex Jacobi rotation annihilating a[p, q] (in place)."""
    apq = a[p, q]
    r = abs(apq)
    if r == 0.0:
        return
    phase = apq / r
    # make the pivot real: scale column q by conj(phase), row q by phase
    a[:, q] *= phase.conjugate()
    a[q, :] *= phase
    v[:, q] *= phase.conjugate()
    app, aqq = a[p, p].real, a[q, q].real
    theta = (aqq - app) / (2.0 * r)
    t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    colp, colq = a[:, p].copy(), a[:, q].copy()
    a[:, p] = c * colp - s * colq
    a[:, q] = s * colp + c * colq
    rowp, rowq = a[p, :].copy(), a[q, :].copy()
    a[p, :] = c * rowp - s * rowq
    a[q, :] = s * rowp + c * rowq
    a[p, q] = a[q, p] = 0.0
    vp, vq = v[:, p].copy(), v[:, q].copy()
    v[:, p] = c * vp - s * vq
    v[:, q] = s * vp + c * vq


def jacobi_eigh(m, cfg: ToleranceConfig = DEFAULT_TOLERANCES, max_sweeps: int = 60):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi sweeps.

    Returns ``(values, vectors)`` with ascending real eigenvalues and the
    eigenvectors as orthonormal columns.
    """
    a = check_hermitian(m, cfg).copy()
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1.0)
    eps = np.finfo(float).eps * scale
    for sweep in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= eps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) > 0.1 * eps / n:
                    _rotate(a, v, p, q)
    else:
        raise NumericError(f"Jacobi iteration did not converge in {max_sweeps} sweeps",
                           iterations=max_sweeps)
    values = np.diag(a).real.copy()
    order = np.argsort(values, kind="stable")
    return values[order], v[:, order]


class Subspace:
    """A subspace of C^n held as an orthonormal basis (columns of ``basis``)."""

    __slots__ = ("ambient_dim", "basis")

    def __init__(self, basis: np.ndarray, ambient_dim: int | None = None):
        basis = np.asarray(basis, dtype=complex)
        if basis.ndim == 1:
            basis = basis.reshape(-1, 1)
        if ambient_dim is None:
            ambient_dim = basis.shape[0]
        if basis.shape[0] != ambient_dim:
            raise DimensionMismatch(f"basis rows {basis.shape[0]} != ambient {ambient_dim}")
        self.ambient_dim = int(ambient_dim)
        self.basis = basis
        self.basis.setflags(write=False)

    @classmethod
    def span(cls, vectors, ambient_dim: int | None = None,
             cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> "Subspace":
        """Orthonormal basis of the span of the given columns (or vector list)."""
        if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
            mat = vectors.astype(complex)
        else:
            vectors = [np.asarray(x, dtype=complex).ravel() for x in vectors]
            if not vectors:
                if ambient_dim is None:
                    raise InvariantError("ambient_dim required for an empty span")
                return cls.zero(ambient_dim)
            mat = np.column_stack(vectors)
        return cls(_column_space(mat, cfg.tol_rank), ambient_dim or mat.shape[0])

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(np.zeros((n, 0), dtype=complex), n)

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(np.eye(n, dtype=complex), n)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        b = self.basis
        return b @ b.conj().T

    def complement(self, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> "Subspace":
        n = self.ambient_dim
        if self.rank == 0:
            return Subspace.full(n)
        u, s, _ = np.linalg.svd(self.basis, full_matrices=True)
        k = int(np.sum(s > cfg.tol_rank))
        return Subspace(u[:, k:], n)

    def __repr__(self):
        return f"Subspace(ambient_dim={self.ambient_dim}, rank={self.rank})"


def _column_space(mat: np.ndarray, tol: float) -> np.ndarray:
    if mat.shape[1] == 0:
        return np.zeros((mat.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    scale = max(1.0, float(s[0])) if s.size else 1.0
    return u[:, : int(np.sum(s > tol * scale))]


def subspace_intersection(u: Subspace, v: Subspace,
                          cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Subspace:
    """ran(u) ∩ ran(v), with the rank decided by sines of principal angles."""
    n = check_same_dim(u.ambient_dim, v.ambient_dim)
    if u.rank == 0 or v.rank == 0:
        return Subspace.zero(n)
    # x = U a lies in ran v iff (I - P_v) U a = 0
    residual = u.basis - v.basis @ (v.basis.conj().T @ u.basis)
    _, s, vh = np.linalg.svd(residual, full_matrices=True)
    s_full = np.zeros(u.rank)
    s_full[: s.size] = s
    null = vh.conj().T[:, s_full <= cfg.tol_rank]
    if null.shape[1] == 0:
        return Subspace.zero(n)
    return Subspace(_column_space(u.basis @ null, cfg.tol_rank), n)


def subspace_sum(u: Subspace, v: Subspace,
                 cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Subspace:
    n = check_same_dim(u.ambient_dim, v.ambient_dim)
    return Subspace(_column_space(np.hstack([u.basis, v.basis]), cfg.tol_rank), n)


def eigenspaces(m, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
    """Clustered eigenvalues with their eigenspaces, ascending.

    Eigenvalues closer than ``tol_eig_cluster`` (scaled by the operator
    norm when it exceeds one) are merged into one eigenspace whose value is
    the cluster mean.
    """
    values, vectors = jacobi_eigh(m, cfg)
    n = values.size
    scale = max(1.0, float(np.max(np.abs(values))))
    gap = cfg.tol_eig_cluster * scale
    groups = [[0]]
    for k in range(1, n):
        if values[k] - values[groups[-1][-1]] <= gap:
            groups[-1].append(k)
        else:
            groups.append([k])
    return [(float(np.mean(values[g])), Subspace(vectors[:, g], n)) for g in groups]
