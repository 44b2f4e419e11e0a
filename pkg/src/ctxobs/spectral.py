"""Spectral families, the spectral order and the observable functions r_A, s_A.

In finite dimension a spectral family is a step function: it is stored by
its jump values and the cumulative projections at those jumps. Between
jumps the family is constant, below the first jump it is zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import DEFAULT_TOLERANCES, InvariantError, ToleranceConfig, check_same_dim
from .plattice import (
    Projection,
    difference,
    eigh,
    join_all,
    leq,
    meet_all,
    orthogonal,
    orthogonal_sum,
)


@dataclass(frozen=True)
class SpectralFamily:
    """Finite increasing step family λ ↦ E_λ.

    ``cumulative[k]`` is E at ``jumps[k]``; the last element equals ``unit``
    (the identity, or the unit Q of a corner algebra QRQ).
    """

    jumps: tuple
    cumulative: tuple
    unit: Projection = field(default=None)

    def __post_init__(self):
        if not self.jumps or len(self.jumps) != len(self.cumulative):
            raise InvariantError("a spectral family needs matching, non-empty jumps and projections")
        if any(b <= a for a, b in zip(self.jumps, self.jumps[1:])):
            raise InvariantError("jumps must be strictly increasing")
        if self.unit is None:
            object.__setattr__(self, "unit", Projection.identity(self.cumulative[-1].dim))
        ranks = [p.rank for p in self.cumulative]
        if ranks[0] == 0 or any(b <= a for a, b in zip(ranks, ranks[1:])):
            raise InvariantError("cumulative projections must be nonzero and strictly increasing")
        if ranks[-1] != self.unit.rank:
            raise InvariantError("the last cumulative projection must be the unit")

    @property
    def dim(self) -> int:
        return self.unit.dim

    @property
    def min_value(self) -> float:
        """m_A, the least point of the spectrum."""
        return self.jumps[0]

    @property
    def max_value(self) -> float:
        """M_A, the largest point of the spectrum."""
        return self.jumps[-1]

    def at(self, lam: float, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Projection:
        """E_λ: the value at the largest jump <= λ (zero below the first jump)."""
        k = int(np.searchsorted(self.jumps, lam + cfg.tol_compare, side="right")) - 1
        return Projection.zero(self.dim) if k < 0 else self.cumulative[k]

    def eigenprojections(self) -> list[tuple[float, Projection]]:
        """The increments E_{λ_k} - E_{λ_{k-1}} paired with λ_k."""
        out = []
        prev = Projection.zero(self.dim)
        for lam, e in zip(self.jumps, self.cumulative):
            out.append((lam, difference(e, prev)))
            prev = e
        return out


def family_from_steps(points, projections, unit: Projection | None = None,
                      cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> SpectralFamily:
    """Build a family from monotone samples ``projections[k] = E(points[k])``.

    Zero samples and samples that do not enlarge the previous value are
    dropped; what remains are the genuine jumps.
    """
    jumps, cumulative = [], []
    last_rank = 0
    for lam, p in sorted(zip(points, projections), key=lambda t: t[0]):
        if p.rank > last_rank:
            jumps.append(float(lam))
            cumulative.append(p)
            last_rank = p.rank
    if not cumulative:
        raise InvariantError("all samples are zero")
    return SpectralFamily(tuple(jumps), tuple(cumulative), unit)


def family_from_operator(a, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> SpectralFamily:
    """Spectral family of a Hermitian matrix: jumps at the clustered eigenvalues."""
    decomposition = eigh(a, cfg)
    n = decomposition[0][1].dim
    jumps, cumulative = [], []
    acc = []
    for lam, proj in decomposition:
        acc.append(proj)
        jumps.append(lam)
        cumulative.append(orthogonal_sum(acc, n))
    return SpectralFamily(tuple(jumps), tuple(cumulative))


def to_operator(family: SpectralFamily) -> np.ndarray:
    """Σ λ_k (E_{λ_k} - E_{λ_{k-1}})."""
    out = np.zeros((family.dim, family.dim), dtype=complex)
    prev = np.zeros_like(out)
    for lam, e in zip(family.jumps, family.cumulative):
        out += lam * (e.matrix - prev)
        prev = e.matrix
    return out


def as_family(x, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> SpectralFamily:
    return x if isinstance(x, SpectralFamily) else family_from_operator(x, cfg)


def merged_grid(families, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> list[float]:
    """Union of the jump sets, with values closer than tol_compare merged."""
    values = sorted(lam for f in families for lam in f.jumps)
    grid = [values[0]]
    for lam in values[1:]:
        if lam - grid[-1] > cfg.tol_compare:
            grid.append(lam)
    return grid


def spectral_leq(a, b, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
    """A <=_s B iff E^B_λ <= E^A_λ for every λ.

    Both families are constant between consecutive points of the merged
    jump grid, so checking the grid is sufficient.
    """
    fa, fb = as_family(a, cfg), as_family(b, cfg)
    check_same_dim(fa.dim, fb.dim)
    return all(leq(fb.at(g, cfg), fa.at(g, cfg), cfg) for g in merged_grid([fa, fb], cfg))


def _families(ops, cfg):
    fams = [as_family(a, cfg) for a in ops]
    if not fams:
        raise InvariantError("spectral lattice operations need a nonempty family")
    check_same_dim(*(f.dim for f in fams))
    return fams


def spectral_join_family(ops, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> SpectralFamily:
    fams = _families(ops, cfg)
    grid = merged_grid(fams, cfg)
    values = [meet_all([f.at(g, cfg) for f in fams], cfg) for g in grid]
    return family_from_steps(grid, values, cfg=cfg)


def spectral_meet_family(ops, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> SpectralFamily:
    # λ ↦ ∧_{μ>λ} ∨_κ E^κ_μ: the inner join is constant on [g_i, g_{i+1}) and
    # increasing, so the right-regularization is its value at g_i itself.
    fams = _families(ops, cfg)
    grid = merged_grid(fams, cfg)
    values = [join_all([f.at(g, cfg) for f in fams], cfg) for g in grid]
    return family_from_steps(grid, values, cfg=cfg)


def spectral_join(ops, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """Least upper bound in the spectral order."""
    return to_operator(spectral_join_family(ops, cfg))


def spectral_meet(ops, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """Greatest lower bound in the spectral order."""
    return to_operator(spectral_meet_family(ops, cfg))


def _nonzero(p: Projection):
    if p.is_zero():
        raise InvariantError("observable functions are defined on nonzero projections only")


def observable_value(a, p: Projection, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> float:
    """r_A(P) = inf{λ : P <= E_λ}, the least jump whose projection dominates P."""
    _nonzero(p)
    fam = as_family(a, cfg)
    check_same_dim(fam.dim, p.dim)
    for lam, e in zip(fam.jumps, fam.cumulative):
        if leq(p, e, cfg):
            return lam
    raise InvariantError("projection is not below the unit of the family")


def mirrored_value(a, p: Projection, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> float:
    """s_A(P) = sup{λ : P <= I - E_λ}.

    P <= I - E_λ holds exactly while E_λ P = 0, i.e. on (-∞, λ_j) where λ_j
    is the first jump with E_{λ_j} P != 0.
    """
    _nonzero(p)
    fam = as_family(a, cfg)
    check_same_dim(fam.dim, p.dim)
    for lam, e in zip(fam.jumps, fam.cumulative):
        if not orthogonal(e, p, cfg):
            return lam
    raise InvariantError("projection is orthogonal to the unit of the family")
