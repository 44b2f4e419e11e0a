"""Cores, supports and the upper/lower aspects of an operator in a context.

Two independent routes compute each aspect:

* the atom rule (primary): the coefficient of ``ρ_M A`` on an atom ``P`` is
  the largest eigenvalue of ``A`` whose eigenprojection meets ``P``; for
  ``σ_M A`` it is the smallest one;
* the spectral-family route (``*_from_family``): push the spectral family of
  ``A`` through ``λ ↦ c_M(E_λ)`` or ``λ ↦ ∧_{μ>λ} s_M(E_μ)`` using brute-force
  lattice suprema/infima over the whole Boolean algebra ``P(M)``.

The restriction maps are not linear: ``ρ_M(A + B)`` differs from
``ρ_M A + ρ_M B`` in general.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .context import AbelianContext, projections_in
from .linalg import DEFAULT_TOLERANCES, InvariantError, ToleranceConfig, check_hermitian, check_same_dim
from .plattice import (
    Projection,
    difference,
    eigh,
    join_all,
    leq,
    meet,
    meet_all,
    orthogonal,
    orthogonal_sum,
)
from .spectral import SpectralFamily, as_family, family_from_steps, to_operator


@dataclass(frozen=True)
class AspectResult:
    context: AbelianContext
    coefficients: np.ndarray

    @property
    def operator(self) -> np.ndarray:
        return self.context.operator(self.coefficients)

    @property
    def spectrum(self) -> list[float]:
        return sorted(set(float(c) for c in self.coefficients))


def core(m: AbelianContext, q: Projection, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Projection:
    """c_M(Q): the largest projection of M below Q (sum of the atoms below Q)."""
    check_same_dim(m.ambient_dim, q.dim)
    return orthogonal_sum([p for p in m.atoms if leq(p, q, cfg)], m.ambient_dim)


def support(m: AbelianContext, q: Projection, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Projection:
    """s_M(Q): the smallest projection of M above Q (sum of the atoms meeting Q)."""
    check_same_dim(m.ambient_dim, q.dim)
    return orthogonal_sum([p for p in m.atoms if not orthogonal(p, q, cfg)], m.ambient_dim)


def core_bruteforce(m: AbelianContext, q: Projection, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Projection:
    """∨{P ∈ P(M) | P <= Q}, enumerating P(M)."""
    return join_all([p for p in projections_in(m) if leq(p, q, cfg)], cfg)


def support_bruteforce(m: AbelianContext, q: Projection, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Projection:
    """∧{P ∈ P(M) | P >= Q}, enumerating P(M)."""
    return meet_all([p for p in projections_in(m) if leq(q, p, cfg)], cfg)


def _hit_values(m, decomposition, cfg):
    return [[lam for lam, e in decomposition if not orthogonal(e, atom, cfg)] for atom in m.atoms]


def _decompose(m, a, cfg):
    a = check_hermitian(a, cfg)
    check_same_dim(m.ambient_dim, a.shape[0])
    return eigh(a, cfg)


def aspect_coefficients(m: AbelianContext, decomposition, mode: str = "upper",
                        cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """Atom coefficients of ρ_M A (mode "upper") or σ_M A (mode "lower").

    ``decomposition`` is the output of :func:`plattice.eigh`, so that one
    eigendecomposition can serve many contexts.
    """
    pick = {"upper": max, "lower": min}.get(mode)
    if pick is None:
        raise InvariantError(f"mode must be 'upper' or 'lower', got {mode!r}")
    return np.array([pick(h) for h in _hit_values(m, decomposition, cfg)])


def upper_aspect(m: AbelianContext, a, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> AspectResult:
    """ρ_M A, the least element of M_sa above A in the spectral order."""
    return AspectResult(m, aspect_coefficients(m, _decompose(m, a, cfg), "upper", cfg))


def lower_aspect(m: AbelianContext, a, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> AspectResult:
    """σ_M A, the greatest element of M_sa below A in the spectral order."""
    return AspectResult(m, aspect_coefficients(m, _decompose(m, a, cfg), "lower", cfg))


def upper_aspect_from_family(m: AbelianContext, a, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> SpectralFamily:
    """Spectral family λ ↦ c_M(E_λ) of ρ_M A, built from brute-force cores."""
    fam = as_family(a, cfg)
    values = [core_bruteforce(m, e, cfg) for e in fam.cumulative]
    return family_from_steps(fam.jumps, values, cfg=cfg)


def lower_aspect_from_family(m: AbelianContext, a, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> SpectralFamily:
    """Spectral family λ ↦ ∧_{μ>λ} s_M(E_μ) of σ_M A, built from brute-force supports."""
    fam = as_family(a, cfg)
    jumps = list(fam.jumps)
    # probe points: one inside every gap after a jump, and one past the spectrum
    probes = [(lo + hi) / 2 for lo, hi in zip(jumps, jumps[1:])] + [jumps[-1] + 1.0]
    supports = [support_bruteforce(m, fam.at(mu, cfg), cfg) for mu in probes]
    values = []
    for k, lam in enumerate(jumps):
        above = [s for mu, s in zip(probes, supports) if mu > lam]
        values.append(meet_all(above, cfg))
    return family_from_steps(jumps, values, cfg=cfg)


def aspect_from_family(m: AbelianContext, family: SpectralFamily,
                       cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> AspectResult:
    return AspectResult(m, m.coefficients(to_operator(family), cfg))


def corner_upper(q: Projection, a, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> SpectralFamily:
    """Spectral family λ ↦ E_λ ∧ Q of the restriction of A to the corner QRQ."""
    if q.is_zero():
        raise InvariantError("the corner projection must be nonzero")
    fam = as_family(a, cfg)
    check_same_dim(fam.dim, q.dim)
    return family_from_steps(fam.jumps, [meet(e, q, cfg) for e in fam.cumulative], unit=q, cfg=cfg)


def corner_lower(q: Projection, a, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> SpectralFamily:
    """Lower restriction to QRQ, with the empty infimum in QRQ taken to be Q.

    The QRQ-support of E is E itself when E <= Q and Q otherwise.
    """
    if q.is_zero():
        raise InvariantError("the corner projection must be nonzero")
    fam = as_family(a, cfg)
    check_same_dim(fam.dim, q.dim)
    values = [e if leq(e, q, cfg) else q for e in fam.cumulative]
    return family_from_steps(fam.jumps, values, unit=q, cfg=cfg)


@dataclass(frozen=True)
class CoarseGraining:
    points: tuple
    context: AbelianContext
    upper: AspectResult
    lower: AspectResult
    # m_A E_{λ1} + Σ λ_k (E_{λ_{k+1}} - E_{λ_k}): the lower step-function sum
    lower_riemann_sum: np.ndarray

    @property
    def lower_matches_riemann_sum(self) -> bool:
        return bool(np.allclose(self.lower.operator, self.lower_riemann_sum, atol=1e-9))


def coarse_grain(a, points, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> CoarseGraining:
    """Upper and lower coarse grainings of A along spectral points λ_1 < ... < λ_n.

    The context is generated by E_{λ_1}, ..., E_{λ_n}; its atoms are the
    increments E_{λ_k} - E_{λ_{k-1}} (with E_{λ_{n+1}} := I). Requires
    m_A < λ_1 and λ_n < M_A.
    """
    fam = as_family(a, cfg)
    points = tuple(float(x) for x in points)
    if not points:
        raise InvariantError("at least one partition point is required")
    if any(b <= a_ for a_, b in zip(points, points[1:])):
        raise InvariantError("partition points must be strictly increasing")
    for x in points:
        if min(abs(x - lam) for lam in fam.jumps) > cfg.tol_compare:
            raise InvariantError(f"{x} is not an eigenvalue")
    if not (fam.min_value < points[0] - cfg.tol_compare and points[-1] < fam.max_value - cfg.tol_compare):
        raise InvariantError("partition points must satisfy m_A < λ_1 and λ_n < M_A")
    levels = [fam.at(x, cfg) for x in points] + [fam.unit]
    n = fam.dim
    atoms = []
    prev = Projection.zero(n)
    for e in levels:
        atoms.append(difference(e, prev))
        prev = e
    ctx = AbelianContext(atoms, cfg)
    riemann = fam.min_value * levels[0].matrix
    for k, lam in enumerate(points):
        riemann = riemann + lam * (levels[k + 1].matrix - levels[k].matrix)
    return CoarseGraining(points, ctx, upper_aspect(ctx, a, cfg), lower_aspect(ctx, a, cfg), riemann)
