import numpy as np
import pytest
from hypothesis import given, strategies as st

from ctxobs.context import AbelianContext, projections_in, random_context
from ctxobs.linalg import DimensionMismatch, InvariantError
from ctxobs.plattice import Projection, basis_projection, complement, join, leq, meet
from ctxobs.restrict import (
    aspect_from_family,
    coarse_grain,
    core,
    core_bruteforce,
    corner_lower,
    corner_upper,
    lower_aspect,
    lower_aspect_from_family,
    support,
    support_bruteforce,
    upper_aspect,
    upper_aspect_from_family,
)
from ctxobs.sampling import random_hermitian, random_projection
from ctxobs.spectral import family_from_operator, spectral_leq, to_operator

seeds = st.integers(0, 2**32 - 1)
e1_e23 = AbelianContext.from_partition([[0], [1, 2]])
d123 = np.diag([1.0, 2, 3])


def close(a, b, tol=1e-9):
    return np.max(np.abs(np.asarray(a) - np.asarray(b))) <= tol


def lapack_aspect(m, a, pick):
    # independent route: numpy eigenvectors, one coefficient per atom
    values, vectors = np.linalg.eigh(a)
    out = np.zeros_like(a, dtype=complex)
    for atom in m.atoms:
        weight = np.linalg.norm(atom.matrix @ vectors, axis=0)
        out += pick(values[weight > 1e-7]) * atom.matrix
    return out


def case(seed, n=None):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(2, 7))
    return rng, random_context(n, rng), random_hermitian(n, rng, degenerate=bool(seed % 2))


def test_core_support_examples():
    q = basis_projection(3, [1])
    assert core(e1_e23, q).is_zero()
    assert support(e1_e23, q).close_to(basis_projection(3, [1, 2]))
    own = e1_e23.atoms[1]
    assert core(e1_e23, own).close_to(own) and support(e1_e23, own).close_to(own)
    assert core(e1_e23, Projection.identity(3)).is_identity()
    total = core(e1_e23, q).matrix + support(e1_e23, complement(q)).matrix
    assert close(total, np.eye(3))


def test_core_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        core(e1_e23, basis_projection(2, [0]))


def test_upper_aspect_examples():
    assert close(upper_aspect(e1_e23, d123).operator, np.diag([1.0, 3, 3]))
    assert close(upper_aspect(AbelianContext.trivial(3), d123).operator, 3 * np.eye(3))
    inside = e1_e23.operator([4.0, -1.0])
    assert close(upper_aspect(e1_e23, inside).operator, inside)


def test_lower_aspect_examples():
    assert close(lower_aspect(e1_e23, d123).operator, np.diag([1.0, 2, 2]))
    assert close(-upper_aspect(e1_e23, -d123).operator, np.diag([1.0, 2, 2]))
    assert close(lower_aspect(AbelianContext.trivial(3), d123).operator, np.eye(3))
    inside = e1_e23.operator([4.0, -1.0])
    assert close(lower_aspect(e1_e23, inside).operator, inside)


def test_aspects_not_linear():
    # restriction to a context does not respect sums
    a, b = np.array([[0.0, 1], [1, 0]]), np.diag([1.0, -1])
    m = AbelianContext.from_partition([[0], [1]])
    total = upper_aspect(m, a + b).operator
    split = upper_aspect(m, a).operator + upper_aspect(m, b).operator
    assert not close(total, split)


def test_corner_examples():
    q = basis_projection(3, [0, 1])
    fam = corner_upper(q, d123)
    assert fam.jumps == pytest.approx((1.0, 2.0))
    assert fam.cumulative[0].close_to(basis_projection(3, [0])) and fam.cumulative[1].close_to(q)
    full = corner_upper(Projection.identity(3), d123)
    assert close(to_operator(full), d123)
    own = corner_upper(q, q.matrix)
    assert own.jumps == pytest.approx((1.0,)) and own.unit.close_to(q)
    with pytest.raises(InvariantError):
        corner_upper(Projection.zero(3), d123)


def test_corner_lower_uses_corner_unit():
    q = basis_projection(3, [1, 2])
    fam = corner_lower(q, d123)
    # E_1 = P_e1 is not below q, so the empty infimum gives the corner unit
    assert fam.jumps == pytest.approx((1.0,)) and fam.cumulative[0].close_to(q)


def test_coarse_grain_example():
    a = np.diag([1.0, 2, 3, 4, 5])
    cg = coarse_grain(a, (2, 4))
    assert cg.upper.spectrum == pytest.approx([2, 4, 5])
    expected_upper = (2 * basis_projection(5, [0, 1]).matrix + 4 * basis_projection(5, [2, 3]).matrix
                      + 5 * basis_projection(5, [4]).matrix)
    assert close(cg.upper.operator, expected_upper)
    assert close(cg.lower.operator, np.diag([1.0, 1, 3, 3, 5]))
    assert close(cg.lower_riemann_sum, np.diag([1.0, 1, 2, 2, 4]))
    assert not cg.lower_matches_riemann_sum


def test_coarse_grain_guards():
    with pytest.raises(InvariantError):
        coarse_grain(np.diag([1.0, 2]), (1,))
    with pytest.raises(InvariantError):
        coarse_grain(np.diag([1.0, 2, 3]), (2.5,))
    with pytest.raises(InvariantError):
        coarse_grain(np.diag([1.0, 2, 3, 4]), (3, 2))


@given(seeds)
def test_core_support_match_bruteforce(seed):
    rng, m, _ = case(seed)
    n = m.ambient_dim
    qs = [random_projection(n, rng), m.sum_of(rng.choice(len(m), size=int(rng.integers(0, len(m) + 1)), replace=False))]
    for q in qs:
        assert core(m, q).close_to(core_bruteforce(m, q))
        assert support(m, q).close_to(support_bruteforce(m, q))


@given(seeds)
def test_core_support_duality(seed):
    rng, m, _ = case(seed)
    q = random_projection(m.ambient_dim, rng)
    assert close(core(m, q).matrix + support(m, complement(q)).matrix, np.eye(m.ambient_dim))


@given(seeds, st.integers(1, 4))
def test_core_support_lattice_laws(seed, count):
    rng, m, _ = case(seed)
    n = m.ambient_dim
    ps = [random_projection(n, rng) for _ in range(count)]
    # include context projections so that meets are not always zero
    ps += [join(p, m.atoms[0]) for p in ps]
    lo, hi = ps[0], ps[0]
    for p in ps[1:]:
        lo, hi = meet(lo, p), join(hi, p)

    def fold(op, items):
        out = items[0]
        for x in items[1:]:
            out = op(out, x)
        return out

    assert core(m, lo).close_to(fold(meet, [core(m, p) for p in ps]))
    assert support(m, hi).close_to(fold(join, [support(m, p) for p in ps]))
    assert leq(fold(join, [core(m, p) for p in ps]), core(m, hi))
    assert leq(support(m, lo), fold(meet, [support(m, p) for p in ps]))


@given(seeds)
def test_aspects_match_lapack_oracle(seed):
    _, m, a = case(seed)
    assert close(upper_aspect(m, a).operator, lapack_aspect(m, a, np.max), 1e-8)
    assert close(lower_aspect(m, a).operator, lapack_aspect(m, a, np.min), 1e-8)


@given(seeds)
def test_aspects_match_family_route(seed):
    _, m, a = case(seed, n=4)
    up = upper_aspect(m, a)
    lo = lower_aspect(m, a)
    assert np.array_equal(aspect_from_family(m, upper_aspect_from_family(m, a)).coefficients.round(9),
                          up.coefficients.round(9))
    assert np.array_equal(aspect_from_family(m, lower_aspect_from_family(m, a)).coefficients.round(9),
                          lo.coefficients.round(9))
    # the family route jumps exactly at the aspect's spectrum
    assert list(upper_aspect_from_family(m, a).jumps) == pytest.approx(up.spectrum)


@given(seeds)
def test_mirror(seed):
    _, m, a = case(seed)
    assert close(lower_aspect(m, a).operator, -upper_aspect(m, -a).operator)


@given(seeds)
def test_sandwich(seed):
    _, m, a = case(seed)
    assert spectral_leq(lower_aspect(m, a).operator, a)
    assert spectral_leq(a, upper_aspect(m, a).operator)


@given(seeds)
def test_extremality(seed):
    rng, m, a = case(seed, n=4)
    lo, up = lower_aspect(m, a).operator, upper_aspect(m, a).operator
    vals = np.linalg.eigvalsh(a)
    for _ in range(10):
        below = m.operator(rng.uniform(vals[0] - 2, vals[-1], len(m)))
        if spectral_leq(below, a):
            assert spectral_leq(below, lo)
        above = m.operator(rng.uniform(vals[0], vals[-1] + 2, len(m)))
        if spectral_leq(a, above):
            assert spectral_leq(up, above)
    # the aspects themselves are admissible candidates
    assert spectral_leq(lo, a) and spectral_leq(a, up)


@given(seeds)
def test_projection_restricts_to_support(seed):
    rng, m, _ = case(seed)
    q = random_projection(m.ambient_dim, rng, rank=int(rng.integers(1, m.ambient_dim + 1)))
    assert close(upper_aspect(m, q.matrix).operator, support(m, q).matrix)
    assert close(lower_aspect(m, q.matrix).operator, core(m, q).matrix)


def test_upper_aspect_is_in_context():
    rng = np.random.default_rng(11)
    m = random_context(5, rng, atoms=3)
    up = upper_aspect(m, random_hermitian(5, rng)).operator
    for p in projections_in(m):
        assert close(up @ p.matrix, p.matrix @ up, 1e-8)
    assert family_from_operator(up).jumps == pytest.approx(upper_aspect(m, up).spectrum)
