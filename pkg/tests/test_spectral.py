import numpy as np
import pytest
from hypothesis import given, strategies as st

from ctxobs.linalg import InvariantError
from ctxobs.plattice import Projection, basis_projection, join, leq
from ctxobs.sampling import random_hermitian, random_projection
from ctxobs.spectral import (
    family_from_operator,
    family_from_steps,
    mirrored_value,
    observable_value,
    spectral_join,
    spectral_leq,
    spectral_meet,
    to_operator,
)

from conftest import ray

seeds = st.integers(0, 2**32 - 1)
d123 = np.diag([1.0, 2, 3])
line12 = Projection.span(ray(1, 1, 0))


def close(a, b, tol=1e-9):
    return np.max(np.abs(np.asarray(a) - np.asarray(b))) <= tol


def test_family_of_diagonal():
    fam = family_from_operator(d123)
    assert fam.jumps == (1.0, 2.0, 3.0)
    for k, e in enumerate(fam.cumulative):
        assert e.close_to(basis_projection(3, range(k + 1)))
    assert (fam.min_value, fam.max_value) == (1.0, 3.0)


def test_family_of_projection_and_scalar():
    p = basis_projection(3, [0, 2])
    fam = family_from_operator(p.matrix)
    assert fam.jumps == pytest.approx((0.0, 1.0))
    assert fam.cumulative[0].close_to(basis_projection(3, [1]))
    assert fam.cumulative[1].is_identity()
    scalar = family_from_operator(2.5 * np.eye(3))
    assert scalar.jumps == pytest.approx((2.5,)) and scalar.cumulative[0].is_identity()


def test_to_operator_examples():
    fam = family_from_steps([1, 2, 3], [basis_projection(3, range(k + 1)) for k in range(3)])
    assert close(to_operator(fam), d123)
    p = basis_projection(2, [1])
    assert close(to_operator(family_from_steps([0, 1], [basis_projection(2, [0]), Projection.identity(2)])), p.matrix)
    assert close(to_operator(family_from_steps([2], [Projection.identity(2)])), 2 * np.eye(2))


def test_invalid_family_rejected():
    with pytest.raises(InvariantError):
        family_from_steps([1, 2], [basis_projection(2, [0]), basis_projection(2, [1])])


@given(seeds, st.integers(1, 6), st.booleans())
def test_round_trip(seed, n, degenerate):
    a = random_hermitian(n, np.random.default_rng(seed), degenerate)
    assert close(to_operator(family_from_operator(a)), a, 1e-8)


def test_spectral_leq_examples():
    assert spectral_leq(d123, np.diag([2.0, 3, 4]))
    assert spectral_leq(d123, d123)
    p, q = basis_projection(3, [0]), basis_projection(3, [0, 1])
    assert spectral_leq(p.matrix, q.matrix) and not spectral_leq(q.matrix, p.matrix)


def test_join_meet_examples():
    a, b = np.diag([1.0, 2]), np.diag([2.0, 1])
    assert close(spectral_join([a, b]), np.diag([2.0, 2]))
    assert close(spectral_meet([a, b]), np.diag([1.0, 1]))
    p, q = basis_projection(2, [0]), Projection.span(ray(1, 1))
    assert close(spectral_join([p.matrix, q.matrix]), join(p, q).matrix)
    c = random_hermitian(3, np.random.default_rng(2))
    assert close(spectral_join([c]), c, 1e-8)


def test_join_meet_need_operators():
    with pytest.raises(InvariantError):
        spectral_join([])


def test_observable_value_examples():
    assert observable_value(d123, basis_projection(3, [1])) == pytest.approx(2)
    assert observable_value(d123, Projection.identity(3)) == pytest.approx(3)
    assert observable_value(d123, line12) == pytest.approx(2)


def test_mirrored_value_examples():
    assert mirrored_value(d123, basis_projection(3, [1])) == pytest.approx(2)
    assert mirrored_value(d123, line12) == pytest.approx(1)
    assert mirrored_value(d123, Projection.identity(3)) == pytest.approx(1)


def test_zero_projection_rejected():
    with pytest.raises(InvariantError):
        observable_value(d123, Projection.zero(3))
    with pytest.raises(InvariantError):
        mirrored_value(d123, Projection.zero(3))


def test_observable_value_matches_rayleigh_for_lines():
    # for a line spanned by x, r_A is the largest eigenvalue whose eigenvector overlaps x
    rng = np.random.default_rng(6)
    for _ in range(50):
        a = random_hermitian(4, rng, degenerate=True)
        p = random_projection(4, rng, rank=1)
        x = p.range.basis[:, 0]
        values, vectors = np.linalg.eigh(a)
        weight = np.abs(vectors.conj().T @ x) ** 2
        hit = values[weight > 1e-9]
        assert observable_value(a, p) == pytest.approx(hit.max(), abs=1e-8)
        assert mirrored_value(a, p) == pytest.approx(hit.min(), abs=1e-8)


@given(seeds, st.integers(2, 5))
def test_order_consistency(seed, n):
    rng = np.random.default_rng(seed)
    a = random_hermitian(n, rng)
    b = spectral_join([a, random_hermitian(n, rng)])
    assert spectral_leq(a, b)
    for _ in range(20):
        p = random_projection(n, rng, rank=int(rng.integers(1, n + 1)))
        assert observable_value(a, p) <= observable_value(b, p) + 1e-9


@given(seeds, st.integers(2, 5), st.integers(1, 4))
def test_complete_increase_and_decrease(seed, n, count):
    rng = np.random.default_rng(seed)
    a = random_hermitian(n, rng, degenerate=bool(seed % 2))
    ps = [random_projection(n, rng, rank=int(rng.integers(1, n + 1))) for _ in range(count)]
    total = ps[0]
    for p in ps[1:]:
        total = join(total, p)
    assert observable_value(a, total) == pytest.approx(max(observable_value(a, p) for p in ps), abs=1e-9)
    assert mirrored_value(a, total) == pytest.approx(min(mirrored_value(a, p) for p in ps), abs=1e-9)


@given(seeds, st.integers(1, 5))
def test_mirror_identity(seed, n):
    rng = np.random.default_rng(seed)
    a = random_hermitian(n, rng, degenerate=True)
    p = random_projection(n, rng, rank=int(rng.integers(1, n + 1)))
    assert mirrored_value(a, p) == pytest.approx(-observable_value(-a, p), abs=1e-9)


@given(seeds, st.integers(2, 5))
def test_order_on_projections_is_lattice_order(seed, n):
    rng = np.random.default_rng(seed)
    p = random_projection(n, rng)
    q = join(p, random_projection(n, rng)) if seed % 2 else random_projection(n, rng)
    assert spectral_leq(p.matrix, q.matrix) == leq(p, q)


@given(seeds, st.integers(2, 4))
def test_lattice_laws(seed, n):
    rng = np.random.default_rng(seed)
    a, b, c = (random_hermitian(n, rng, degenerate=True) for _ in range(3))
    for op in (spectral_join, spectral_meet):
        assert close(op([a, a]), a, 1e-8)
        assert close(op([a, b]), op([b, a]), 1e-8)
        assert close(op([op([a, b]), c]), op([a, op([b, c])]), 1e-8)
    j, m = spectral_join([a, b]), spectral_meet([a, b])
    for x in (a, b):
        assert spectral_leq(x, j) and spectral_leq(m, x)


def test_join_is_least_upper_bound():
    rng = np.random.default_rng(9)
    for _ in range(30):
        a, b = random_hermitian(3, rng, True), random_hermitian(3, rng, True)
        upper = spectral_join([a, b, random_hermitian(3, rng, True)])
        assert spectral_leq(spectral_join([a, b]), upper)
