import numpy as np
import pytest
from hypothesis import given, strategies as st

from ctxobs.linalg import (
    DimensionMismatch,
    InvariantError,
    NumericError,
    Subspace,
    ToleranceConfig,
    check_hermitian,
    eigenspaces,
    jacobi_eigh,
    subspace_intersection,
    subspace_sum,
)
from ctxobs.plattice import eigh
from ctxobs.sampling import random_hermitian

from conftest import ray

seeds = st.integers(0, 2**32 - 1)


def e(n, *idx):
    return Subspace(np.eye(n, dtype=complex)[:, list(idx)], n)


def same_space(u, v):
    return u.rank == v.rank and np.allclose(u.projector(), v.projector(), atol=1e-9)


def test_tolerance_bounds():
    ToleranceConfig(tol_rank=1e-4)
    with pytest.raises(InvariantError):
        ToleranceConfig(tol_compare=0.0)
    with pytest.raises(InvariantError):
        ToleranceConfig(tol_hermitian=1e-2)


def test_check_hermitian_names_entry():
    m = np.array([[1, 2j], [2j, 0]])
    with pytest.raises(InvariantError, match=r"M\[0,1\]"):
        check_hermitian(m)


def test_eigh_diagonal():
    out = eigh(np.diag([1.0, 2, 3]))
    assert [v for v, _ in out] == [1.0, 2.0, 3.0]
    for k, (_, p) in enumerate(out):
        assert np.allclose(p.matrix, np.diag(np.eye(3)[k]))


def test_eigh_swap_matrix():
    (lo, p), (hi, q) = eigh(np.array([[0.0, 1], [1, 0]]))
    assert lo == pytest.approx(-1) and hi == pytest.approx(1)
    minus, plus = ray(1, -1), ray(1, 1)
    assert np.allclose(p.matrix, np.outer(minus, minus.conj()))
    assert np.allclose(q.matrix, np.outer(plus, plus.conj()))


def test_eigh_identity_single_cluster():
    out = eigh(np.eye(4))
    assert len(out) == 1
    assert out[0][0] == pytest.approx(1.0)
    assert np.allclose(out[0][1].matrix, np.eye(4))


def test_eigh_rejects_non_hermitian():
    with pytest.raises(InvariantError):
        eigh(np.array([[0.0, 1], [0, 0]]))


def test_jacobi_reports_iterations():
    a = random_hermitian(5, np.random.default_rng(0))
    with pytest.raises(NumericError) as info:
        jacobi_eigh(a, max_sweeps=1)
    assert info.value.iterations == 1


@given(seeds, st.integers(2, 8), st.booleans())
def test_eigh_reconstruction_and_orthogonality(seed, n, degenerate):
    rng = np.random.default_rng(seed)
    a = random_hermitian(n, rng, degenerate=degenerate)
    out = eigh(a)
    values = [v for v, _ in out]
    assert all(b > x for x, b in zip(values, values[1:]))
    recon = sum(v * p.matrix for v, p in out)
    assert np.max(np.abs(recon - a)) <= 1e-8
    assert np.max(np.abs(sum(p.matrix for _, p in out) - np.eye(n))) <= 1e-9
    for j, (_, p) in enumerate(out):
        for k, (_, q) in enumerate(out):
            target = p.matrix if j == k else 0
            assert np.max(np.abs(p.matrix @ q.matrix - target)) <= 1e-8


@given(seeds, st.integers(2, 8))
def test_jacobi_matches_lapack(seed, n):
    a = random_hermitian(n, np.random.default_rng(seed))
    values, vectors = jacobi_eigh(a)
    assert np.allclose(values, np.linalg.eigvalsh(a), atol=1e-10)
    assert np.allclose(vectors.conj().T @ vectors, np.eye(n), atol=1e-12)


def test_degenerate_cluster_multiplicity():
    u = np.linalg.qr(np.random.default_rng(3).standard_normal((4, 4)))[0]
    a = u @ np.diag([2.0, 2.0, 2.0, -1.0]) @ u.T
    spaces = eigenspaces(a)
    assert [s.rank for _, s in spaces] == [1, 3]


def test_intersection_examples():
    assert same_space(subspace_intersection(e(3, 0, 1), e(3, 1, 2)), e(3, 1))
    u = e(3, 0, 2)
    assert same_space(subspace_intersection(u, u), u)
    line = Subspace(ray(1, 1), 2)
    assert subspace_intersection(e(2, 0), line).rank == 0


def test_sum_examples():
    assert same_space(subspace_sum(e(3, 0), e(3, 1)), e(3, 0, 1))
    assert subspace_sum(e(2, 0), Subspace(ray(1, 1), 2)).rank == 2
    u = e(4, 1, 3)
    assert same_space(subspace_sum(u, Subspace.zero(4)), u)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        subspace_sum(e(2, 0), e(3, 0))
    with pytest.raises(DimensionMismatch):
        subspace_intersection(e(2, 0), e(3, 0))


@given(seeds, st.integers(2, 7))
def test_modular_rank_law(seed, n):
    rng = np.random.default_rng(seed)

    def random_space():
        k = int(rng.integers(0, n + 1))
        z = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
        return Subspace.span(z, n)

    u, v = random_space(), random_space()
    assert subspace_intersection(u, v).rank + subspace_sum(u, v).rank == u.rank + v.rank


def test_shared_direction_found():
    rng = np.random.default_rng(8)
    common = rng.standard_normal(5)
    u = Subspace.span(np.column_stack([common, rng.standard_normal(5)]), 5)
    v = Subspace.span(np.column_stack([common, rng.standard_normal(5), rng.standard_normal(5)]), 5)
    w = subspace_intersection(u, v)
    assert w.rank == 1
    x = common / np.linalg.norm(common)
    assert abs(abs(np.vdot(w.basis[:, 0], x)) - 1) < 1e-9


def test_complement():
    c = e(3, 0).complement()
    assert same_space(c, e(3, 1, 2))
    assert Subspace.full(3).complement().rank == 0
