import numpy as np
import pytest
from hypothesis import given, strategies as st

from ctxobs.context import AbelianContext, diagonal_contexts, includes, projections_in, random_context
from ctxobs.linalg import InvariantError
from ctxobs.plattice import Projection, basis_projection
from ctxobs.presheaf import ContextFamily
from ctxobs.sampling import random_density, random_unit_vector
from ctxobs.states import (
    AdditivityError,
    ContextState,
    ProjectionMeasure,
    StateSection,
    c2_counterexample,
    extend_measure,
    extend_state,
    fit_density,
    measure_to_state,
    naturality_square,
    point_measure_vector_state,
    pushforward,
    quasistate_eval,
    restrict_state,
    section_from_density,
    section_from_measure,
    validate_state_section,
    vector_from_point_measure,
)

from conftest import ray

seeds = st.integers(0, 2**32 - 1)
full3 = AbelianContext.from_partition([[0], [1], [2]])
e1_e23 = AbelianContext.from_partition([[0], [1, 2]])
triv3 = AbelianContext.trivial(3)
diag4 = diagonal_contexts(4)


def weights_for(ctx, groups):
    # map weights keyed by basis-index groups onto the context's atom order
    out = np.zeros(len(ctx))
    for group, w in groups.items():
        target = basis_projection(ctx.ambient_dim, list(group))
        out[next(i for i, p in enumerate(ctx.atoms) if p.close_to(target))] = w
    return out


def test_restrict_examples():
    s = ContextState(full3, [0.2, 0.3, 0.5])
    r = restrict_state(s, e1_e23)
    assert np.allclose(r.weights, weights_for(e1_e23, {(0,): 0.2, (1, 2): 0.8}))
    assert np.array_equal(restrict_state(s, full3).weights, s.weights)
    assert restrict_state(s, triv3).weights == pytest.approx([1.0])


def test_restrict_requires_inclusion():
    with pytest.raises(InvariantError):
        restrict_state(ContextState(e1_e23, [0.5, 0.5]), full3)


def test_state_invariants():
    with pytest.raises(InvariantError):
        ContextState(full3, [0.5, 0.5, 0.5])
    with pytest.raises(InvariantError):
        ContextState(full3, [1.2, -0.2])


def test_validate_examples():
    fam = ContextFamily(diagonal_contexts(3))
    rho = np.diag([0.5, 0.3, 0.2])
    assert validate_state_section(section_from_density(fam, rho))[0]
    section, _ = c2_counterexample()
    assert validate_state_section(section)[0]
    # every state restricts to weight 1 on the trivial context, so a mismatch
    # needs a nontrivial meet: here e1_e23 itself
    fam3 = ContextFamily([e1_e23, full3])
    ws = [weights_for(e1_e23, {(0,): 0.5, (1, 2): 0.5}), [0.2, 0.3, 0.5]]
    ok, violations = validate_state_section(StateSection.from_weights(fam3, ws))
    assert not ok and violations[0].deviation == pytest.approx(0.3)


def test_extend_measure_examples():
    m = AbelianContext.from_partition([[0], [1]])
    mu = ProjectionMeasure.from_function(lambda p: float(np.diag(p.matrix).real @ [0.3, 0.7]), [m])
    phi = extend_measure(m, mu)
    assert phi(np.diag([2.0, 5.0])) == pytest.approx(4.1)
    dirac = ProjectionMeasure.from_function(lambda p: p.matrix[1, 1].real, [m])
    assert extend_measure(m, dirac)(np.diag([2.0, 5.0])) == pytest.approx(5.0)
    e1, e2 = basis_projection(2, [0]), basis_projection(2, [1])
    assert phi.evaluate([3.0, 3.0], [e1, e2]) == pytest.approx(3.0)
    assert phi.evaluate([3.0], [Projection.identity(2)]) == pytest.approx(3.0)


def test_extend_measure_reports_additivity_pair():
    m = AbelianContext.from_partition([[0], [1]])
    mu = ProjectionMeasure.from_function(lambda p: 1.0 if p.rank == 2 else 0.4 * p.rank, [m])
    with pytest.raises(AdditivityError) as info:
        extend_measure(m, mu)
    assert [p.rank for p in info.value.pair] == [1, 1]


def test_extend_measure_additivity_failure_names_context():
    contexts = [AbelianContext.from_partition([[0], [1, 2]]), AbelianContext.from_partition([[0, 1], [2]])]
    fam = ContextFamily(contexts)
    mu = ProjectionMeasure.from_density(np.diag([0.5, 0.3, 0.2]), fam)
    mu.set(basis_projection(3, [0, 1]), 0.5)
    with pytest.raises(AdditivityError) as info:
        section_from_measure(fam, mu)
    assert fam[info.value.context].contains(basis_projection(3, [0, 1]))
    assert info.value.pair is not None


def test_section_from_measure_examples():
    fam = ContextFamily(diagonal_contexts(3))
    rho = np.diag([0.5, 0.3, 0.2])
    s = section_from_measure(fam, ProjectionMeasure.from_density(rho, fam))
    assert validate_state_section(s)[0]
    for ctx, state in zip(fam, s.states):
        assert np.allclose(state.weights, [np.trace(rho @ p.matrix).real for p in ctx.atoms])
    point = section_from_measure(fam, ProjectionMeasure.from_function(lambda p: p.matrix[2, 2].real, fam))
    assert all(set(np.round(st.weights, 12)) <= {0.0, 1.0} for st in point.states)


@given(seeds)
def test_extend_measure_properties(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    m = random_context(n, rng)
    rho = random_density(n, rng)
    phi = extend_measure(m, ProjectionMeasure.from_density(rho, [m]))
    a, b = rng.standard_normal(len(m)), rng.standard_normal(len(m))
    x, y = rng.standard_normal(2)
    # linear, positive, normalized and agreeing with the trace
    assert phi(m.operator(x * a + y * b)) == pytest.approx(x * phi(m.operator(a)) + y * phi(m.operator(b)), abs=1e-9)
    assert phi(m.operator(np.abs(a))) >= -1e-12
    assert phi(np.eye(n)) == pytest.approx(1, abs=1e-12)
    assert phi(m.operator(a)) == pytest.approx(np.trace(rho @ m.operator(a)).real, abs=1e-9)
    # merging two atoms that carry equal coefficients gives another orthogonal decomposition
    if len(m) > 1:
        c = np.r_[2.5, 2.5, rng.standard_normal(len(m) - 2)]
        merged = [m.sum_of([0, 1])] + list(m.atoms[2:])
        assert phi.evaluate(c, m.atoms) == pytest.approx(phi.evaluate(c[1:], merged), abs=1e-9)


def test_restriction_functorial_exhaustive():
    rng = np.random.default_rng(5)
    for top_ctx in diag4:
        top = ContextState(top_ctx, rng.dirichlet(np.ones(len(top_ctx))))
        for mid in diag4:
            if includes(mid, top_ctx):
                for low in diag4:
                    if includes(low, mid):
                        direct = restrict_state(top, low).weights
                        assert np.allclose(restrict_state(restrict_state(top, mid), low).weights, direct, atol=1e-12)


@given(seeds)
def test_restriction_surjective(seed):
    rng = np.random.default_rng(seed)
    for small in diag4:
        state = ContextState(small, rng.dirichlet(np.ones(len(small))))
        for big in diag4:
            if includes(small, big):
                lifted = extend_state(state, big)
                assert np.allclose(restrict_state(lifted, small).weights, state.weights, atol=1e-12)


@given(seeds)
def test_naturality_square(seed):
    rng = np.random.default_rng(seed)
    for big in diag4:
        nu = rng.dirichlet(np.ones(len(big)))
        for small in diag4:
            if includes(small, big):
                assert naturality_square(big, small, nu)


def test_measure_state_iso_examples():
    m = AbelianContext.from_partition([[0], [1], [2]])
    dirac = measure_to_state(m, [0.0, 1.0, 0.0])
    assert dirac(np.diag([4.0, 7.0, 9.0])) == pytest.approx(7.0)
    uniform = measure_to_state(m, np.full(3, 1 / 3))
    a = np.diag([1.0, 2.0, 6.0])
    assert uniform(a) == pytest.approx(np.trace(a).real / 3)
    assert pushforward(m, triv3, [0.2, 0.3, 0.5]) == pytest.approx([1.0])


def test_c2_counterexample():
    section, report = c2_counterexample()
    assert report.section_valid and validate_state_section(section)[0]
    assert report.a == pytest.approx(1 + 1 / np.sqrt(2), abs=1e-12)
    assert report.b == pytest.approx(1 - 1 / np.sqrt(2), abs=1e-12)
    assert report.residual == pytest.approx(1 - 1 / np.sqrt(2), abs=1e-9)
    fit = fit_density(section)
    assert fit.residual >= 0.1


def test_fit_recovers_planted_density():
    fam = ContextFamily(diagonal_contexts(3))
    rho = np.diag([0.5, 0.3, 0.2])
    fit = fit_density(section_from_density(fam, rho))
    assert fit.residual <= 1e-6
    assert np.max(np.abs(fit.density - rho)) <= 1e-6


def test_fit_recovers_random_density():
    rng = np.random.default_rng(17)
    rho = random_density(3, rng)
    fam = ContextFamily([random_context(3, rng, atoms=3) for _ in range(6)])
    fit = fit_density(section_from_density(fam, rho))
    assert np.max(np.abs(fit.density - rho)) <= 1e-6


def test_fit_dirac_section_gives_ray():
    rng = np.random.default_rng(2)
    x = np.array([0.0, 1.0, 0.0])
    fam = ContextFamily([random_context(3, rng, atoms=3) for _ in range(5)] + [full3])
    fit = fit_density(section_from_density(fam, np.outer(x, x)))
    assert np.max(np.abs(fit.density - np.outer(x, x))) <= 1e-6


def test_point_measure_examples():
    pm = point_measure_vector_state(full3, [0.0, 1.0, 0.0])
    assert pm.is_dirac and np.array_equal(pm.state.weights, [0.0, 1.0, 0.0])
    born = point_measure_vector_state(full3, ray(1, 1, 0))
    assert not born.is_dirac and np.allclose(born.state.weights, [0.5, 0.5, 0.0])


@given(seeds, st.integers(2, 5))
def test_point_measure_round_trip(seed, n):
    rng = np.random.default_rng(seed)
    m = random_context(n, rng, atoms=n)
    k = int(rng.integers(n))
    x = m.atoms[k].range.basis[:, 0] * np.exp(1j * rng.uniform(0, 2 * np.pi))
    pm = point_measure_vector_state(m, x)
    assert pm.is_dirac and pm.atom_index == k
    y = vector_from_point_measure(pm.state)
    assert abs(abs(np.vdot(x, y)) - 1) <= 1e-12


def test_point_measure_guards():
    with pytest.raises(InvariantError):
        point_measure_vector_state(e1_e23, [1.0, 0, 0])
    with pytest.raises(InvariantError):
        vector_from_point_measure(ContextState(full3, [0.5, 0.5, 0.0]))


def test_quasistate_examples():
    d123 = np.diag([1.0, 2, 3])
    report = quasistate_eval(ray(1, 1, 0), d123)
    assert report.value == pytest.approx(1.5, abs=1e-9)
    assert report.expectation == pytest.approx(1.5, abs=1e-9)
    assert report.sampled_inf <= report.value
    for k in range(3):
        x = np.eye(3)[k]
        assert quasistate_eval(x, d123, samples=5).value == pytest.approx(k + 1)
    rng = np.random.default_rng(0)
    for _ in range(5):
        assert quasistate_eval(random_unit_vector(4, rng), np.eye(4), samples=5).value == pytest.approx(1)


@given(seeds, st.integers(2, 5))
def test_quasistate_value_is_expectation(seed, n):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    a = z + z.conj().T
    x = random_unit_vector(n, rng)
    report = quasistate_eval(x, a, samples=3, seed=seed)
    assert report.value == pytest.approx(np.vdot(x, a @ x).real, abs=1e-9)


def test_quasistate_guards():
    with pytest.raises(InvariantError):
        quasistate_eval([1.0, 1.0, 0.0], np.eye(3))
    with pytest.raises(InvariantError):
        quasistate_eval([1.0, 0.0, 0.0], np.eye(3), samples=0)


def test_projections_in_measure_matches_state():
    state = ContextState(full3, [0.2, 0.3, 0.5])
    for p in projections_in(full3):
        assert state.measure(p) == pytest.approx(float(np.diag(p.matrix).real @ [0.2, 0.3, 0.5]))
