"""The acceptance checks, runnable from pytest and from ``ctxobs selftest``.

Each check returns a :class:`CheckResult`; none of them raises on a failed
comparison, so a failing check still reports what it measured.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .context import (
    AbelianContext,
    diagonal_contexts,
    random_context,
    random_unitary,
)
from .linalg import Subspace, max_abs
from .plattice import (
    Projection,
    basis_projection,
    complement,
    join,
    join_all,
    meet,
    orthogonal_sum,
)
from .presheaf import (
    ContextFamily,
    FormalObservable,
    c3_counterexample,
    formal_eval,
    refute_inducing_operator,
    restrict_coefficients,
    structured_c3_family,
    validate_section,
)
from .restrict import (
    coarse_grain,
    core,
    lower_aspect,
    lower_aspect_from_family,
    support,
    upper_aspect,
    upper_aspect_from_family,
)
from .sampling import random_density, random_hermitian, random_projection
from .spectral import (
    family_from_operator,
    mirrored_value,
    observable_value,
    spectral_join,
    spectral_leq,
    spectral_meet,
)
from .states import (
    ProjectionMeasure,
    c2_counterexample,
    extend_measure,
    fit_density,
    naturality_square,
    quasistate_eval,
    section_from_density,
)

TOL = 1e-9


@dataclass(frozen=True)
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.2f}s)"


def _sub_projection(fam, rng) -> Projection:
    """A random nonzero projection below a random level E_λ of a spectral family."""
    e = fam.cumulative[int(rng.integers(len(fam.cumulative)))]
    k = int(rng.integers(1, e.rank + 1))
    mix = random_unitary(e.rank, rng)[:, :k]
    return Projection(Subspace(e.range.basis @ mix, fam.dim))


def _random_case(rng, dims=(2, 6)):
    n = int(rng.integers(dims[0], dims[1] + 1))
    m = random_context(n, rng)
    a = random_hermitian(n, rng, degenerate=bool(rng.integers(2)))
    return n, m, a


def check_core_support_duality(seed=1) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(2, 7))
        m = random_context(n, rng)
        # half of the projections are built from the context's atoms, half at random
        if rng.integers(2):
            q = random_projection(n, rng)
        else:
            picks = [p for p in m.atoms if rng.integers(2)]
            base = orthogonal_sum(picks, n)
            q = join(base, random_projection(n, rng, rank=int(rng.integers(0, 2))))
        total = core(m, q).matrix + support(m, complement(q)).matrix
        worst = max(worst, max_abs(total - np.eye(n)))
    return CheckResult(1, "core/support duality", worst <= TOL,
                       f"500 cases, max |c(Q) + s(I-Q) - I| = {worst:.2e}")


def check_mirror(seed=2) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_op = 0.0
    for _ in range(200):
        _, m, a = _random_case(rng)
        worst_op = max(worst_op, max_abs(lower_aspect(m, a).operator + upper_aspect(m, -a).operator))
    worst_val = 0.0
    count = 0
    while count < 1000:
        n = int(rng.integers(2, 6))
        a = random_hermitian(n, rng, degenerate=bool(rng.integers(2)))
        fam = family_from_operator(a)
        for _ in range(10):
            p = _sub_projection(fam, rng) if rng.integers(2) else random_projection(n, rng, rank=int(rng.integers(1, n + 1)))
            worst_val = max(worst_val, abs(mirrored_value(a, p) + observable_value(-a, p)))
            count += 1
    passed = worst_op <= TOL and worst_val <= TOL
    return CheckResult(2, "mirror identity", passed,
                       f"200 aspects max dev {worst_op:.2e}; 1000 projections max |s_A + r_-A| = {worst_val:.2e}")


def _bounded_candidates(m, a, rng, below: bool):
    """Random elements of span(m) spectrally below (or above) a, by rejection."""
    values = np.linalg.eigvalsh(a)
    pool = np.concatenate([values, values - 1.0, values + 1.0])
    for _ in range(400):
        b = m.operator(rng.choice(pool, size=len(m)))
        if spectral_leq(b, a) if below else spectral_leq(a, b):
            return b
    return None


def check_sandwich_extremality(seed=3) -> CheckResult:
    rng = np.random.default_rng(seed)
    sandwich_ok = True
    tested = failures = 0
    while tested < 100:
        n = int(rng.integers(2, 5))
        m = random_context(n, rng, basis=np.eye(n) if rng.integers(2) else None)
        a = random_hermitian(n, rng, degenerate=True)
        lo, hi = lower_aspect(m, a).operator, upper_aspect(m, a).operator
        sandwich_ok &= spectral_leq(lo, a) and spectral_leq(a, hi)
        b = _bounded_candidates(m, a, rng, below=True)
        c = _bounded_candidates(m, a, rng, below=False)
        if b is None or c is None:
            continue
        tested += 1
        if not (spectral_leq(b, lo) and spectral_leq(hi, c)):
            failures += 1
    return CheckResult(3, "sandwich and extremality", sandwich_ok and failures == 0,
                       f"sandwich {'holds' if sandwich_ok else 'FAILS'}; "
                       f"{tested} bounded pairs, {failures} extremality failures")


def _coefficient_family(m, coefficients):
    values = sorted(set(np.round(coefficients, 12)))
    levels = [orthogonal_sum([p for p, c in zip(m.atoms, coefficients) if c <= v + TOL], m.ambient_dim)
              for v in values]
    return values, levels


def _same_family(m, coefficients, family) -> bool:
    values, levels = _coefficient_family(m, coefficients)
    if len(values) != len(family.jumps):
        return False
    return all(abs(v - j) <= TOL and p.close_to(q) for v, j, p, q in
               zip(values, family.jumps, levels, family.cumulative))


def check_oracle_equivalence(seed=4) -> CheckResult:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(200):
        _, m, a = _random_case(rng, dims=(2, 5))
        if not _same_family(m, upper_aspect(m, a).coefficients, upper_aspect_from_family(m, a)):
            bad += 1
        if not _same_family(m, lower_aspect(m, a).coefficients, lower_aspect_from_family(m, a)):
            bad += 1
    return CheckResult(4, "atom rule vs spectral-family route", bad == 0,
                       f"200 cases x 2 aspects, {bad} disagreements")


def check_complete_increasing(seed=5) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_r = worst_s = 0.0
    noncommuting = 0
    for _ in range(300):
        n = int(rng.integers(2, 6))
        a = random_hermitian(n, rng, degenerate=bool(rng.integers(2)))
        fam = family_from_operator(a)
        ps = [_sub_projection(fam, rng) for _ in range(int(rng.integers(2, 5)))]
        if any(max_abs(p.matrix @ q.matrix - q.matrix @ p.matrix) > 1e-9 for p in ps for q in ps):
            noncommuting += 1
        top = join_all(ps)
        worst_r = max(worst_r, abs(observable_value(a, top) - max(observable_value(a, p) for p in ps)))
        worst_s = max(worst_s, abs(mirrored_value(a, top) - min(mirrored_value(a, p) for p in ps)))
    return CheckResult(5, "complete increasing/decreasing", max(worst_r, worst_s) <= TOL,
                       f"300 families ({noncommuting} non-commuting), "
                       f"max dev r {worst_r:.2e}, s {worst_s:.2e}")


def check_coarse_graining() -> CheckResult:
    cg = coarse_grain(np.diag([1.0, 2, 3, 4, 5]), [2, 4])
    upper_ok = (max_abs(cg.upper.operator - np.diag([2.0, 2, 4, 4, 5])) <= TOL
                and np.allclose(cg.upper.spectrum, [2, 4, 5], atol=TOL, rtol=0))
    lower_ok = max_abs(cg.lower.operator - np.diag([1.0, 1, 3, 3, 5])) <= TOL
    closed_form = np.diag(cg.lower_riemann_sum).real
    return CheckResult(
        6, "coarse-graining", upper_ok and lower_ok,
        f"upper spectrum {cg.upper.spectrum}; lower diag {np.diag(cg.lower.operator).real.tolist()}; "
        f"closed-form lower Riemann sum diag {closed_form.tolist()} differs "
        f"(the closed form assumes E jumps right after each point)")


def check_c3(seed=7) -> CheckResult:
    e1, e2 = np.eye(3)[0], np.eye(3)[1]
    p1 = Projection(Subspace(e1, 3))
    p2 = Projection(Subspace((e1 + e2) / np.sqrt(2), 3))
    fam = structured_c3_family(p1, p2, n_random=1000, seed=seed)
    section = c3_counterexample(p1, p2, fam)
    ok, violations = validate_section(section)
    ref = refute_inducing_operator(section)
    named = all(len(f) > 0 for f in ref.candidate_failures)
    passed = len(fam) >= 1000 and ok and ref.refuted and named
    first = [f[0] if f else None for f in ref.candidate_failures]
    return CheckResult(7, "C^3 counterexample", passed,
                       f"{len(fam)} contexts, {len(violations)} violations, witness norm "
                       f"{ref.witness_norm:.4f}, candidates fail first at contexts {first}")


def check_formal_witness() -> CheckResult:
    p, q = basis_projection(2, [0]), basis_projection(2, [1])
    fo = FormalObservable.of(p.matrix) + FormalObservable.of(q.matrix)
    e, f = complement(p), complement(q)
    values = (formal_eval(fo, e), formal_eval(fo, f), formal_eval(fo, join(e, f)))
    return CheckResult(8, "formal observable non-closure", values == (1.0, 1.0, 2.0),
                       f"(f+h)(E), (f+h)(F), (f+h)(E v F) = {values}")


def check_fiber_formulas(seed=9) -> CheckResult:
    rng = np.random.default_rng(seed)
    families = [ContextFamily(diagonal_contexts(4)),
                ContextFamily(diagonal_contexts(4, random_unitary(4, rng)))]
    chains = worst = 0
    for fam in families:
        for small, big in fam.chains():
            a, b = fam[small], fam[big]
            coeffs = rng.integers(-3, 4, size=len(b)).astype(float)
            op = b.operator(coeffs)
            for mode, aspect in (("upper", upper_aspect), ("lower", lower_aspect)):
                fiber = restrict_coefficients(b, coeffs, a, mode)
                worst = max(worst, float(np.max(np.abs(fiber - aspect(a, op).coefficients))))
            chains += 1
    return CheckResult(9, "fiber max/min formulas", worst <= TOL,
                       f"{chains} chain pairs in 2 families, max dev {worst:.2e}")


def _random_representation(m, coefficients, rng):
    """An orthogonal decomposition Σ c_j Q_j: a random refinement of the equal-value groups."""
    groups: dict[float, list[int]] = {}
    for i, c in enumerate(coefficients):
        groups.setdefault(float(c), []).append(i)
    coeffs, projections = [], []
    for c, members in groups.items():
        members = list(rng.permutation(members))
        cut = sorted(rng.choice(np.arange(1, len(members)), size=int(rng.integers(0, len(members))),
                                replace=False)) if len(members) > 1 else []
        for block in np.split(np.array(members), cut):
            coeffs.append(c)
            projections.append(m.sum_of(block.tolist()))
    return coeffs, projections


def check_state_machinery(seed=10) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_linear = worst_rep = worst_norm = 0.0
    positive = True
    for _ in range(100):
        n = int(rng.integers(2, 6))
        m = random_context(n, rng)
        phi = extend_measure(m, ProjectionMeasure.from_density(random_density(n, rng), [m]))
        x, y = (m.operator(rng.standard_normal(len(m))) for _ in range(2))
        s, t = rng.standard_normal(2)
        worst_linear = max(worst_linear, abs(phi(s * x + t * y) - s * phi(x) - t * phi(y)))
        positive &= phi(m.operator(rng.random(len(m)))) >= -TOL
        worst_norm = max(worst_norm, abs(phi(np.eye(n)) - 1.0))
        coeffs = rng.integers(-2, 3, size=len(m)).astype(float)
        first = phi.evaluate(*_random_representation(m, coeffs, rng))
        second = phi.evaluate(*_random_representation(m, coeffs, rng))
        worst_rep = max(worst_rep, abs(first - second), abs(first - phi(m.operator(coeffs))))
    fam = ContextFamily(diagonal_contexts(4))
    square_ok = True
    for small, big in fam.chains():
        nu = rng.dirichlet(np.ones(len(fam[big])))
        square_ok &= naturality_square(fam[big], fam[small], nu)
    rho = random_density(3, rng)
    contexts = [AbelianContext.from_partition([[0], [1], [2]], random_unitary(3, rng)) for _ in range(6)]
    fit = fit_density(section_from_density(ContextFamily(contexts), rho))
    fit_err = max_abs(fit.density - rho)
    passed = (max(worst_linear, worst_rep, worst_norm) <= TOL and positive and square_ok and fit_err <= 1e-6)
    return CheckResult(10, "state machinery", passed,
                       f"linearity {worst_linear:.1e}, representation {worst_rep:.1e}, "
                       f"norm {worst_norm:.1e}, positive {positive}, naturality {square_ok}, "
                       f"density fit error {fit_err:.1e} in {fit.iterations} iterations")


def check_c2() -> CheckResult:
    section, report = c2_counterexample()
    target = 1 - 1 / np.sqrt(2)
    passed = report.section_valid and abs(report.residual - target) <= TOL
    return CheckResult(11, "C^2 state counterexample", passed,
                       f"section valid {report.section_valid}, a = {report.a:.6f}, "
                       f"residual {report.residual:.10f} vs {target:.10f}")


def check_quasistate() -> CheckResult:
    a = np.diag([1.0, 2, 3])
    rep = quasistate_eval(np.array([1.0, 1.0, 0.0]) / np.sqrt(2), a, samples=50)
    aligned = [abs(quasistate_eval(np.eye(3)[k], a, samples=5).value
                   - observable_value(a, basis_projection(3, [k]))) for k in range(3)]
    passed = abs(rep.value - 1.5) <= TOL and max(aligned) <= TOL
    return CheckResult(12, "quasistate values", passed,
                       f"value at P_Cx {rep.value:.12f}, sampled inf {rep.sampled_inf:.6f}; "
                       f"basis-aligned max dev {max(aligned):.1e}")


def check_spectral_lattice(seed=13) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 6))
        ds = [rng.integers(-3, 4, size=n).astype(float) for _ in range(int(rng.integers(2, 4)))]
        ops = [np.diag(d) for d in ds]
        worst = max(worst, max_abs(spectral_join(ops) - np.diag(np.max(ds, axis=0))),
                    max_abs(spectral_meet(ops) - np.diag(np.min(ds, axis=0))))
    worst_p = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 5))
        p = random_projection(n, rng, rank=int(rng.integers(1, n)))
        q = random_projection(n, rng, rank=int(rng.integers(1, n)))
        worst_p = max(worst_p, max_abs(spectral_join([p.matrix, q.matrix]) - join(p, q).matrix),
                      max_abs(spectral_meet([p.matrix, q.matrix]) - meet(p, q).matrix))
    return CheckResult(13, "spectral lattice oracle", max(worst, worst_p) <= TOL,
                       f"diagonal max dev {worst:.1e}; projection max dev {worst_p:.1e}")


CHECKS = (
    check_core_support_duality,
    check_mirror,
    check_sandwich_extremality,
    check_oracle_equivalence,
    check_complete_increasing,
    check_coarse_graining,
    check_c3,
    check_formal_witness,
    check_fiber_formulas,
    check_state_machinery,
    check_c2,
    check_quasistate,
    check_spectral_lattice,
)


def run_check(check) -> CheckResult:
    start = time.perf_counter()
    result = check()
    return CheckResult(result.number, result.name, result.passed, result.detail,
                       time.perf_counter() - start)


def run_all() -> list[CheckResult]:
    return [run_check(c) for c in CHECKS]

