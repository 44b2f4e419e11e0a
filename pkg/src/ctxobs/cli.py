"""Command-line interface: ``ctxobs <command> ...``.

Exit codes: 0 success, 2 violations found, 3 input error, 4 numeric failure.
Reports are deterministic: the same inputs and seed give byte-identical
output, and every JSON report embeds the seed and the tolerances in use.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import io
from .context import AbelianContext
from .linalg import DEFAULT_TOLERANCES, InvariantError, NumericError, Subspace, ToleranceConfig
from .plattice import Projection
from .presheaf import (
    c3_counterexample,
    glue_section,
    refute_inducing_operator,
    section_from_operator,
    structured_c3_family,
    validate_section,
)
from .restrict import (
    aspect_from_family,
    coarse_grain,
    lower_aspect,
    lower_aspect_from_family,
    upper_aspect,
    upper_aspect_from_family,
)
from .spectral import spectral_join, spectral_leq, spectral_meet
from .states import (
    StateSection,
    c2_counterexample,
    extend_measure,
    fit_density,
    quasistate_eval,
    restrict_state,
    validate_state_section,
)

EXIT_OK, EXIT_VIOLATIONS, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3, 4

PROFILE_ENV = "CTXOBS_TOLERANCE_PROFILE"
PROFILES = {
    "default": DEFAULT_TOLERANCES,
    "strict": ToleranceConfig(tol_rank=1e-11, tol_eig_cluster=1e-10, tol_hermitian=1e-12, tol_compare=1e-11),
    "loose": ToleranceConfig(tol_rank=1e-7, tol_eig_cluster=1e-6, tol_hermitian=1e-8, tol_compare=1e-7),
}


class Failure(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code, self.kind = code, kind


def tolerances(args) -> ToleranceConfig:
    profile = os.environ.get(PROFILE_ENV, "default")
    if profile not in PROFILES:
        raise Failure(EXIT_INPUT, "input", f"unknown tolerance profile {profile!r} in {PROFILE_ENV}")
    base = asdict(PROFILES[profile])
    for name in base:
        value = getattr(args, name, None)
        if value is not None:
            base[name] = value
    try:
        return ToleranceConfig(**base)
    except InvariantError as exc:
        raise Failure(EXIT_INPUT, "input", str(exc)) from None


# --- input helpers ---------------------------------------------------------------

def _read(path):
    return io.load_json(path), Path(path).parent


def _operator(path, cfg):
    doc, _ = _read(path)
    return io.parse_matrix(doc, cfg)


def _context(source, n, cfg) -> AbelianContext:
    if source == "trivial":
        return AbelianContext.trivial(n)
    doc, base = _read(source)
    return io.parse_context(doc, cfg, base)


def _family(path, cfg):
    doc, base = _read(path)
    return io.parse_family(doc, cfg, base)


def _section(path, cfg):
    doc, base = _read(path)
    return io.parse_section(doc, cfg, base)


def _vector(text: str) -> np.ndarray:
    try:
        x = np.array([complex(v.replace("i", "j")) for v in text.split(",")])
    except ValueError:
        raise Failure(EXIT_INPUT, "input", f"cannot parse vector {text!r}") from None
    return x


def _aspect(m, a, mode, cfg):
    return (upper_aspect if mode == "upper" else lower_aspect)(m, a, cfg)


# --- commands --------------------------------------------------------------------

def cmd_restrict(args, cfg):
    a = _operator(args.op, cfg)
    m = _context(args.context, a.shape[0], cfg)
    result = _aspect(m, a, args.mode, cfg)
    oracle = (upper_aspect_from_family if args.mode == "upper" else lower_aspect_from_family)(m, a, cfg)
    agrees = bool(np.max(np.abs(aspect_from_family(m, oracle, cfg).coefficients - result.coefficients))
                  <= cfg.tol_compare)
    report = {
        "mode": args.mode,
        "operator": io.encode_matrix(result.operator),
        "coefficients": io.encode_reals(result.coefficients),
        "atom_ranks": [p.rank for p in m.atoms],
        "spectrum": io.encode_reals(result.spectrum),
        "oracle_agrees": agrees,
    }
    return report, EXIT_OK if agrees else EXIT_VIOLATIONS


def cmd_order(args, cfg):
    ops = [_operator(p, cfg) for p in args.ops]
    if args.action == "compare":
        if len(ops) != 2:
            raise Failure(EXIT_INPUT, "input", "compare needs exactly two operators")
        a, b = ops
        return {"a_leq_b": spectral_leq(a, b, cfg), "b_leq_a": spectral_leq(b, a, cfg)}, EXIT_OK
    combine = spectral_join if args.action == "join" else spectral_meet
    return {args.action: io.encode_matrix(combine(ops, cfg))}, EXIT_OK


def _violation_rows(violations, labels):
    return [{"first": labels.get(v.first, str(v.first)), "second": labels.get(v.second, str(v.second)),
             "meet": labels.get(v.meet, f"meet#{v.meet}"), "deviation": io.clean_float(v.deviation)}
            for v in violations]


def cmd_section(args, cfg):
    if args.action == "from-op":
        a = _operator(args.op, cfg)
        family, labels = _family(args.family, cfg)
        s = section_from_operator(a, family, args.mode, cfg)
        ok, _ = validate_section(s, args.mode, cfg)
        values = {labels.get(k, f"meet#{k}"): io.encode_matrix(s.value(k)) for k in range(len(family))}
        return {"mode": args.mode, "values": values, "valid": ok}, EXIT_OK
    if args.action == "validate":
        s, labels = _section(args.section, cfg)
        if isinstance(s, StateSection):
            ok, violations = validate_state_section(s, cfg)
        else:
            ok, violations = validate_section(s, args.mode, cfg)
        report = {"valid": ok, "violations": _violation_rows(violations, labels)}
        return report, EXIT_OK if ok else EXIT_VIOLATIONS
    if args.action == "glue":
        s, labels = _section(args.section, cfg)
        if isinstance(s, StateSection):
            raise Failure(EXIT_INPUT, "input", "glue expects an observable section")
        ok, violations = validate_section(s, "upper", cfg)
        if not ok:
            return {"valid": False, "violations": _violation_rows(violations, labels)}, EXIT_VIOLATIONS
        table = glue_section(s, cfg)
        rows = sorted(([io.encode_matrix(p.matrix), io.clean_float(v)] for p, v in table.items()),
                      key=lambda r: (r[1], str(r[0])))
        return {"valid": True, "table": [{"projection": p, "value": v} for p, v in rows]}, EXIT_OK
    # c3-demo
    e1, e2 = np.eye(3)[0], np.eye(3)[1]
    p1 = Projection(Subspace(e1, 3))
    p2 = Projection(Subspace((e1 + e2) / np.sqrt(2), 3))
    family = structured_c3_family(p1, p2, args.n_random, args.seed, cfg)
    s = c3_counterexample(p1, p2, family, cfg)
    ok, violations = validate_section(s, "upper", cfg)
    ref = refute_inducing_operator(s, cfg)
    report = {
        "p1": io.encode_matrix(p1.matrix),
        "p2": io.encode_matrix(p2.matrix),
        "contexts": len(family),
        "section_valid": ok,
        "violations": len(violations),
        "refuted": ref.refuted,
        "forced_rank": ref.forced_rank,
        "witness_norm": io.clean_float(ref.witness_norm),
        "reasoning": list(ref.reasoning),
        "candidates": [
            {"candidate": io.encode_matrix(c.matrix), "failing_contexts": len(f),
             "first_failing_context": io.encode_context(family[f[0]]) if f else None}
            for c, f in zip(ref.candidates, ref.candidate_failures)
        ],
    }
    return report, EXIT_OK if ok and ref.refuted else EXIT_VIOLATIONS


def cmd_state(args, cfg):
    if args.action == "extend":
        if args.context == "trivial" and args.dim is None:
            raise Failure(EXIT_INPUT, "input", "--dim is required with --context trivial")
        m = _context(args.context, args.dim, cfg)
        doc, _ = _read(args.measure)
        phi = extend_measure(m, io.parse_measure(doc, [m], cfg), cfg)
        report = {"weights": io.encode_reals(phi.weights)}
        if args.op:
            report["value"] = io.clean_float(phi(_operator(args.op, cfg), cfg))
        return report, EXIT_OK
    if args.action == "restrict":
        doc, base = _read(args.state)
        st = io.parse_state(doc, cfg, base)
        target = _context(args.to, st.context.ambient_dim, cfg)
        return {"weights": io.encode_reals(restrict_state(st, target, cfg).weights)}, EXIT_OK
    if args.action == "validate":
        s, labels = _section(args.section, cfg)
        if not isinstance(s, StateSection):
            raise Failure(EXIT_INPUT, "input", "expected a state section (with 'weights')")
        ok, violations = validate_state_section(s, cfg)
        report = {"valid": ok, "violations": _violation_rows(violations, labels)}
        return report, EXIT_OK if ok else EXIT_VIOLATIONS
    if args.action == "fit":
        s, _ = _section(args.section, cfg)
        if not isinstance(s, StateSection):
            raise Failure(EXIT_INPUT, "input", "expected a state section (with 'weights')")
        fit = fit_density(s, cfg)
        return {"density": io.encode_matrix(fit.density), "residual": io.clean_float(fit.residual),
                "iterations": fit.iterations}, EXIT_OK
    if args.action == "quasistate":
        a = _operator(args.op, cfg)
        rep = quasistate_eval(_vector(args.vector), a, args.samples, args.seed, cfg)
        return {"value": io.clean_float(rep.value), "expectation": io.clean_float(rep.expectation),
                "sampled_inf": io.clean_float(rep.sampled_inf), "samples": rep.samples}, EXIT_OK
    # c2-demo
    section, rep = c2_counterexample(cfg)
    fit = fit_density(section, cfg)
    report = {
        "a": io.clean_float(rep.a),
        "b": io.clean_float(rep.b),
        "section_valid": rep.section_valid,
        "phi(P)+phi(Q)": io.clean_float(rep.lhs),
        "a*phi(R)+b*phi(I-R)": io.clean_float(rep.rhs),
        "linearity_residual": io.clean_float(rep.residual),
        "best_density_fit_residual": io.clean_float(fit.residual),
    }
    return report, EXIT_OK if rep.section_valid else EXIT_VIOLATIONS


def cmd_coarse_grain(args, cfg):
    a = _operator(args.op, cfg)
    cg = coarse_grain(a, args.points, cfg)
    report = {
        "points": io.encode_reals(cg.points),
        "upper": io.encode_matrix(cg.upper.operator),
        "upper_spectrum": io.encode_reals(cg.upper.spectrum),
        "lower": io.encode_matrix(cg.lower.operator),
        "lower_riemann_sum": io.encode_matrix(cg.lower_riemann_sum),
        "lower_matches_riemann_sum": cg.lower_matches_riemann_sum,
    }
    return report, EXIT_OK


def cmd_selftest(args, cfg):
    from .acceptance import run_all

    results = run_all()
    report = {"checks": [{"number": r.number, "name": r.name, "passed": r.passed, "detail": r.detail}
                         for r in results]}
    for r in results:
        print(r.line(), file=sys.stderr)
    return report, EXIT_OK if all(r.passed for r in results) else EXIT_VIOLATIONS


# --- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    for name in ("tol_rank", "tol_eig_cluster", "tol_hermitian", "tol_compare"):
        common.add_argument("--" + name.replace("_", "-"), dest=name, type=float)

    parser = argparse.ArgumentParser(prog="ctxobs", description="Contextual observables on matrix algebras.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("restrict", parents=[common], help="upper/lower aspect of an operator in a context")
    p.add_argument("--op", required=True)
    p.add_argument("--context", required=True, help="context file, or 'trivial'")
    p.add_argument("--mode", choices=("upper", "lower"), default="upper")
    p.set_defaults(func=cmd_restrict)

    p = sub.add_parser("order", parents=[common], help="spectral order and lattice operations")
    p.add_argument("action", choices=("compare", "join", "meet"))
    p.add_argument("ops", nargs="+")
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("section", parents=[common], help="observable sections")
    p.add_argument("action", choices=("from-op", "validate", "c3-demo", "glue"))
    p.add_argument("--op")
    p.add_argument("--family")
    p.add_argument("--section")
    p.add_argument("--mode", choices=("upper", "lower"), default="upper")
    p.add_argument("--n-random", type=int, default=1000)
    p.set_defaults(func=cmd_section)

    p = sub.add_parser("state", parents=[common], help="context states and state sections")
    p.add_argument("action", choices=("extend", "restrict", "validate", "c2-demo", "fit", "quasistate"))
    p.add_argument("--context")
    p.add_argument("--dim", type=int)
    p.add_argument("--measure")
    p.add_argument("--op")
    p.add_argument("--state")
    p.add_argument("--to")
    p.add_argument("--section")
    p.add_argument("--vector", help="comma-separated entries, e.g. 0.7071,0.7071,0")
    p.add_argument("--samples", type=int, default=100)
    p.set_defaults(func=cmd_state)

    p = sub.add_parser("coarse-grain", parents=[common], help="coarse-grain along spectral points")
    p.add_argument("--op", required=True)
    p.add_argument("--points", type=float, nargs="+", required=True)
    p.set_defaults(func=cmd_coarse_grain)

    p = sub.add_parser("selftest", parents=[common], help="run the acceptance checks")
    p.set_defaults(func=cmd_selftest)
    return parser


REQUIRED = {
    ("section", "from-op"): ("op", "family"),
    ("section", "validate"): ("section",),
    ("section", "glue"): ("section",),
    ("state", "extend"): ("context", "measure"),
    ("state", "restrict"): ("state", "to"),
    ("state", "validate"): ("section",),
    ("state", "fit"): ("section",),
    ("state", "quasistate"): ("op", "vector"),
}


def _render_text(report, indent=0) -> str:
    lines = []
    pad = "  " * indent
    for key in sorted(report):
        value = report[key]
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.append(_render_text(value, indent + 1))
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            lines.append(f"{pad}{key}:")
            for item in value:
                lines.append(_render_text(item, indent + 1))
                lines.append(f"{pad}  --")
        else:
            lines.append(f"{pad}{key}: {value}")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = tolerances(args)
        for name in REQUIRED.get((args.command, getattr(args, "action", None)), ()):
            if getattr(args, name) is None:
                raise Failure(EXIT_INPUT, "input", f"--{name} is required for {args.command} {args.action}")
        report, code = args.func(args, cfg)
    except Failure as exc:
        report, code = {"error": {"kind": exc.kind, "message": str(exc)}}, exc.code
    except io.InputError as exc:
        report, code = {"error": {"kind": "input", "message": str(exc), "pointer": exc.pointer}}, EXIT_INPUT
    except NumericError as exc:
        report = {"error": {"kind": "numeric", "message": str(exc), "iterations": exc.iterations}}
        code = EXIT_NUMERIC
    except (InvariantError, ValueError) as exc:
        report, code = {"error": {"kind": "invariant", "message": str(exc)}}, EXIT_INPUT
    report["run"] = {"seed": args.seed, "tolerances": asdict(cfg) if "cfg" in locals() else None,
                     "command": args.command, "exit_code": code}
    text = io.dumps(report) if args.format == "json" else _render_text(report) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if "error" in report:
        print(f"ctxobs: {report['error']['message']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
