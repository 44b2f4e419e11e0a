"""JSON file formats: matrices, contexts, families, sections, measures and states.

Matrices are row-major nested arrays whose entries are real numbers or
``[re, im]`` pairs. Every document is checked against the schema files
shipped in ``ctxobs/schemas`` before it is turned into domain objects, and
schema errors name the offending location as a JSON pointer.
"""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator
from jsonschema.exceptions import best_match
from referencing import Registry, Resource

from .context import AbelianContext
from .linalg import DEFAULT_TOLERANCES, InvariantError, ToleranceConfig, check_hermitian
from .plattice import Projection
from .presheaf import ContextFamily, GlobalSection
from .states import ContextState, ProjectionMeasure, StateSection

SCHEMAS = ("matrix", "context", "family", "section", "measure", "state")


class InputError(ValueError):
    """A file does not parse or does not satisfy its schema."""

    def __init__(self, message, pointer: str = ""):
        super().__init__(f"{pointer}: {message}" if pointer else message)
        self.pointer = pointer


@lru_cache(maxsize=None)
def _registry() -> Registry:
    folder = resources.files("ctxobs") / "schemas"
    pairs = []
    for name in SCHEMAS:
        doc = json.loads((folder / f"{name}.schema.json").read_text(encoding="utf-8"))
        pairs.append((doc["$id"], Resource.from_contents(doc)))
    return Registry().with_resources(pairs)


def schema(name: str) -> dict:
    return _registry().contents(f"{name}.schema.json")


def validate_document(doc, name: str):
    """Raise InputError for the first schema violation, located by JSON pointer."""
    validator = Draft202012Validator(schema(name), registry=_registry())
    # best_match descends into oneOf/anyOf branches to the most specific error
    err = best_match(validator.iter_errors(doc))
    if err is not None:
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        raise InputError(err.message, pointer)


def load_json(path) -> object:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


# --- decoding --------------------------------------------------------------------

def matrix_from_rows(rows, pointer: str = "") -> np.ndarray:
    if isinstance(rows, dict):
        rows, pointer = rows["matrix"], pointer + "/matrix"
    n = len(rows)
    out = np.empty((n, n), dtype=complex)
    for i, row in enumerate(rows):
        if len(row) != n:
            raise InputError(f"row has {len(row)} entries, expected {n}", f"{pointer}/{i}")
        for j, entry in enumerate(row):
            out[i, j] = complex(entry[0], entry[1]) if isinstance(entry, list) else entry
    return out


def _parse_operator(rows, pointer, cfg):
    m = matrix_from_rows(rows, pointer)
    try:
        return check_hermitian(m, cfg)
    except InvariantError as exc:
        raise InputError(str(exc), pointer) from None


def parse_matrix(doc, cfg: ToleranceConfig = DEFAULT_TOLERANCES, hermitian: bool = True) -> np.ndarray:
    validate_document(doc, "matrix")
    return _parse_operator(doc, "", cfg) if hermitian else matrix_from_rows(doc)


def _context_from_doc(doc, pointer, base: Path | None, cfg) -> AbelianContext:
    try:
        if doc.get("trivial"):
            return AbelianContext.trivial(int(doc["dim"]))
        if "projections" in doc:
            atoms = [Projection.from_matrix(matrix_from_rows(rows, f"{pointer}/projections/{k}"), cfg)
                     for k, rows in enumerate(doc["projections"])]
            return AbelianContext(atoms, cfg)
        basis = None
        if "basis" in doc:
            basis = matrix_from_rows(doc["basis"], pointer + "/basis")
        elif "basis_file" in doc:
            ref = Path(doc["basis_file"])
            ref = ref if ref.is_absolute() or base is None else base / ref
            basis_doc = load_json(ref)
            validate_document(basis_doc, "matrix")
            basis = matrix_from_rows(basis_doc)
        return AbelianContext.from_partition(doc["partition"], basis, doc.get("dim"), cfg)
    except InvariantError as exc:
        raise InputError(str(exc), pointer) from None


def parse_context(doc, cfg: ToleranceConfig = DEFAULT_TOLERANCES, base: Path | None = None) -> AbelianContext:
    validate_document(doc, "context")
    return _context_from_doc(doc, "", base, cfg)


def _family_from_doc(doc, pointer, base, cfg):
    contexts, ids = [], []
    for k, c in enumerate(doc["contexts"]):
        contexts.append(_context_from_doc(c, f"{pointer}/contexts/{k}", base, cfg))
        ids.append(c.get("id", str(k)))
    if len(set(ids)) != len(ids):
        raise InputError("context ids must be unique", pointer + "/contexts")
    try:
        family = ContextFamily(contexts, cfg)
    except InvariantError as exc:
        raise InputError(str(exc), pointer) from None
    # map family positions back to file ids; duplicates collapse onto the first id
    labels: dict[int, str] = {}
    for ctx, ident in zip(contexts, ids):
        labels.setdefault(family.index_of(ctx), ident)
    return family, labels


def parse_family(doc, cfg: ToleranceConfig = DEFAULT_TOLERANCES, base: Path | None = None):
    """Returns ``(family, labels)``; labels maps family indices to file ids."""
    validate_document(doc, "family")
    return _family_from_doc(doc, "", base, cfg)


def _require_closed(family, labels, pointer):
    added = [k for k in range(len(family)) if k not in labels]
    if added:
        raise InputError(f"family is not closed under meets; add the meets of "
                         f"{len(added)} context pair(s), e.g. the trivial context", pointer)


def parse_section(doc, cfg: ToleranceConfig = DEFAULT_TOLERANCES, base: Path | None = None):
    """An observable section (``values``) or a state section (``weights``).

    Returns ``(section, labels)``.
    """
    validate_document(doc, "section")
    family, labels = _family_from_doc(doc["family"], "/family", base, cfg)
    _require_closed(family, labels, "/family/contexts")
    key = "values" if "values" in doc else "weights"
    data = doc[key]
    missing = [labels[k] for k in range(len(family)) if labels[k] not in data]
    if missing:
        raise InputError(f"no value for context id(s) {missing}", f"/{key}")
    if key == "values":
        coeffs = []
        for k, ctx in enumerate(family):
            pointer = f"/values/{labels[k]}"
            op = _parse_operator(data[labels[k]], pointer, cfg)
            try:
                coeffs.append(ctx.coefficients(op, cfg))
            except InvariantError as exc:
                raise InputError(str(exc), pointer) from None
        return GlobalSection(family, coeffs), labels
    states = []
    for k, ctx in enumerate(family):
        try:
            states.append(ContextState(ctx, data[labels[k]]))
        except InvariantError as exc:
            raise InputError(str(exc), f"/weights/{labels[k]}") from None
    return StateSection(family, states), labels


def parse_measure(doc, contexts, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> ProjectionMeasure:
    """A density (recorded on every projection of the given contexts) or explicit entries."""
    validate_document(doc, "measure")
    if "density" in doc:
        return ProjectionMeasure.from_density(_parse_operator(doc["density"], "/density", cfg), contexts)
    mu = ProjectionMeasure()
    for k, entry in enumerate(doc["entries"]):
        pointer = f"/entries/{k}/projection"
        try:
            p = Projection.from_matrix(matrix_from_rows(entry["projection"], pointer), cfg)
        except InvariantError as exc:
            raise InputError(str(exc), pointer) from None
        mu.set(p, entry["value"])
    return mu


def parse_state(doc, cfg: ToleranceConfig = DEFAULT_TOLERANCES, base: Path | None = None) -> ContextState:
    validate_document(doc, "state")
    ctx = _context_from_doc(doc["context"], "/context", base, cfg)
    try:
        return ContextState(ctx, doc["weights"])
    except InvariantError as exc:
        raise InputError(str(exc), "/weights") from None


# --- encoding --------------------------------------------------------------------

def clean_float(x: float, digits: int = 12) -> float:
    return round(float(x), digits) + 0.0


def encode_matrix(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[clean_float(z.real), clean_float(z.imag)] for z in row] for row in m]


def encode_reals(values) -> list:
    return [clean_float(v) for v in np.asarray(values, dtype=float).ravel()]


def encode_context(ctx: AbelianContext) -> dict:
    return {"projections": [encode_matrix(p.matrix) for p in ctx.atoms]}


def dumps(report: dict) -> str:
    """Deterministic JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
