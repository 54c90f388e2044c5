"""Sheaf documents (JSON) and machine-readable run reports.

Documents are canonical: elements in declaration order, covers sorted by
element indices, map keys sorted lexicographically, rational scalars in lowest
terms.  Reports print floats with 17 significant digits so identical inputs
produce byte-identical output.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction

from .errors import ParseError, SchemaError
from .linalg import FieldTag, Matrix, PRIME, QQ, RATIONALS, REALS, RR, prime_field
from .poset import Poset, build_poset
from .sheaf import Sheaf, build_sheaf


def field_to_string(field: FieldTag) -> str:
    return str(field)


def field_from_string(text: str) -> FieldTag:
    if text == "Q":
        return QQ
    if text == "R":
        return RR
    if text.startswith("Fp:"):
        try:
            p = int(text[3:])
        except ValueError:
            raise SchemaError(f"field: bad prime in {text!r}") from None
        return prime_field(p)
    raise SchemaError(f"field: unknown field {text!r}")


def scalar_to_string(value, field: FieldTag) -> str:
    if field.kind == RATIONALS:
        return str(value)
    if field.kind == PRIME:
        return str(int(value))
    return format(float(value), ".17g")


def scalar_from_string(text: str, field: FieldTag):
    try:
        if field.kind == RATIONALS:
            return Fraction(str(text))
        if field.kind == PRIME:
            return int(str(text), 10) % field.p
        return float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"maps: bad scalar literal {text!r}: {exc}") from None


# ---------------------------------------------------------------------------
# Canonical JSON emitter: insertion-ordered objects, floats at 17 significant
# digits, no whitespace surprises.
# ---------------------------------------------------------------------------

def _emit(obj, out: list[str]):
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        if obj != obj or obj in (float("inf"), float("-inf")):
            raise SchemaError("reports cannot contain non-finite floats")
        out.append(format(obj, ".17g"))
    elif isinstance(obj, dict):
        out.append("{")
        first = True
        for key, value in obj.items():
            if not first:
                out.append(",")
            first = False
            out.append(json.dumps(str(key)))
            out.append(":")
            _emit(value, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        first = True
        for value in obj:
            if not first:
                out.append(",")
            first = False
            _emit(value, out)
        out.append("]")
    else:
        raise SchemaError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj) -> str:
    out: list[str] = []
    _emit(obj, out)
    return "".join(out)


def inputs_digest(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()


# ---------------------------------------------------------------------------
# Sheaf documents.
# ---------------------------------------------------------------------------

def parse_document(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise SchemaError("document root must be an object")
    return doc


def _require(doc: dict, key: str):
    if key not in doc:
        raise SchemaError(f"missing key {key!r}")
    return doc[key]


def parse_sheaf(text: str) -> Sheaf:
    """Parse and validate a sheaf document; lossless against serialize_sheaf."""
    doc = parse_document(text)
    field = field_from_string(str(_require(doc, "field")))
    elements = _require(doc, "elements")
    if not isinstance(elements, list) or not all(isinstance(e, str) for e in elements):
        raise SchemaError("elements: must be an array of strings")
    for e in elements:
        if "<" in e or not e:
            raise SchemaError(f"elements: bad identifier {e!r}")
    covers = _require(doc, "covers")
    if not isinstance(covers, list) or not all(
        isinstance(c, list) and len(c) == 2 for c in covers
    ):
        raise SchemaError("covers: must be an array of [a, b] pairs")
    poset = build_poset(elements, [(c[0], c[1]) for c in covers])
    stalks_doc = _require(doc, "stalks")
    if not isinstance(stalks_doc, dict):
        raise SchemaError("stalks: must be an object")
    stalks = {}
    for e in elements:
        if e not in stalks_doc:
            raise SchemaError(f"stalks: missing {e}")
        dim = stalks_doc[e]
        if not isinstance(dim, int) or dim < 0:
            raise SchemaError(f"stalks: bad dimension for {e}")
        stalks[e] = dim
    for key in stalks_doc:
        if key not in stalks:
            raise SchemaError(f"stalks: unknown element {key}")
    maps_doc = _require(doc, "maps")
    if not isinstance(maps_doc, dict):
        raise SchemaError("maps: must be an object")
    hasse = set(poset.hasse_edges())
    maps = {}
    for key, entries in maps_doc.items():
        if key.count("<") != 1:
            raise SchemaError(f"maps: bad key {key!r}")
        a, b = key.split("<")
        if (a, b) not in hasse:
            raise SchemaError(f"maps: {key} is not a Hasse edge")
        rows, cols = stalks[b], stalks[a]
        if not isinstance(entries, list) or len(entries) != rows * cols:
            raise SchemaError(
                f"maps: {key} needs {rows * cols} row-major entries"
            )
        scalars = [scalar_from_string(x, field) for x in entries]
        data = [scalars[r * cols:(r + 1) * cols] for r in range(rows)]
        maps[(a, b)] = Matrix(rows, cols, data, field)
    for (a, b) in hasse:
        if (a, b) not in maps:
            raise SchemaError(f"maps: missing {a}<{b}")
    return build_sheaf(poset, stalks, maps, field)


def serialize_sheaf(s: Sheaf) -> str:
    """Canonical document text (with a trailing newline)."""
    poset = s.poset
    index = {e: i for i, e in enumerate(poset.elements)}
    covers = sorted(poset.hasse_edges(), key=lambda ab: (index[ab[0]], index[ab[1]]))
    doc = {
        "field": field_to_string(s.field),
        "elements": list(poset.elements),
        "covers": [[a, b] for (a, b) in covers],
        "stalks": {e: s.stalk(e) for e in poset.elements},
        "maps": {
            f"{a}<{b}": [
                scalar_to_string(v, s.field)
                for row in s.edge_map[(a, b)].data
                for v in row
            ]
            for (a, b) in sorted(s.edge_map, key=lambda ab: f"{ab[0]}<{ab[1]}")
        },
    }
    return canonical_json(doc) + "\n"


def poset_from_document(text: str) -> Poset:
    doc = parse_document(text)
    elements = _require(doc, "elements")
    covers = _require(doc, "covers")
    return build_poset(elements, [(c[0], c[1]) for c in covers])
