"""Document format: canonical JSON serialization of algebras, morphisms and
pseudo-isotopies, with located parse diagnostics.

Rationals are encoded as strings "p/q" (or "p"), labels as [energy, maslov]
pairs, operation entries as sorted sparse lists.  Serialization is canonical:
parse followed by serialize is byte-identical on canonical documents, and any
accepted document serializes to the canonical form.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .novikov import (MonoidElement, DiscreteMonoid, ZERO_BETA,
                      serialize_scalar, parse_scalar)
from .graded import GradedSpace, Pairing, MultiOp
from .ainf import FilteredAinfAlgebra, AinfMorphism
from .polyval import PiecewisePoly, PiecewiseBiPoly
from .isotopy import PseudoIsotopy, PseudoIsotopy2
from .deform import BoundingData, DivisorPairingData

FORMAT = "cyclainf/1"


class DocumentError(ValueError):
    """Parse or validation failure with the offending field path."""

    def __init__(self, message, where=""):
        self.where = where
        self.message = message
        super().__init__("%s: %s" % (where, message) if where else message)


def _frac(text, where):
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError):
        raise DocumentError("not a rational 'p/q': %r" % (text,), where)


def _q(x):
    return str(Fraction(x))


def _label(pair, where):
    if not isinstance(pair, (list, tuple)) or len(pair) != 2:
        raise DocumentError("label must be [energy, maslov]", where)
    energy = _frac(pair[0], where)
    try:
        maslov = int(pair[1])
    except (TypeError, ValueError):
        raise DocumentError("maslov must be an integer", where)
    try:
        return MonoidElement(energy, maslov)
    except ValueError as e:
        raise DocumentError(str(e), where)  # e.g. "maslov index must be even"


def _label_out(beta):
    return [_q(beta.energy), beta.maslov]


def _get(doc, key, where, types=None):
    if key not in doc:
        raise DocumentError("missing field '%s'" % key, where)
    val = doc[key]
    if types is not None and not isinstance(val, types):
        raise DocumentError("field '%s' has wrong type" % key, where)
    return val


# -- entry values in the four coefficient rings -------------------------------


def _poly_out(coeffs):
    return [_q(c) for c in coeffs]


def _pp_out(pp):
    pp = pp.simplify()
    return {"breaks": [_q(b) for b in pp.breaks],
            "pieces": [_poly_out(p) for p in pp.pieces]}


def _pp_in(d, where):
    breaks = [_frac(b, where) for b in _get(d, "breaks", where, list)]
    pieces = [[_frac(c, where) for c in p]
              for p in _get(d, "pieces", where, list)]
    try:
        return PiecewisePoly(breaks, pieces)
    except ValueError as e:
        raise DocumentError(str(e), where)


def _bp_out(bp):
    return {"t_breaks": [_q(b) for b in bp.t_breaks],
            "s_breaks": [_q(b) for b in bp.s_breaks],
            "pieces": [[sorted([i, j, _q(c)] for (i, j), c in cell.items())
                        for cell in row] for row in bp.pieces]}


def _bp_in(d, where):
    tb = [_frac(b, where) for b in _get(d, "t_breaks", where, list)]
    sb = [_frac(b, where) for b in _get(d, "s_breaks", where, list)]
    pieces = []
    for row in _get(d, "pieces", where, list):
        pieces.append([{(int(i), int(j)): _frac(c, where) for i, j, c in cell}
                       for cell in row])
    try:
        return PiecewiseBiPoly(tb, sb, pieces)
    except ValueError as e:
        raise DocumentError(str(e), where)


_VALUE_CODECS = {
    "rational": (_q, _frac),
    "poly-t": (_pp_out, _pp_in),
    "poly-ts": (_bp_out, _bp_in),
}


# -- operation blocks ----------------------------------------------------------


def _ops_out(space, ops, value_kind):
    enc = _VALUE_CODECS[value_kind][0]
    blocks = []
    for (k, beta) in sorted(ops, key=lambda kb: (kb[0], kb[1].sort_key())):
        op = ops[(k, beta)]
        entries = []
        for key in sorted(op.entries):
            vec = op.entries[key]
            row = [[space.names[i], enc(vec[i])] for i in sorted(vec)]
            entries.append([[space.names[i] for i in key], row])
        blocks.append({"k": k, "beta": _label_out(beta), "entries": entries})
    return blocks


def _ops_in(space, blocks, kind, value_kind, where):
    dec = _VALUE_CODECS[value_kind][1]
    ops = {}
    for n, block in enumerate(blocks):
        here = "%s[%d]" % (where, n)
        k = _get(block, "k", here, int)
        beta = _label(_get(block, "beta", here), here + ".beta")
        op = MultiOp(k, beta, kind, {})
        for key_names, row in _get(block, "entries", here, list):
            if len(key_names) != k:
                raise DocumentError("entry key arity != k", here)
            try:
                key = tuple(space.index[nm] for nm in key_names)
                vec = {space.index[nm]: dec(v, here) for nm, v in row}
            except KeyError as e:
                raise DocumentError("unknown basis name %s" % e, here)
            if key in op.entries:
                raise DocumentError("duplicate entry key %s" % (key_names,),
                                    here)
            op.entries[key] = vec
        if (k, beta) in ops:
            raise DocumentError("duplicate operation block (k, beta)", here)
        ops[(k, beta)] = op
    return ops


# -- shared header --------------------------------------------------------------


def _header_out(space, pairing, monoid, e_cut, unit):
    return {
        "format": FORMAT,
        "space": {"basis": [[nm, d] for nm, d in zip(space.names,
                                                     space.degrees)],
                  "ambient_degree": space.ambient_degree},
        "pairing": [[_q(x) for x in row] for row in pairing.matrix],
        "monoid": [_label_out(g) for g in monoid.generators],
        "e_cut": _q(e_cut),
        "unit": None if unit is None else space.names[unit],
    }


def _header_in(doc, where):
    sp_doc = _get(doc, "space", where, dict)
    basis = _get(sp_doc, "basis", where + ".space", list)
    try:
        space = GradedSpace([(nm, int(d)) for nm, d in basis],
                            _get(sp_doc, "ambient_degree", where + ".space"))
    except (TypeError, ValueError) as e:
        raise DocumentError(str(e), where + ".space")
    matrix = _get(doc, "pairing", where, list)
    if len(matrix) != space.dim or any(len(r) != space.dim for r in matrix):
        raise DocumentError("pairing matrix must be %d x %d"
                            % (space.dim, space.dim), where + ".pairing")
    pairing = Pairing(space, [[_frac(x, where + ".pairing") for x in row]
                              for row in matrix])
    gens = [_label(g, "%s.monoid[%d]" % (where, n))
            for n, g in enumerate(_get(doc, "monoid", where, list))]
    try:
        monoid = DiscreteMonoid(gens)
    except ValueError as e:
        raise DocumentError(str(e), where + ".monoid")
    e_cut = _frac(_get(doc, "e_cut", where), where + ".e_cut")
    unit_name = doc.get("unit")
    unit = None
    if unit_name is not None:
        if unit_name not in space.index:
            raise DocumentError("unknown basis name %r" % unit_name,
                                where + ".unit")
        unit = space.index[unit_name]
    return space, pairing, monoid, e_cut, unit


# -- optional deformation blocks -------------------------------------------------


def _divisor_out(space, d):
    return {"values": sorted([_label_out(beta), space.names[i], g]
                             for (beta, i), g in d.values.items())}


def _divisor_in(space, monoid, e_cut, block, where):
    values = {}
    for n, item in enumerate(_get(block, "values", where, list)):
        here = "%s.values[%d]" % (where, n)
        if len(item) != 3:
            raise DocumentError("expected [beta, name, integer]", here)
        beta = _label(item[0], here)
        name = item[1]
        if name not in space.index:
            raise DocumentError("unknown basis name %r" % name, here)
        values[(beta, space.index[name])] = int(item[2])
    try:
        return DivisorPairingData(monoid, values, e_cut=e_cut)
    except ValueError as e:
        raise DocumentError(str(e), where)


def _bounding_out(space, b):
    return {"divisor": {space.names[i]: serialize_scalar(c)
                        for i, c in b.divisor.items()},
            "high": {space.names[i]: serialize_scalar(c)
                     for i, c in b.high.items()}}


def _bounding_in(space, block, where):
    parts = {}
    for part in ("divisor", "high"):
        coeffs = {}
        for name, text in block.get(part, {}).items():
            if name not in space.index:
                raise DocumentError("unknown basis name %r" % name,
                                    "%s.%s" % (where, part))
            try:
                coeffs[space.index[name]] = parse_scalar(text)
            except ValueError as e:
                raise DocumentError(str(e), "%s.%s.%s" % (where, part, name))
        parts[part] = coeffs
    try:
        return BoundingData(space, parts["divisor"], parts["high"])
    except ValueError as e:
        raise DocumentError(str(e), where)


# -- top-level documents ----------------------------------------------------------


def algebra_to_doc(algebra, divisor=None, bounding=None):
    doc = _header_out(algebra.space, algebra.pairing, algebra.monoid,
                      algebra.e_cut, algebra.unit)
    doc["kind"] = "algebra"
    doc["ops"] = _ops_out(algebra.space, algebra.ops, "rational")
    if divisor is not None:
        doc["divisor"] = _divisor_out(algebra.space, divisor)
    if bounding is not None:
        doc["bounding"] = _bounding_out(algebra.space, bounding)
    return doc


def isotopy_to_doc(iso):
    doc = _header_out(iso.space, iso.pairing, iso.monoid, iso.e_cut, iso.unit)
    doc["kind"] = "isotopy"
    doc["structure"] = _ops_out(iso.space, iso.m_ops, "poly-t")
    doc["connection"] = _ops_out(iso.space, iso.c_ops, "poly-t")
    return doc


def isotopy2_to_doc(pi2):
    doc = _header_out(pi2.space, pi2.pairing, pi2.monoid, pi2.e_cut, pi2.unit)
    doc["kind"] = "isotopy2"
    doc["structure"] = _ops_out(pi2.space, pi2.m_ops, "poly-ts")
    doc["connection_t"] = _ops_out(pi2.space, pi2.c_ops, "poly-ts")
    doc["connection_s"] = _ops_out(pi2.space, pi2.d_ops, "poly-ts")
    doc["mixed"] = _ops_out(pi2.space, pi2.e_ops, "poly-ts")
    return doc


def morphism_to_doc(f):
    doc = algebra_to_doc(f.source)
    doc["kind"] = "morphism"
    doc["target_ops"] = _ops_out(f.target.space, f.target.ops, "rational")
    doc["maps"] = _ops_out(f.source.space, f.maps, "rational")
    return doc


def doc_to_objects(doc, where="document"):
    """Dispatch a parsed JSON object to the structures it describes.

    Returns (kind, main object, {optional blocks})."""
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object", where)
    fmt = _get(doc, "format", where)
    if fmt != FORMAT:
        raise DocumentError("unsupported format %r (expected %r)"
                            % (fmt, FORMAT), where + ".format")
    kind = _get(doc, "kind", where)
    space, pairing, monoid, e_cut, unit = _header_in(doc, where)
    extras = {}

    def build(cls, *op_fields):
        kinds = {"ops": "structure-map", "structure": "structure-map",
                 "connection": "morphism-map", "connection_t": "morphism-map",
                 "connection_s": "morphism-map", "mixed": "homotopy-map"}
        vk = {"algebra": "rational", "isotopy": "poly-t",
              "isotopy2": "poly-ts"}[kind]
        stores = [_ops_in(space, _get(doc, f, where, list), kinds[f], vk,
                          where + "." + f) for f in op_fields]
        try:
            return cls(space, pairing, monoid, e_cut, *stores, unit=unit)
        except ValueError as e:
            raise DocumentError(str(e), where)

    if kind == "algebra":
        try:
            obj = FilteredAinfAlgebra(
                space, pairing, monoid, e_cut,
                _ops_in(space, _get(doc, "ops", where, list),
                        "structure-map", "rational", where + ".ops"),
                unit)
        except ValueError as e:
            raise DocumentError(str(e), where)
        if "divisor" in doc:
            extras["divisor"] = _divisor_in(space, monoid, e_cut, doc["divisor"],
                                            where + ".divisor")
        if "bounding" in doc:
            extras["bounding"] = _bounding_in(space, doc["bounding"],
                                              where + ".bounding")
    elif kind == "isotopy":
        obj = build(PseudoIsotopy, "structure", "connection")
    elif kind == "isotopy2":
        obj = build(PseudoIsotopy2, "structure", "connection_t",
                    "connection_s", "mixed")
    elif kind == "morphism":
        try:
            source = FilteredAinfAlgebra(
                space, pairing, monoid, e_cut,
                _ops_in(space, _get(doc, "ops", where, list),
                        "structure-map", "rational", where + ".ops"), unit)
            target = FilteredAinfAlgebra(
                space, pairing, monoid, e_cut,
                _ops_in(space, _get(doc, "target_ops", where, list),
                        "structure-map", "rational", where + ".target_ops"),
                unit)
            maps = _ops_in(space, _get(doc, "maps", where, list),
                           "morphism-map", "rational", where + ".maps")
            obj = AinfMorphism(source, target, maps, e_cut)
        except ValueError as e:
            raise DocumentError(str(e), where)
    else:
        raise DocumentError("unknown document kind %r" % kind, where + ".kind")
    return kind, obj, extras


def serialize_document(doc):
    """Canonical byte form: sorted keys, two-space indent, trailing newline."""
    return json.dumps(doc, sort_keys=True, indent=2,
                      separators=(",", ": ")) + "\n"


def parse_document(text, where="document"):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentError("invalid JSON at line %d column %d: %s"
                            % (e.lineno, e.colno, e.msg), where)
    return doc_to_objects(doc, where)


def object_to_doc(kind, obj, extras=None):
    extras = extras or {}
    if kind == "algebra":
        return algebra_to_doc(obj, extras.get("divisor"),
                              extras.get("bounding"))
    if kind == "isotopy":
        return isotopy_to_doc(obj)
    if kind == "isotopy2":
        return isotopy2_to_doc(obj)
    if kind == "morphism":
        return morphism_to_doc(obj)
    raise ValueError("unknown kind %r" % kind)
