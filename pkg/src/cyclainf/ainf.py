"""Filtered A-infinity algebras with cyclic pairing: data and verifiers.

Operations are stored per label (k, beta) with exact rational entries; all
relation checks decompose per label, so every verdict is a finite exact
computation with no tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .novikov import ZERO_BETA, MonoidElement
from .graded import (
    MultiOp,
    insert_compose,
    koszul_sign,
    op_add_into,
    tensor_compose,
)


@dataclass
class Violation:
    check: str
    k: int
    beta: object
    where: tuple
    discrepancy: object

    def __str__(self):
        b = "(%s,%d)" % (self.beta.energy, self.beta.maslov) if self.beta is not None else "-"
        return "%s k=%s beta=%s at %s: %s" % (self.check, self.k, b, self.where, self.discrepancy)


@dataclass
class VerifyReport:
    name: str
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def lines(self):
        out = ["%s: %s" % (self.name, "ok" if self.ok else "FAILED (%d violations)" % len(self.violations))]
        out.extend("  " + str(v) for v in self.violations)
        return out

    def __str__(self):
        return "\n".join(self.lines())


class FilteredAinfAlgebra:
    """Gapped filtered A-infinity algebra modulo T^e_cut.

    ops maps (k, beta) -> MultiOp of kind "structure-map"; absent keys are
    zero. unit is a basis index or None.
    """

    def __init__(self, space, pairing, monoid, e_cut, ops, unit=None):
        self.space = space
        self.pairing = pairing
        self.monoid = monoid
        self.e_cut = Fraction(e_cut)
        self.unit = unit
        self.ops = {}
        allowed = set(monoid.enumerate(self.e_cut))
        for (k, beta), op in ops.items():
            if op.is_zero():
                continue
            if beta not in allowed:
                raise ValueError("operation label %s outside monoid window" % (beta,))
            if op.k != k or op.beta != beta:
                raise ValueError("operation key/label mismatch")
            self.ops[(k, beta)] = op

    def default_k_max(self):
        return self.space.dim + 2

    def op(self, k, beta):
        return self.ops.get((k, beta))

    def labels(self):
        return sorted(self.ops.keys(), key=lambda kb: (kb[0], kb[1].sort_key()))

    def max_arity(self):
        return max((k for k, _ in self.ops), default=0)


class AinfMorphism:
    """Filtered morphism; maps (k, beta) -> MultiOp of kind "morphism-map"."""

    def __init__(self, source, target, maps, e_cut=None):
        self.source = source
        self.target = target
        self.e_cut = Fraction(e_cut) if e_cut is not None else min(source.e_cut, target.e_cut)
        self.maps = {k: v for k, v in maps.items() if not v.is_zero()}

    def map(self, k, beta):
        return self.maps.get((k, beta))


# -- structure defects -------------------------------------------------------


def ainf_defect(ops, space, k, beta, kind="structure-map"):
    """Sum over splittings of the insertion composition at label (k, beta)."""
    defect = MultiOp(k, beta, kind, {})
    betas = _beta_splits(ops, beta)
    for b1, b2 in betas:
        for k2 in range(0, k + 1):
            k1 = k + 1 - k2
            inner = ops.get((k2, b2))
            outer = ops.get((k1, b1))
            if inner is None or outer is None:
                continue
            for pos in range(1, k1 + 1):
                op_add_into(defect, insert_compose(outer, inner, pos, space, kind))
    return defect


def _beta_splits(ops, beta):
    """(b1, b2) with b1 + b2 = beta, drawn from labels appearing in ops."""
    betas = sorted({b for _, b in ops}, key=MonoidElement.sort_key)
    out = []
    for b1 in betas:
        de = beta.energy - b1.energy
        dm = beta.maslov - b1.maslov
        if de < 0:
            continue
        b2 = MonoidElement(de, dm)
        if b2 in {b for b in betas}:
            out.append((b1, b2))
    return out


def verify_ainf(algebra, k_max=None):
    """Degree discipline, strictness, and the quadratic relations per label."""
    A = algebra
    if k_max is None:
        k_max = A.default_k_max()
    report = VerifyReport("ainf")
    if A.op(0, ZERO_BETA) is not None:
        report.violations.append(Violation("strictness", 0, ZERO_BETA, (), "m_{0,(0,0)} != 0"))
    for (k, beta), op in A.ops.items():
        for key, out_i, c in op.check_degrees(A.space):
            names = tuple(A.space.names[i] for i in key)
            report.violations.append(
                Violation("degree", k, beta, names, {A.space.names[out_i]: c}))
    betas = A.monoid.enumerate(A.e_cut)
    for beta in betas:
        for k in range(0, k_max + 1):
            defect = ainf_defect(A.ops, A.space, k, beta)
            for key, vec in defect.entries.items():
                names = tuple(A.space.names[i] for i in key)
                disc = {A.space.names[i]: c for i, c in vec.items()}
                report.violations.append(Violation("ainf-relation", k, beta, names, disc))
    return report


def verify_cyclic(algebra, k_max=None):
    """<m_k(x_1..x_k), x_0> invariance under cyclic rotation (k >= 1).

    k = 0 components have no arguments to rotate; nothing to check there.
    """
    A = algebra
    if k_max is None:
        k_max = A.default_k_max()
    report = VerifyReport("cyclic")
    report.violations.extend(cyclic_violations(A.ops, A.space, A.pairing, k_max))
    return report


def cyclic_violations(ops, space, pairing, k_max, check_name="cyclic"):
    """Rotation-invariance violations for any family of stored operations."""
    sp = space
    out = []
    for (k, beta), op in ops.items():
        if k == 0 or k > k_max:
            continue
        candidates = set()
        for key, vec in op.entries.items():
            for out_i in vec:
                for x0 in pairing.partners(out_i):
                    full = (x0,) + key
                    for r in range(k + 1):
                        candidates.add(full[r:] + full[:r])
        for full in sorted(candidates):
            x0 = full[0]
            args = full[1:]
            lhs = _pair_op_value(op, pairing, args, x0)
            sd = tuple(sp.shifted_degree(i) for i in full)
            sign = koszul_sign(sd, "cyclic-rotation")
            # <m(x_1..x_k), x_0> = sign * <m(x_0..x_{k-1}), x_k>
            rhs_args = (x0,) + args[:-1]
            rhs = _pair_op_value(op, pairing, rhs_args, args[-1])
            disc = lhs - sign * rhs
            if disc:
                names = tuple(sp.names[i] for i in full)
                out.append(Violation(check_name, k, beta, names, disc))
    return out


def _pair_op_value(op, pairing, args, x0):
    vec = op.entries.get(tuple(args))
    if not vec:
        return Fraction(0)
    total = Fraction(0)
    for j, c in vec.items():
        p = pairing.matrix[j][x0]
        if p:
            total = total + c * p
    return total


def verify_unital(algebra, k_max=None):
    A = algebra
    if A.unit is None:
        return VerifyReport("unital", [Violation("unital", 0, None, (), "no unit declared")])
    if k_max is None:
        k_max = A.default_k_max()
    sp = A.space
    e = A.unit
    report = VerifyReport("unital")
    if sp.degree(e) != 0:
        report.violations.append(Violation("unit-degree", 0, None, (sp.names[e],), sp.degree(e)))
    m2 = A.op(2, ZERO_BETA) or MultiOp(2, ZERO_BETA, "structure-map", {})
    for x in range(sp.dim):
        left = dict(m2.entries.get((e, x), {}))
        left[x] = left.get(x, Fraction(0)) - 1
        left = {i: c for i, c in left.items() if c}
        if left:
            report.violations.append(Violation(
                "unital-left", 2, ZERO_BETA, (sp.names[e], sp.names[x]),
                {sp.names[i]: c for i, c in left.items()}))
        sgn = -1 if sp.degree(x) % 2 else 1
        right = dict(m2.entries.get((x, e), {}))
        right[x] = right.get(x, Fraction(0)) - sgn
        right = {i: c for i, c in right.items() if c}
        if right:
            report.violations.append(Violation(
                "unital-right", 2, ZERO_BETA, (sp.names[x], sp.names[e]),
                {sp.names[i]: c for i, c in right.items()}))
    for (k, beta), op in A.ops.items():
        if (k, beta) == (2, ZERO_BETA) or k > k_max:
            continue
        for key, vec in op.entries.items():
            if e in key and vec:
                names = tuple(sp.names[i] for i in key)
                report.violations.append(Violation(
                    "unital-higher", k, beta, names,
                    {sp.names[i]: c for i, c in vec.items()}))
    return report


# -- morphisms ---------------------------------------------------------------


def _component_sequences(maps, k, beta, min_parts=1):
    """All sequences of stored morphism components with total arity k and
    total label <= beta (energywise); yields (sequence, remaining_beta)."""
    comps = sorted(maps.keys(), key=lambda kb: (kb[0], kb[1].sort_key()))
    out = []

    def rec(seq, arity_left, energy_left, maslov_acc):
        if seq:
            rest_m = beta.maslov - maslov_acc
            if arity_left == 0 and energy_left >= 0 and len(seq) >= min_parts:
                out.append((tuple(seq), energy_left, rest_m))
        for kb in comps:
            kk, bb = kb
            if kk > arity_left:
                continue
            if bb.energy > energy_left:
                continue
            if kk == 0 and bb.is_zero:
                continue
            seq.append(kb)
            rec(seq, arity_left - kk, energy_left - bb.energy, maslov_acc + bb.maslov)
            seq.pop()

    rec([], k, beta.energy, 0)
    return out


def morphism_defect(f, k, beta, k_max=None):
    """LHS - RHS of the filtered morphism relation at label (k, beta)."""
    src, tgt = f.source, f.target
    defect = MultiOp(k, beta, "morphism-map", {})
    # LHS: target operations applied to tensors of morphism components
    if k == 0:
        bare = tgt.op(0, beta)
        if bare is not None:
            op_add_into(defect, MultiOp(0, beta, "morphism-map", bare.entries))
    for seq, rest_e, rest_m in _component_sequences(f.maps, k, beta):
        if rest_e == 0 and rest_m % 2 != 0:
            continue
        try:
            b0 = MonoidElement(rest_e, rest_m)
        except ValueError:
            continue
        outer = tgt.op(len(seq), b0)
        if outer is None:
            continue
        inners = [f.maps[kb] for kb in seq]
        op_add_into(defect, tensor_compose(outer, inners, src.space, "morphism-map"))
    # RHS: morphism components absorbing one source operation
    for (k1, b1), fcomp in f.maps.items():
        for (k2, b2), inner in src.ops.items():
            if k1 + k2 - 1 != k:
                continue
            if b1.energy + b2.energy != beta.energy or b1.maslov + b2.maslov != beta.maslov:
                continue
            for pos in range(1, k1 + 1):
                op_add_into(defect, insert_compose(fcomp, inner, pos, src.space, "morphism-map"), -1)
    return defect


def verify_morphism(f, k_max=None):
    if k_max is None:
        k_max = max(f.source.default_k_max(), f.target.default_k_max())
    report = VerifyReport("morphism")
    if f.map(0, ZERO_BETA) is not None:
        report.violations.append(Violation("strictness", 0, ZERO_BETA, (), "f_{0,(0,0)} != 0"))
    for (k, beta), op in f.maps.items():
        for key, out_i, c in op.check_degrees(f.source.space, f.target.space):
            names = tuple(f.source.space.names[i] for i in key)
            report.violations.append(Violation("degree", k, beta, names,
                                               {f.target.space.names[out_i]: c}))
    betas = f.source.monoid.enumerate(f.e_cut)
    for beta in betas:
        for k in range(0, k_max + 1):
            defect = morphism_defect(f, k, beta, k_max)
            for key, vec in defect.entries.items():
                names = tuple(f.source.space.names[i] for i in key)
                disc = {f.target.space.names[i]: c for i, c in vec.items()}
                report.violations.append(Violation("morphism-relation", k, beta, names, disc))
    return report


def verify_cyclic_morphism(f, k_max=None):
    """Pairing preservation: arity-1 on the nose, higher pairs sum to zero."""
    src, tgt = f.source, f.target
    report = VerifyReport("cyclic-morphism")
    f1 = f.map(1, ZERO_BETA) or MultiOp(1, ZERO_BETA, "morphism-map", {})
    for x in range(src.space.dim):
        for y in range(src.space.dim):
            fx = f1.entries.get((x,), {})
            fy = f1.entries.get((y,), {})
            lhs = tgt.pairing.pair_vectors(fx, fy)
            rhs = src.pairing.matrix[x][y]
            if lhs != rhs:
                report.violations.append(Violation(
                    "pairing-preserved", 1, ZERO_BETA,
                    (src.space.names[x], src.space.names[y]), lhs - rhs))
    # candidate (k, beta, tuple) triples from pairs of stored components
    candidates = set()
    comps = list(f.maps.items())
    for (k1, b1), op1 in comps:
        for (k2, b2), op2 in comps:
            k = k1 + k2
            e = b1.energy + b2.energy
            m = b2.maslov + b1.maslov
            if e >= f.e_cut:
                continue
            beta = MonoidElement(e, m)
            if k == 2 and beta.is_zero:
                continue
            for key1 in op1.entries:
                for key2 in op2.entries:
                    candidates.add((k, beta, key1 + key2))
    for k, beta, key in sorted(candidates, key=lambda t: (t[0], t[1].sort_key(), t[2])):
        total = Fraction(0)
        for k1 in range(0, k + 1):
            k2 = k - k1
            for (kk1, b1), op1 in comps:
                if kk1 != k1 or b1.energy > beta.energy:
                    continue
                b2e = beta.energy - b1.energy
                b2m = beta.maslov - b1.maslov
                op2 = f.maps.get((k2, MonoidElement(b2e, b2m))) if b2e >= 0 else None
                if op2 is None:
                    continue
                v1 = op1.entries.get(key[:k1])
                v2 = op2.entries.get(key[k1:])
                if v1 and v2:
                    total += tgt.pairing.pair_vectors(v1, v2)
        if total:
            names = tuple(src.space.names[i] for i in key)
            report.violations.append(Violation("cyclic-morphism", k, beta, names, total))
    return report


def compose_morphisms(g, f):
    """g after f, by summing g-components over tensors of f-components."""
    mid, src = f.target.space, g.source.space
    if mid is not src and (mid.names, mid.degrees) != (src.names, src.degrees):
        raise ValueError("morphisms are not composable")
    e_cut = min(f.e_cut, g.e_cut)
    maps = {}
    betas = f.source.monoid.enumerate(e_cut)
    k_max = max(k for k, _ in f.maps) if f.maps else 0
    arity_cap = k_max * max((k for k, _ in g.maps), default=1)
    for beta in betas:
        for k in range(0, arity_cap + 1):
            acc = MultiOp(k, beta, "morphism-map", {})
            if k == 0:
                bare = g.maps.get((0, beta))
                if bare is not None:
                    op_add_into(acc, bare)
            for seq, rest_e, rest_m in _component_sequences(f.maps, k, beta):
                if rest_e == 0 and rest_m % 2 != 0:
                    continue
                try:
                    b0 = MonoidElement(rest_e, rest_m)
                except ValueError:
                    continue
                outer = g.maps.get((len(seq), b0))
                if outer is None:
                    continue
                inners = [f.maps[kb] for kb in seq]
                op_add_into(acc, tensor_compose(outer, inners, f.source.space, "morphism-map"))
            if not acc.is_zero():
                maps[(k, beta)] = acc
    return AinfMorphism(f.source, g.target, maps, e_cut)


def convert_pairing_convention(pairing, direction="angle-to-paren"):
    """Switch between <.,.> and (.,.) = (-1)^{deg u}<u,v>.

    The same diagonal factor implements both directions; the parameter is
    kept explicit so call sites document which convention they hold.
    """
    if direction not in ("angle-to-paren", "paren-to-angle"):
        raise ValueError("unknown direction %r" % direction)
    from .graded import Pairing

    sp = pairing.space
    matrix = []
    for i in range(sp.dim):
        sgn = -1 if sp.degree(i) % 2 else 1
        matrix.append([sgn * x for x in pairing.matrix[i]])
    return Pairing(sp, matrix)
