"""Graded spaces, pairings, multilinear operations and the sign engine.

All degree bookkeeping runs through the shifted degree deg'(x) = deg(x) - 1;
operations are stored as sparse maps on basis tuples and their coefficient
entries may live in any commutative ring exposing +, -, * and truthiness
(Fraction, piecewise polynomials, Novikov scalars).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .novikov import MonoidElement, ZERO_BETA


class GradedSpace:
    """Finite free graded module with named basis and ambient degree n."""

    def __init__(self, basis, ambient_degree):
        # basis: list of (name, degree)
        names = [b[0] for b in basis]
        if len(set(names)) != len(names):
            raise ValueError("basis names must be distinct")
        self.names = names
        self.degrees = [int(b[1]) for b in basis]
        self.ambient_degree = int(ambient_degree)
        self.index = {name: i for i, name in enumerate(names)}

    @property
    def dim(self):
        return len(self.names)

    def degree(self, i):
        return self.degrees[i]

    def shifted_degree(self, i):
        return self.degrees[i] - 1

    def __repr__(self):
        return "GradedSpace(%s, n=%d)" % (list(zip(self.names, self.degrees)), self.ambient_degree)


# -- sign engine -----------------------------------------------------------


def koszul_sign(shifted_degrees, rule, i=None, j=None):
    """Sign (+1/-1) for the standard manipulations, in terms of deg'.

    rule:
      "ainf-insertion"  -- inner operation inserted at slot i (1-based):
                           (-1)^(deg'x_1 + ... + deg'x_{i-1})
      "cyclic-rotation" -- rotate (x_1..x_k, x_0) to (x_0..x_{k-1}, x_k):
                           shifted_degrees given as (d'_0, d'_1, ..., d'_k);
                           (-1)^(d'_0 * (d'_1 + ... + d'_k))
      "pairing-swap"    -- <x,y> -> <y,x>: degrees (d'_x, d'_y);
                           (-1)^(1 + d'_x d'_y)
      "tensor-insertion"-- odd operator moved past the first i-1 inputs:
                           same exponent as ainf-insertion
    """
    if rule in ("ainf-insertion", "tensor-insertion"):
        if i is None:
            raise ValueError("insertion rules need slot i")
        e = sum(shifted_degrees[: i - 1])
    elif rule == "cyclic-rotation":
        e = shifted_degrees[0] * sum(shifted_degrees[1:])
    elif rule == "pairing-swap":
        e = 1 + shifted_degrees[0] * shifted_degrees[1]
    else:
        raise ValueError("unknown sign rule %r" % rule)
    return -1 if e % 2 else 1


class Pairing:
    """Graded antisymmetric pairing supported on complementary degrees."""

    def __init__(self, space, matrix):
        self.space = space
        self.matrix = [[Fraction(x) for x in row] for row in matrix]

    def value(self, i, j):
        return self.matrix[i][j]

    def pair_vectors(self, u, v):
        """<u, v> for sparse vectors u, v (dict index -> coefficient)."""
        total = None
        for i, ci in u.items():
            if not ci:
                continue
            for j, cj in v.items():
                p = self.matrix[i][j]
                if p and cj:
                    term = ci * cj * p
                    total = term if total is None else total + term
        return total if total is not None else Fraction(0)

    def partners(self, i):
        """Indices j with <e_i, e_j> != 0."""
        return [j for j, p in enumerate(self.matrix[i]) if p]


def check_pairing_axioms(pairing):
    """Degree support, graded antisymmetry, nondegeneracy. Returns violations."""
    sp = pairing.space
    n = sp.ambient_degree
    out = []
    for i in range(sp.dim):
        for j in range(sp.dim):
            v = pairing.matrix[i][j]
            if v and sp.degree(i) + sp.degree(j) != n:
                out.append(("degree-support", sp.names[i], sp.names[j], v))
            swap = koszul_sign((sp.shifted_degree(i), sp.shifted_degree(j)), "pairing-swap")
            if pairing.matrix[i][j] != swap * pairing.matrix[j][i]:
                out.append(("antisymmetry", sp.names[i], sp.names[j],
                            pairing.matrix[i][j] - swap * pairing.matrix[j][i]))
    from . import rlinalg

    if rlinalg.rank(pairing.matrix) != sp.dim:
        out.append(("nondegenerate", None, None, None))
    return out


# -- multilinear operations -------------------------------------------------

# operation kinds and their deg' shifts relative to -maslov(beta):
#   structure-map : deg'(out) = sum deg'(in) + 1 - maslov
#   morphism-map  : deg'(out) = sum deg'(in) - maslov
#   homotopy-map  : deg'(out) = sum deg'(in) - 1 - maslov
KIND_SHIFT = {"structure-map": 1, "morphism-map": 0, "homotopy-map": -1}


@dataclass
class MultiOp:
    """Sparse k-ary operation labelled by a monoid element.

    entries maps an input basis tuple to a sparse output vector
    {basis index: coefficient}.
    """

    k: int
    beta: MonoidElement
    kind: str
    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KIND_SHIFT:
            raise ValueError("unknown operation kind %r" % self.kind)
        self.entries = {
            tuple(key): {i: c for i, c in vec.items() if c}
            for key, vec in self.entries.items()
            if any(vec.values())
        }

    def degree_shift(self):
        return KIND_SHIFT[self.kind] - self.beta.maslov

    def is_zero(self):
        return not self.entries

    def copy(self):
        return MultiOp(self.k, self.beta, self.kind,
                       {k: dict(v) for k, v in self.entries.items()})

    def check_degrees(self, space, out_space=None):
        """Entries violating deg'(out) = sum deg'(in) + shift."""
        if out_space is None:
            out_space = space
        bad = []
        shift = self.degree_shift()
        for key, vec in self.entries.items():
            want = sum(space.shifted_degree(i) for i in key) + shift
            for out_i, c in vec.items():
                if c and out_space.shifted_degree(out_i) != want:
                    bad.append((key, out_i, c))
        return bad


def vec_add_into(target, vec, scale=1):
    for i, c in vec.items():
        if not c:
            continue
        c = c if scale == 1 else (-c if scale == -1 else c * scale)
        if i in target:
            target[i] = target[i] + c
        else:
            target[i] = c


def vec_clean(vec):
    return {i: c for i, c in vec.items() if c}


def apply_multiop(op, space, args):
    """Apply to sparse-vector arguments with even-coefficient convention.

    Coefficients are assumed even (T and e carry even degree), so the
    multilinear extension introduces no Koszul signs.
    """
    if len(args) != op.k:
        raise ValueError("arity mismatch")
    out = {}
    for key, vec in op.entries.items():
        coeff = 1
        for slot, basis_i in enumerate(key):
            c = args[slot].get(basis_i)
            if not c:
                coeff = None
                break
            coeff = c if coeff == 1 else coeff * c
        if coeff is None:
            continue
        for i, c in vec.items():
            term = c if coeff == 1 else coeff * c
            if i in out:
                out[i] = out[i] + term
            else:
                out[i] = term
    return vec_clean(out)


def _entries_by_output(op):
    by_out = {}
    for key, vec in op.entries.items():
        for i, c in vec.items():
            if c:
                by_out.setdefault(i, []).append((key, c))
    return by_out


def insert_compose(outer, inner, pos, space, out_kind=None, signed=True):
    """outer(x_1,..., inner(x_pos,...), ..., x_k) with the insertion sign.

    pos is 1-based. Returns a MultiOp of arity outer.k + inner.k - 1 whose
    beta is outer.beta + inner.beta. The sign is
    (-1)^(deg'x_1 + ... + deg'x_{pos-1}); signed=False composes without it
    (even inner operation).
    """
    k_new = outer.k + inner.k - 1
    beta = outer.beta + inner.beta
    result = MultiOp(k_new, beta, out_kind or outer.kind, {})
    if outer.is_zero() or inner.is_zero():
        return result
    inner_by_out = _entries_by_output(inner)
    for key_o, vec_o in outer.entries.items():
        slot_index = key_o[pos - 1]
        hits = inner_by_out.get(slot_index)
        if not hits:
            continue
        sign_exp = sum(space.shifted_degree(i) for i in key_o[: pos - 1]) % 2 if signed else 0
        for key_i, c_i in hits:
            new_key = key_o[: pos - 1] + key_i + key_o[pos:]
            c = -c_i if sign_exp else c_i
            bucket = result.entries.setdefault(new_key, {})
            for out_i, c_o in vec_o.items():
                term = c * c_o
                if out_i in bucket:
                    bucket[out_i] = bucket[out_i] + term
                else:
                    bucket[out_i] = term
    result.entries = {k: vec_clean(v) for k, v in result.entries.items()}
    result.entries = {k: v for k, v in result.entries.items() if v}
    return result


def tensor_compose(outer, inners, space, out_kind, odd_slots=()):
    """outer(f_1(..), ..., f_l(..)) for a list of inner operations.

    odd_slots lists the 1-based positions of odd-degree inner operations;
    each such operation picks up the tensor-insertion sign over the inputs
    feeding the slots before it (Koszul for moving the operator past them).
    """
    if len(inners) != outer.k:
        raise ValueError("arity mismatch")
    k_new = sum(f.k for f in inners)
    beta = outer.beta
    for f in inners:
        beta = beta + f.beta
    result = MultiOp(k_new, beta, out_kind, {})
    if outer.is_zero() or any(f.is_zero() for f in inners):
        return result
    inners_by_out = [_entries_by_output(f) for f in inners]
    for key_o, vec_o in outer.entries.items():
        choices = []
        ok = True
        for slot in range(outer.k):
            hits = inners_by_out[slot].get(key_o[slot])
            if not hits:
                ok = False
                break
            choices.append(hits)
        if not ok:
            continue
        # product over independent slot choices
        stack = [((), 1)]
        for hits in choices:
            nstack = []
            for key_acc, c_acc in stack:
                for key_i, c_i in hits:
                    nstack.append((key_acc + (key_i,), c_acc * c_i))
            stack = nstack
        for keys, c in stack:
            sign_exp = 0
            if odd_slots:
                offset = 0
                prefix_deg = 0
                for slot in range(outer.k):
                    if (slot + 1) in odd_slots:
                        sign_exp += prefix_deg
                    prefix_deg += sum(space.shifted_degree(i) for i in keys[slot])
                    offset += len(keys[slot])
            new_key = tuple(i for key in keys for i in key)
            cc = -c if sign_exp % 2 else c
            bucket = result.entries.setdefault(new_key, {})
            for out_i, c_o in vec_o.items():
                term = cc * c_o
                if out_i in bucket:
                    bucket[out_i] = bucket[out_i] + term
                else:
                    bucket[out_i] = term
    result.entries = {k: vec_clean(v) for k, v in result.entries.items()}
    result.entries = {k: v for k, v in result.entries.items() if v}
    return result


def op_add_into(target, op, scale=1):
    """target += scale * op, entrywise (same arity/beta expected)."""
    for key, vec in op.entries.items():
        bucket = target.entries.setdefault(key, {})
        vec_add_into(bucket, vec, scale)
    target.entries = {k: vec_clean(v) for k, v in target.entries.items()}
    target.entries = {k: v for k, v in target.entries.items() if v}


def matrix_postcompose(matrix, op, out_kind=None):
    """Apply a degree-0 rational matrix to every output vector of op."""
    result = MultiOp(op.k, op.beta, out_kind or op.kind, {})
    n = len(matrix)
    for key, vec in op.entries.items():
        out = {}
        for j, c in vec.items():
            for i in range(n):
                m = matrix[i][j]
                if m and c:
                    term = m * c
                    if i in out:
                        out[i] = out[i] + term
                    else:
                        out[i] = term
        out = vec_clean(out)
        if out:
            result.entries[key] = out
    return result


def linear_op_from_matrix(matrix, kind, beta=ZERO_BETA):
    """Arity-1 MultiOp from a column-convention rational matrix."""
    op = MultiOp(1, beta, kind, {})
    n = len(matrix)
    cols = len(matrix[0]) if n else 0
    for j in range(cols):
        vec = {i: matrix[i][j] for i in range(n) if matrix[i][j]}
        if vec:
            op.entries[(j,)] = vec
    return op


def identity_op(space):
    op = MultiOp(1, ZERO_BETA, "morphism-map", {})
    for i in range(space.dim):
        op.entries[(i,)] = {i: Fraction(1)}
    return op
