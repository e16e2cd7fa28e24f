"""Bounding-cochain deformations, Maurer-Cartan evaluation, the divisor
exponential identity, and energy-shift coordinate changes.

Inserted coefficients are Novikov scalars; each monomial T^lam e^(mu/2) of a
coefficient is absorbed into the operation label, so deformed structure maps
keep exact rational entries over a monoid extended by the coefficient
monomials.  Inserted elements have even shifted degree, so insertions carry
no signs.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations, product
from math import factorial

from .novikov import (
    ZERO_BETA,
    DiscreteMonoid,
    MonoidElement,
    NovikovScalar,
    exp_scalar,
)
from .graded import MultiOp, op_add_into, vec_add_into, vec_clean
from .ainf import FilteredAinfAlgebra


class DivergentConfigurationError(ValueError):
    """An insertion sum with infinitely many terms below the cutoff."""


def _as_scalar(x):
    if isinstance(x, NovikovScalar):
        return x
    return NovikovScalar.from_rational(x)


class BoundingData:
    """Deformation element b = sum_i x_i e_i.

    The divisor part sits on degree-1 basis elements with grading-neutral
    coefficients; the high part sits on odd-degree >= 3 elements, with each
    coefficient monomial compensating the element's grading and carrying
    strictly positive energy.
    """

    def __init__(self, space, divisor=None, high=None):
        self.space = space
        self.divisor = {i: _as_scalar(c) for i, c in (divisor or {}).items()
                        if _as_scalar(c)}
        self.high = {i: _as_scalar(c) for i, c in (high or {}).items()
                     if _as_scalar(c)}
        for i, c in self.divisor.items():
            if space.degree(i) != 1:
                raise ValueError("divisor element %s must have degree 1"
                                 % space.names[i])
            if any(mu != 0 for _, mu, _ in c.terms):
                raise ValueError("divisor coefficients must be grading-neutral")
        for i, c in self.high.items():
            d = space.degree(i)
            if d < 3 or d % 2 == 0:
                raise ValueError("high element %s must have odd degree >= 3"
                                 % space.names[i])
            for lam, mu, _ in c.terms:
                if lam <= 0:
                    raise ValueError("high coefficients need positive valuation")
                if mu != 1 - d:
                    raise ValueError("high coefficient grading must compensate "
                                     "the element degree")

    def is_zero(self):
        return not self.divisor and not self.high

    def __add__(self, other):
        if other.space is not self.space:
            raise ValueError("mismatched spaces")
        div, high = dict(self.divisor), dict(self.high)
        for store, add in ((div, other.divisor), (high, other.high)):
            for i, c in add.items():
                store[i] = store.get(i, NovikovScalar.zero()) + c
        return BoundingData(self.space, div, high)


class DivisorPairingData:
    """Integer intersection numbers (beta, divisor index) -> int, additive
    in beta."""

    def __init__(self, monoid, values, e_cut=None):
        self.monoid = monoid
        self.values = {}
        for (beta, i), g in values.items():
            g = int(g)
            if g:
                self.values[(beta, i)] = g
        self.indices = sorted({i for (_, i) in self.values})
        window = monoid.enumerate(e_cut if e_cut is not None
                                  else _default_window(monoid))
        inside = set(window)
        for b1 in window:
            for b2 in window:
                tot = b1 + b2
                if tot not in inside:
                    continue
                for i in self.indices:
                    lhs = self.values.get((tot, i), 0)
                    rhs = (self.values.get((b1, i), 0)
                           + self.values.get((b2, i), 0))
                    if lhs != rhs:
                        raise ValueError("intersection numbers not additive "
                                         "at %s + %s" % (b1, b2))

    def pair(self, beta, i):
        return self.values.get((beta, i), 0)


def _default_window(monoid):
    gens = monoid.generators
    if not gens:
        return Fraction(1)
    return 2 * max(g.energy for g in gens) + 1


def _term_patterns(b, key, positions):
    """Ways to realise the inserted slots by coefficient monomials.

    Yields (label shift, rational factor) per choice of one monomial of the
    relevant coefficient for every inserted position."""
    per_slot = []
    for pos in positions:
        c = b.high[key[pos]]
        per_slot.append([(MonoidElement(lam, mu), q) for lam, mu, q in c.terms])
    for choice in product(*per_slot):
        shift = ZERO_BETA
        q = Fraction(1)
        for d, f in choice:
            shift = shift + d
            q = q * f
        yield shift, q


def deform_by_b(algebra, b):
    """Structure maps with the high part of b inserted in all slot patterns.

    Inserted slots consume their coefficient's Novikov monomial as a label
    shift, so the result is again gapped over an extended monoid.  Divisor
    coefficients are not insertable here (they carry no energy); use mc_value
    with DivisorPairingData for those.
    """
    if b.divisor:
        raise ValueError("zero-valuation insertion without divisor declaration")
    A = algebra
    gens = list(A.monoid.generators)
    for c in b.high.values():
        gens.extend(MonoidElement(lam, mu) for lam, mu, _ in c.terms)
    monoid = DiscreteMonoid(gens)

    new_ops = {}
    for (K, beta), op in A.ops.items():
        for key, vec in op.entries.items():
            slots = [pos for pos in range(K) if key[pos] in b.high]
            for m in range(len(slots) + 1):
                for subset in combinations(slots, m):
                    visible = tuple(key[pos] for pos in range(K)
                                    if pos not in subset)
                    for shift, q in _term_patterns(b, key, subset):
                        lab = beta + shift
                        if lab.energy >= A.e_cut:
                            continue
                        tgt = new_ops.setdefault(
                            (K - m, lab),
                            MultiOp(K - m, lab, "structure-map", {}))
                        acc = tgt.entries.setdefault(visible, {})
                        vec_add_into(acc, vec, q)
    for kb in list(new_ops):
        op = new_ops[kb]
        op.entries = {key: vec_clean(vec) for key, vec in op.entries.items()
                      if vec_clean(vec)}
        if op.is_zero():
            del new_ops[kb]
    return FilteredAinfAlgebra(A.space, A.pairing, monoid, A.e_cut,
                               new_ops, A.unit)


def check_divisor_property(algebra, d, m_bound=3, k_max=4):
    """The m-fold divisor-insertion resummation identity, as an identity in
    formal divisor coefficients.

    For every stored operation of arity k+m, the sum of its m-fold divisor
    insertions must equal the coefficient prod_i g_i^{m_i} / prod_i m_i!
    times the arity-k operation with the same label, per multiset of
    inserted indices."""
    from .ainf import VerifyReport, Violation

    A = algebra
    report = VerifyReport("divisor")
    div = set(d.indices)
    labels = {}
    for (K, beta), op in A.ops.items():
        labels.setdefault(beta, {})[K] = op
    for beta, by_k in labels.items():
        # the identity compares arity k+m with arity k, so it is only
        # checkable up to the largest arity stored for this label
        arity_top = max(by_k)
        for m in range(1, m_bound + 1):
            for k in range(0, k_max + 1):
                if k + m > arity_top:
                    continue
                big = by_k.get(k + m)
                base = by_k.get(k)
                lhs = {}
                if big is not None:
                    for key, vec in big.entries.items():
                        slots = [p for p in range(k + m) if key[p] in div]
                        for subset in combinations(slots, m):
                            visible = tuple(key[p] for p in range(k + m)
                                            if p not in subset)
                            inserted = tuple(sorted(key[p] for p in subset))
                            acc = lhs.setdefault((visible, inserted), {})
                            vec_add_into(acc, vec)
                rhs = {}
                if base is not None:
                    for key, vec in base.entries.items():
                        for inserted in combinations_with_repetition(
                                sorted(div), m):
                            counts = {}
                            for i in inserted:
                                counts[i] = counts.get(i, 0) + 1
                            q = Fraction(1)
                            for i, c in counts.items():
                                q *= Fraction(d.pair(beta, i) ** c,
                                              factorial(c))
                            if q:
                                acc = rhs.setdefault((key, inserted), {})
                                vec_add_into(acc, vec, q)
                for pat in set(lhs) | set(rhs):
                    diff = dict(lhs.get(pat, {}))
                    vec_add_into(diff, rhs.get(pat, {}), -1)
                    diff = vec_clean(diff)
                    if diff:
                        visible, inserted = pat
                        names = (tuple(A.space.names[i] for i in visible)
                                 + tuple("ins:" + A.space.names[i]
                                         for i in inserted))
                        report.violations.append(Violation(
                            "divisor-identity", k, beta, names,
                            {"m": m,
                             "mismatch": {A.space.names[i]: c
                                          for i, c in diff.items()}}))
    return report


def combinations_with_repetition(items, m):
    if m == 0:
        yield ()
        return
    for idx, it in enumerate(items):
        for rest in combinations_with_repetition(items[idx:], m - 1):
            yield (it,) + rest


def mc_value(algebra, b, divisor_data=None, delta=None):
    """sum_{k,beta} m_{k,beta}(b, ..., b), truncated at the energy cutoff.

    The high part is inserted term by term; divisor insertions are resummed
    in closed form through the exponential of sum_i (dbeta . e_i) x_i, which
    requires intersection data whose identity holds on the algebra.  Returns
    a sparse vector of Novikov scalars."""
    A = algebra
    if delta is None:
        me = A.monoid.min_energy()
        delta = me / 2 if me is not None else Fraction(1, 2)
    if b.divisor:
        if divisor_data is None:
            raise DivergentConfigurationError(
                "zero-valuation divisor coefficient with unverified "
                "divisor property")
        if check_divisor_property(A, divisor_data).violations:
            raise DivergentConfigurationError(
                "divisor identity fails on this algebra")
        for i, c in b.divisor.items():
            v = c.valuation()
            if v is not None and v <= -delta:
                raise DivergentConfigurationError(
                    "divisor coefficient valuation outside (-delta, delta)")

    out = {}
    for (K, beta), op in A.ops.items():
        factor = NovikovScalar.one()
        if b.divisor:
            arg = NovikovScalar.zero()
            for i, c in b.divisor.items():
                g = divisor_data.pair(beta, i)
                if g:
                    arg = arg + c.scale(g)
            if not arg.is_zero():
                v = arg.valuation()
                if v is None or v <= 0:
                    raise DivergentConfigurationError(
                        "exponent argument at %s has nonpositive valuation"
                        % (beta,))
                factor = exp_scalar(arg, cutoff=A.e_cut - beta.energy)
        for key, vec in op.entries.items():
            if any(i not in b.high for i in key):
                continue
            coeff = factor
            for i in key:
                coeff = coeff * b.high[i]
            coeff = coeff.truncate(A.e_cut - beta.energy)
            if coeff.is_zero():
                continue
            for i, c in vec.items():
                w = (coeff * c).shift(beta.energy, beta.maslov)
                w = w.truncate(A.e_cut)
                if not w.is_zero():
                    out[i] = out.get(i, NovikovScalar.zero()) + w
    return {i: c for i, c in out.items() if not c.is_zero()}


def energy_shift(algebra, d, c):
    """Reweight every label by T^(sum_i c_i (dbeta . e_i)).

    c maps divisor index -> rational shift.  Additivity of the intersection
    numbers makes the shifted labels a monoid again."""
    A = algebra
    c = {i: Fraction(q) for i, q in c.items()}

    def shifted(beta):
        extra = sum((q * d.pair(beta, i) for i, q in c.items()), Fraction(0))
        e = beta.energy + extra
        if e < 0:
            raise ValueError("negative shifted energy at %s" % (beta,))
        return MonoidElement(e, beta.maslov)

    gens = []
    for g in A.monoid.generators:
        sg = shifted(g)
        if sg.energy <= 0:
            raise ValueError("generator %s loses its energy gap" % (g,))
        gens.append(sg)
    monoid = DiscreteMonoid(gens)
    ops = {}
    for (k, beta), op in A.ops.items():
        lab = shifted(beta)
        if lab.energy >= A.e_cut:
            continue
        moved = MultiOp(k, lab, op.kind, op.entries)
        prev = ops.get((k, lab))
        if prev is None:
            ops[(k, lab)] = moved
        else:
            op_add_into(prev, moved)
    return FilteredAinfAlgebra(A.space, A.pairing, monoid, A.e_cut,
                               ops, A.unit)
