"""Truncated Novikov coefficients with two-variable grading.

Scalars are finite sums sum_i a_i * T^(lam_i) * e^(mu_i/2) with rational
coefficients a_i, rational exponents lam_i and even integers mu_i, carried
together with a truncation precision p meaning "correct modulo T^p".
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction


INF = None  # precision / valuation "infinity" sentinel


def _min_prec(a, b):
    if a is INF:
        return b
    if b is INF:
        return a
    return min(a, b)


def _add_prec(a, b):
    # a + b where either may be infinite
    if a is INF or b is INF:
        return INF
    return a + b


@dataclass(frozen=True)
class MonoidElement:
    """A label (energy, maslov) with energy >= 0 and maslov even."""

    energy: Fraction
    maslov: int

    def __post_init__(self):
        object.__setattr__(self, "energy", Fraction(self.energy))
        if self.energy < 0:
            raise ValueError("energy must be nonnegative")
        if self.maslov % 2 != 0:
            raise ValueError("maslov index must be even")

    def __add__(self, other):
        return MonoidElement(self.energy + other.energy, self.maslov + other.maslov)

    def __sub__(self, other):
        return MonoidElement(self.energy - other.energy, self.maslov - other.maslov)

    @property
    def is_zero(self):
        return self.energy == 0 and self.maslov == 0

    def sort_key(self):
        return (self.energy, self.maslov)


ZERO_BETA = MonoidElement(Fraction(0), 0)


class DiscreteMonoid:
    """Submonoid of R_{>=0} x 2Z generated by finitely many elements.

    The gap condition requires every generator to have strictly positive
    energy, so only (0,0) sits at energy zero and every truncation window
    [0, E_cut) contains finitely many elements.
    """

    def __init__(self, generators):
        gens = []
        for g in generators:
            if not isinstance(g, MonoidElement):
                g = MonoidElement(Fraction(g[0]), int(g[1]))
            if g.energy <= 0:
                raise ValueError("generators must have strictly positive energy")
            gens.append(g)
        self.generators = sorted(set(gens), key=MonoidElement.sort_key)

    def enumerate(self, e_cut):
        """All monoid elements with energy < e_cut, sorted by (energy, maslov)."""
        e_cut = Fraction(e_cut)
        seen = {ZERO_BETA}
        frontier = [ZERO_BETA]
        while frontier:
            nxt = []
            for b in frontier:
                for g in self.generators:
                    c = b + g
                    if c.energy < e_cut and c not in seen:
                        seen.add(c)
                        nxt.append(c)
            frontier = nxt
        return sorted(seen, key=MonoidElement.sort_key)

    def __contains__(self, beta):
        if beta.is_zero:
            return True
        bound = beta.energy + 1
        return beta in set(self.enumerate(bound))

    def min_energy(self):
        return min(g.energy for g in self.generators) if self.generators else INF


class NovikovScalar:
    """Finite T,e-sum with exact rational data and tracked truncation."""

    __slots__ = ("terms", "precision")

    def __init__(self, terms=(), precision=INF):
        # terms: iterable of (lam, mu, coeff); merged, zero-pruned, sorted,
        # and truncated against the precision.
        merged = {}
        for lam, mu, coeff in terms:
            lam = Fraction(lam)
            mu = int(mu)
            coeff = Fraction(coeff)
            if mu % 2 != 0:
                raise ValueError("e-exponent must be a half of an even integer")
            key = (lam, mu)
            merged[key] = merged.get(key, Fraction(0)) + coeff
        if precision is not INF:
            precision = Fraction(precision)
        out = []
        for (lam, mu), coeff in merged.items():
            if coeff == 0:
                continue
            if precision is not INF and lam >= precision:
                continue
            out.append((lam, mu, coeff))
        out.sort(key=lambda t: (t[0], t[1]))
        self.terms = tuple(out)
        self.precision = precision

    # -- constructors -------------------------------------------------

    @classmethod
    def from_rational(cls, q, precision=INF):
        q = Fraction(q)
        return cls([(Fraction(0), 0, q)] if q else [], precision)

    @classmethod
    def monomial(cls, coeff, lam, mu=0, precision=INF):
        return cls([(Fraction(lam), int(mu), Fraction(coeff))], precision)

    @classmethod
    def zero(cls, precision=INF):
        return cls((), precision)

    @classmethod
    def one(cls, precision=INF):
        return cls.from_rational(1, precision)

    # -- queries -------------------------------------------------------

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def valuation(self):
        """Least T-exponent of a nonzero term; INF for the zero scalar."""
        if not self.terms:
            return INF
        return self.terms[0][0]

    def rational_part(self):
        for lam, mu, coeff in self.terms:
            if lam == 0 and mu == 0:
                return coeff
        return Fraction(0)

    def is_rational(self):
        return all(lam == 0 and mu == 0 for lam, mu, _ in self.terms)

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        prec = _min_prec(self.precision, other.precision)
        return NovikovScalar(self.terms + other.terms, prec)

    __radd__ = __add__

    def __neg__(self):
        return NovikovScalar([(l, m, -c) for l, m, c in self.terms], self.precision)

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        # correct modulo T^min(p_a + v(b), p_b + v(a))
        prec = _min_prec(
            _add_prec(self.precision, other.valuation()),
            _add_prec(other.precision, self.valuation()),
        )
        terms = []
        for l1, m1, c1 in self.terms:
            for l2, m2, c2 in other.terms:
                terms.append((l1 + l2, m1 + m2, c1 * c2))
        return NovikovScalar(terms, prec)

    __rmul__ = __mul__

    def scale(self, q):
        q = Fraction(q)
        return NovikovScalar([(l, m, c * q) for l, m, c in self.terms], self.precision)

    def shift(self, lam, mu=0):
        """Multiply by the monomial T^lam e^(mu/2)."""
        lam = Fraction(lam)
        prec = self.precision if self.precision is INF else self.precision + lam
        return NovikovScalar([(l + lam, m + mu, c) for l, m, c in self.terms], prec)

    def truncate(self, p):
        return NovikovScalar(self.terms, _min_prec(self.precision, Fraction(p)))

    def __eq__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.terms == other.terms and self.precision == other.precision

    def __hash__(self):
        return hash((self.terms, self.precision))

    # -- display ----------------------------------------------------------

    def __str__(self):
        return serialize_scalar(self)

    def __repr__(self):
        return "NovikovScalar(%s)" % serialize_scalar(self)


def _coerce(x):
    if isinstance(x, NovikovScalar):
        return x
    if isinstance(x, (int, Fraction)):
        return NovikovScalar.from_rational(x)
    return NotImplemented


def exp_scalar(a, cutoff=INF):
    """exp of a positive-valuation scalar, truncated modulo T^cutoff.

    The series sum a^m / m! is T-adically finite exactly when v(a) > 0 and
    the effective precision min(a.precision, cutoff) is finite.
    """
    if a.is_zero():
        return NovikovScalar.one(_min_prec(a.precision, cutoff))
    v = a.valuation()
    if v <= 0:
        raise ValueError("exp requires strictly positive valuation")
    prec = _min_prec(a.precision, cutoff)
    if prec is INF:
        raise ValueError("exp requires a finite truncation")
    result = NovikovScalar.one(prec)
    power = NovikovScalar.one(prec)
    fact = 1
    m = 0
    while m * v < prec:
        m += 1
        fact *= m
        power = (power * a).truncate(prec)
        if power.is_zero():
            break
        result = result + power.scale(Fraction(1, fact))
    return result.truncate(prec)


# -- canonical string form ----------------------------------------------
#
#   1 + 2/3*T^(1/2)*e^1 (prec T^2)
#
# Terms sorted by (lam, mu); unit factors T^(0), e^0 omitted; an exactly
# known scalar has no precision suffix.


def _fmt_frac(q):
    q = Fraction(q)
    return "%d" % q.numerator if q.denominator == 1 else "%d/%d" % (q.numerator, q.denominator)


def serialize_scalar(s):
    if not s.terms:
        body = "0"
    else:
        parts = []
        for lam, mu, coeff in s.terms:
            tail = []
            if lam != 0:
                tail.append("T^(%s)" % _fmt_frac(lam))
            if mu != 0:
                tail.append("e^%d" % (mu // 2))
            if not tail:
                parts.append(_fmt_frac(coeff))
            elif coeff == 1:
                parts.append("*".join(tail))
            elif coeff == -1:
                parts.append("-" + "*".join(tail))
            else:
                parts.append("*".join([_fmt_frac(coeff)] + tail))
        body = " + ".join(parts)
    if s.precision is INF:
        return body
    return "%s (prec T^%s)" % (body, _fmt_frac(s.precision))


_TERM_RE = re.compile(
    r"""^\s*
    (?P<coeff>[+-]?\d+(?:/\d+)?)?
    (?P<tpart>\*?T\^\(?(?P<lam>-?\d+(?:/\d+)?)\)?)?
    (?P<epart>\*?e\^(?P<mu2>-?\d+))?
    \s*$""",
    re.VERBOSE,
)


def parse_scalar(text):
    text = text.strip()
    prec = INF
    m = re.search(r"\(prec\s+T\^\(?(-?\d+(?:/\d+)?)\)?\)\s*$", text)
    if m:
        prec = Fraction(m.group(1))
        text = text[: m.start()].strip()
    if text == "0" or text == "":
        return NovikovScalar.zero(prec)
    terms = []
    for raw in text.split(" + "):
        raw = raw.strip()
        sign = Fraction(1)
        if raw.startswith("-"):
            sign = Fraction(-1)
            raw = raw[1:].strip()
        m = _TERM_RE.match(raw)
        if not m or (m.group("coeff") is None and m.group("tpart") is None and m.group("epart") is None):
            raise ValueError("cannot parse scalar term: %r" % raw)
        coeff_txt = m.group("coeff")
        coeff = Fraction(1) if coeff_txt is None else Fraction(coeff_txt)
        lam = Fraction(m.group("lam")) if m.group("lam") else Fraction(0)
        mu = 2 * int(m.group("mu2")) if m.group("mu2") else 0
        terms.append((lam, mu, sign * coeff))
    return NovikovScalar(terms, prec)
