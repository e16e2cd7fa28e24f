from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from cyclainf.novikov import (MonoidElement, DiscreteMonoid, NovikovScalar,
                              ZERO_BETA, INF, exp_scalar, serialize_scalar,
                              parse_scalar)


def test_monoid_enumeration_oracle():
    # hand-enumerated window for the two-generator monoid
    G = DiscreteMonoid([(1, 2), (F(3, 2), -2)])
    got = [(b.energy, b.maslov) for b in G.enumerate(3)]
    assert got == [(0, 0), (1, 2), (F(3, 2), -2), (2, 4), (F(5, 2), 0)]


def test_monoid_window_is_finite_and_sorted():
    G = DiscreteMonoid([(F(1, 3), 0), (F(1, 2), 2)])
    window = G.enumerate(2)
    assert len(window) == len(set(window))
    assert window == sorted(window, key=MonoidElement.sort_key)
    assert all(b.energy < 2 for b in window)


def test_monoid_membership():
    G = DiscreteMonoid([(1, 2)])
    assert ZERO_BETA in G
    assert MonoidElement(2, 4) in G
    assert MonoidElement(2, 2) not in G
    assert MonoidElement(F(1, 2), 2) not in G


def test_gap_condition_rejected():
    with pytest.raises(ValueError):
        DiscreteMonoid([(0, 2)])


def test_odd_maslov_rejected():
    with pytest.raises(ValueError, match="maslov"):
        MonoidElement(1, 3)
    with pytest.raises(ValueError):
        MonoidElement(-1, 2)


def test_scalar_arithmetic_and_valuation():
    a = NovikovScalar.monomial(F(1, 2), F(1, 2), 2)
    b = NovikovScalar.from_rational(3)
    c = a + b
    assert c.valuation() == 0
    assert c.rational_part() == 3
    assert (a * a).valuation() == 1
    assert NovikovScalar.zero().valuation() is INF
    assert (c - c).is_zero()


def test_precision_tracking():
    a = NovikovScalar.monomial(1, 1, 0).truncate(2)     # T (prec T^2)
    b = NovikovScalar.monomial(1, F(1, 2), 0)           # exact
    # product precision: min over (p_a + v(b), p_b + v(a))
    assert (a * b).precision == F(5, 2)
    assert (a + b).precision == 2
    assert a.truncate(1).is_zero()


def test_exp_scalar_series():
    x = NovikovScalar.monomial(F(1, 3), F(1, 2), 0)
    e = exp_scalar(x, cutoff=2)
    expect = NovikovScalar.from_rational(1)
    for n in range(1, 4):  # (1/2)*4 = 2 hits the cutoff
        term = NovikovScalar.from_rational(1)
        for _ in range(n):
            term = term * x
        expect = expect + term.scale(F(1, __import__("math").factorial(n)))
    assert e == expect.truncate(2)


def test_exp_scalar_needs_positive_valuation():
    with pytest.raises(ValueError):
        exp_scalar(NovikovScalar.from_rational(1), cutoff=2)
    with pytest.raises(ValueError):
        exp_scalar(NovikovScalar.monomial(1, F(1, 2), 0))  # no cutoff


small_frac = st.fractions(min_value=-4, max_value=4, max_denominator=6)
lam = st.fractions(min_value=0, max_value=3, max_denominator=4)


@st.composite
def scalars(draw):
    n = draw(st.integers(min_value=0, max_value=4))
    terms = {}
    for _ in range(n):
        key = (draw(lam), 2 * draw(st.integers(min_value=-2, max_value=2)))
        q = draw(small_frac)
        if q:
            terms[key] = terms.get(key, 0) + q
    prec = draw(st.one_of(st.none(), st.fractions(min_value=F(1, 2),
                                                  max_value=4,
                                                  max_denominator=4)))
    s = NovikovScalar([(l, m, q) for (l, m), q in terms.items() if q])
    return s if prec is None else s.truncate(prec)


@given(scalars())
def test_scalar_serialization_round_trip(s):
    text = serialize_scalar(s)
    assert parse_scalar(text) == s
    assert serialize_scalar(parse_scalar(text)) == text


def test_parse_scalar_examples():
    s = parse_scalar("1 + 2/3*T^(1/2)*e^1 (prec T^2)")
    assert s.rational_part() == 1
    assert s.precision == 2
    assert serialize_scalar(s) == "1 + 2/3*T^(1/2)*e^1 (prec T^2)"
    assert parse_scalar("0").is_zero()
