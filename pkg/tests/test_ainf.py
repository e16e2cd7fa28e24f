from fractions import Fraction as F

import pytest

from cyclainf.ainf import (verify_ainf, verify_cyclic, verify_unital,
                           verify_morphism, verify_cyclic_morphism,
                           compose_morphisms, AinfMorphism,
                           FilteredAinfAlgebra)
from cyclainf.graded import MultiOp, identity_op
from cyclainf.instances import random_gapped_algebra, random_isotopy
from cyclainf.isotopy import integrate_to_morphism
from cyclainf.models import torus_model, acyclic_extended_model
from cyclainf.novikov import ZERO_BETA, MonoidElement, DiscreteMonoid


def test_torus_model_verifies():
    A = torus_model()
    assert verify_ainf(A).ok
    assert verify_cyclic(A).ok
    assert verify_unital(A).ok


def test_acyclic_model_verifies():
    A = acyclic_extended_model()
    assert verify_ainf(A).ok
    assert verify_cyclic(A).ok
    assert verify_unital(A).ok


def _perturb(A, k, beta, key, idx, delta):
    ops = dict(A.ops)
    op = ops.get((k, beta)) or MultiOp(k, beta, "structure-map", {})
    entries = {kk: dict(v) for kk, v in op.entries.items()}
    row = entries.setdefault(key, {})
    row[idx] = row.get(idx, F(0)) + delta
    ops[(k, beta)] = MultiOp(k, beta, "structure-map", entries)
    return FilteredAinfAlgebra(A.space, A.pairing, A.monoid, A.e_cut, ops,
                               unit=A.unit)


def test_perturbed_entry_is_located():
    A = acyclic_extended_model(e_cut=2, monoid=DiscreteMonoid([(1, 2)]))
    beta = MonoidElement(1, 2)
    # touch one m_2 entry at the positive-energy label
    B = _perturb(A, 2, beta, (1, 2), 0, F(1, 3))
    rep = verify_ainf(B)
    assert not rep.ok
    # every reported defect sits at the perturbed label's arity/energy
    assert all(v.beta == beta for v in rep.violations)
    assert any(v.k == 3 for v in rep.violations)


def test_cyclic_violation_detected():
    A = acyclic_extended_model(e_cut=2, monoid=DiscreteMonoid([(1, 2)]))
    beta = MonoidElement(1, 2)
    B = _perturb(A, 2, beta, (2, 1), 3, F(1))
    rep = verify_cyclic(B)
    assert not rep.ok
    assert all(v.beta == beta and v.k == 2 for v in rep.violations)


def test_unital_violation_detected():
    A = torus_model()
    e = A.unit
    B = _perturb(A, 2, ZERO_BETA, (e, 1), 1, F(1))
    rep = verify_unital(B)
    assert not rep.ok
    assert rep.violations[0].check == "unital-left"
    no_unit = FilteredAinfAlgebra(A.space, A.pairing, A.monoid, A.e_cut,
                                  A.ops, unit=None)
    assert verify_unital(no_unit).violations[0].discrepancy == "no unit declared"


@pytest.mark.parametrize("seed", range(6))
def test_random_gapped_algebras_verify(seed):
    A = random_gapped_algebra(seed)
    assert verify_ainf(A).ok
    assert verify_cyclic(A).ok
    assert verify_unital(A).ok


def test_identity_morphism_verifies():
    A = torus_model()
    ident = AinfMorphism(A, A, {(1, ZERO_BETA): identity_op(A.space)})
    assert verify_morphism(ident).ok
    assert verify_cyclic_morphism(ident).ok


def test_compose_morphisms_verifies():
    iso = random_isotopy(0)
    f = integrate_to_morphism(iso, 0, F(1, 2))
    g = integrate_to_morphism(iso, F(1, 2), 1)
    gf = compose_morphisms(g, f)
    assert verify_morphism(gf).ok
    assert verify_cyclic_morphism(gf).ok
    # composing with the identity changes nothing
    ident = AinfMorphism(f.source, f.source,
                         {(1, ZERO_BETA): identity_op(f.source.space)})
    again = compose_morphisms(f, ident)
    assert again.maps == f.maps


def test_compose_rejects_mismatched_spaces():
    A, B = torus_model(), acyclic_extended_model()
    f = AinfMorphism(A, A, {(1, ZERO_BETA): identity_op(A.space)})
    g = AinfMorphism(B, B, {(1, ZERO_BETA): identity_op(B.space)})
    with pytest.raises(ValueError):
        compose_morphisms(g, f)
