import random
from fractions import Fraction as F

import pytest

from cyclainf import rlinalg
from cyclainf.ainf import (compose_morphisms, verify_ainf, verify_cyclic,
                           verify_morphism, verify_cyclic_morphism,
                           verify_unital)
from cyclainf.graded import MultiOp
from cyclainf.instances import (gauge_isotopy, random_cyclic_component,
                                random_isotopy)
from cyclainf.isotopy import (PseudoIsotopy, PseudoIsotopy2, canonical_isotopy,
                              concatenate, extend_isotopy,
                              integrate_to_morphism, promote_product,
                              promote_pullback, reparametrize, verify_isotopy,
                              verify_isotopy2, verify_hat_ainf)
from cyclainf.models import acyclic_extended_model
from cyclainf.novikov import DiscreteMonoid, MonoidElement, ZERO_BETA
from cyclainf.polyval import PiecewisePoly, PiecewiseBiPoly
from cyclainf.transfer import transfer_canonical

B1 = MonoidElement(1, 2)


def _op_matrix(op, rows, cols, at=None):
    M = [[F(0)] * cols for _ in range(rows)]
    if op:
        for (j,), vec in op.entries.items():
            for i, c in vec.items():
                M[i][j] = c if at is None else c.evaluate(at)
    return M


@pytest.mark.parametrize("seed", range(5))
def test_random_isotopies_verify(seed):
    iso = random_isotopy(seed)
    assert verify_isotopy(iso).ok
    for t in (0, F(1, 3), 1):
        A = iso.slice_algebra(t)
        assert verify_ainf(A).ok
        assert verify_cyclic(A).ok
        assert verify_unital(A).ok


def _perturbed(iso, k=2, beta=B1):
    m_ops = {kb: op.copy() for kb, op in iso.m_ops.items()}
    op = m_ops.get((k, beta)) or MultiOp(k, beta, "structure-map", {})
    entries = {kk: dict(v) for kk, v in op.entries.items()}
    row = entries.setdefault((1, 2), {})
    bump = PiecewisePoly.from_poly([F(0), F(1)])
    row[3] = row.get(3, PiecewisePoly.from_poly([F(0)])) + bump
    m_ops[(k, beta)] = MultiOp(k, beta, "structure-map", entries)
    return PseudoIsotopy(iso.space, iso.pairing, iso.monoid, iso.e_cut,
                         m_ops, iso.c_ops, iso.unit)


def test_perturbed_isotopy_violations_are_located():
    bad = _perturbed(random_isotopy(0))
    rep = verify_isotopy(bad)
    assert not rep.ok
    assert all(v.beta == B1 for v in rep.violations)
    assert {v.k for v in rep.violations} == {2, 3}


@pytest.mark.parametrize("seed", range(3))
def test_family_relations_agree_with_flat_relations(seed):
    # the two formulations pass together and fail at the same labels
    iso = random_isotopy(seed)
    assert verify_isotopy(iso).ok
    assert verify_hat_ainf(iso).ok
    bad = _perturbed(iso)
    flat = verify_isotopy(bad)
    fam = verify_hat_ainf(bad)
    assert not flat.ok and not fam.ok
    flat_loci = {(v.k, v.beta) for v in flat.violations
                 if v.check in ("ainf-relation", "main-equation") and v.k <= 3}
    fam_loci = {(v.k, v.beta) for v in fam.violations}
    assert flat_loci == fam_loci


def test_integrated_morphism_verifies():
    iso = random_isotopy(1)
    f = integrate_to_morphism(iso, 0, 1)
    assert verify_morphism(f).ok
    assert verify_cyclic_morphism(f).ok
    # equal endpoints give the identity morphism
    e = integrate_to_morphism(iso, F(1, 2), F(1, 2))
    assert set(e.maps) == {(1, ZERO_BETA)}
    ident = e.maps[(1, ZERO_BETA)]
    assert all(vec == {key[0]: F(1)} for key, vec in ident.entries.items())


def test_integration_cocycle_is_exact():
    iso = random_isotopy(0)
    f01 = integrate_to_morphism(iso, 0, F(1, 3))
    f12 = integrate_to_morphism(iso, F(1, 3), 1)
    f02 = integrate_to_morphism(iso, 0, 1)
    assert compose_morphisms(f12, f01).maps == f02.maps


def test_constant_connection_integrates_to_exponential():
    # arity-one connection constant in t: the integrated morphism piles up
    # iterated integrals of -C, i.e. (-C)^n / n! at energy level n
    mon = DiscreteMonoid([(1, 0)])
    beta = MonoidElement(1, 0)
    base = acyclic_extended_model(e_cut=3, monoid=mon)
    for seed in range(5):
        rng = random.Random(seed)
        cop = random_cyclic_component(rng, base, 1, beta, poly_degree=0,
                                      avoid=(base.unit,))
        iso = gauge_isotopy(base, mon, 3, components={(1, beta): cop})
        assert verify_isotopy(iso).ok
        f = integrate_to_morphism(iso, 0, 1)
        n = base.space.dim
        C = _op_matrix(cop, n, n, at=0)
        power = rlinalg.identity(n)
        for m in range(1, 3):
            power = rlinalg.matmul([[-c / m for c in row] for row in C], power)
            assert _op_matrix(f.map(1, MonoidElement(m, 0)), n, n) == power


def _plateau():
    # fixes 0 and 1, flat near both endpoints
    return PiecewisePoly([F(0), F(1, 4), F(3, 4), F(1)],
                         [[F(0)], [F(-1, 2), F(2)], [F(1)]])


def test_reparametrize():
    iso = random_isotopy(2)
    phi = _plateau()
    rep = reparametrize(iso, phi)
    assert verify_isotopy(rep).ok
    # slices match through phi
    assert rep.slice_algebra(F(1, 8)).ops == iso.slice_algebra(0).ops
    assert rep.slice_algebra(F(1, 2)).ops == iso.slice_algebra(F(1, 2)).ops
    # total integral is reparametrisation invariant
    assert integrate_to_morphism(rep, 0, 1).maps == \
        integrate_to_morphism(iso, 0, 1).maps
    with pytest.raises(ValueError):
        reparametrize(iso, PiecewisePoly.from_poly([F(0), F(1, 2)]))


def test_concatenate():
    first = reparametrize(random_isotopy(4), _plateau())
    tail = gauge_isotopy(first.slice_algebra(1), first.monoid, first.e_cut,
                         rng=random.Random(7))
    second = reparametrize(tail, _plateau())
    cat = concatenate(first, second)
    assert verify_isotopy(cat).ok
    assert cat.slice_algebra(0).ops == first.slice_algebra(0).ops
    assert cat.slice_algebra(1).ops == second.slice_algebra(1).ops
    whole = integrate_to_morphism(cat, 0, 1)
    halves = compose_morphisms(integrate_to_morphism(second, 0, 1),
                               integrate_to_morphism(first, 0, 1))
    assert whole.maps == halves.maps


def test_extend_recovers_larger_window():
    iso = random_isotopy(4, e_cut=2)
    small = PseudoIsotopy(
        iso.space, iso.pairing, iso.monoid, 1,
        {kb: op for kb, op in iso.m_ops.items() if kb[1].energy < 1},
        {kb: op for kb, op in iso.c_ops.items() if kb[1].energy < 1},
        iso.unit)
    assert verify_isotopy(small).ok
    ext = extend_isotopy(small, iso.slice_algebra(1), 2)
    assert verify_isotopy(ext).ok
    # hits the prescribed boundary and restricts to the input
    assert ext.slice_algebra(1).ops == iso.slice_algebra(1).ops
    for kb, op in small.m_ops.items():
        assert ext.m_ops[kb].entries == op.entries
    with pytest.raises(ValueError):
        extend_isotopy(iso, iso.slice_algebra(1), 1)
    wrong = iso.slice_algebra(1)
    m2 = wrong.ops[(2, ZERO_BETA)]
    entries = {kk: dict(v) for kk, v in m2.entries.items()}
    key = next(iter(entries))
    idx = next(iter(entries[key]))
    entries[key][idx] = entries[key][idx] + 1
    wrong.ops[(2, ZERO_BETA)] = MultiOp(2, ZERO_BETA, "structure-map", entries)
    with pytest.raises(ValueError):
        extend_isotopy(small, wrong, 2)


def _desk_instance(seed):
    mon = DiscreteMonoid([(1, 0)])
    beta = MonoidElement(1, 0)
    base = acyclic_extended_model(e_cut=2, monoid=mon)
    rng = random.Random(seed)
    cop = random_cyclic_component(rng, base, 1, beta, poly_degree=2, terms=3,
                                  avoid=(base.unit,))
    return gauge_isotopy(base, mon, 2, components={(1, beta): cop}), cop, beta


@pytest.mark.parametrize("seed", (0, 1, 3))
def test_canonical_isotopy(seed):
    iso, cop, beta = _desk_instance(seed)
    assert verify_isotopy(iso).ok
    can, hodge = canonical_isotopy(iso)
    assert verify_isotopy(can).ok

    # compare the two boundary composites
    _, f0, _ = transfer_canonical(iso.slice_algebra(0), hodge=hodge)
    _, f1, _ = transfer_canonical(iso.slice_algebra(1), hodge=hodge)
    lhs = compose_morphisms(f1, integrate_to_morphism(can, 0, 1))
    rhs = compose_morphisms(integrate_to_morphism(iso, 0, 1), f0)
    for g in (lhs, rhs):
        assert verify_morphism(g).ok
        assert verify_cyclic_morphism(g).ok

    # they differ at first order by the boundary of the integrated homotopy:
    # lhs - rhs = m_1 . integral_0^1 (-G c^t incl) dt at the lowest level
    n, h = iso.space.dim, hodge.h_space.dim
    diff = rlinalg.matmul(rlinalg.identity(n), _op_matrix(lhs.map(1, beta), n, h))
    R = _op_matrix(rhs.map(1, beta), n, h)
    diff = [[diff[i][j] - R[i][j] for j in range(h)] for i in range(n)]
    Ci = [[F(0)] * n for _ in range(n)]
    for (j,), vec in cop.entries.items():
        for i, c in vec.items():
            Ci[i][j] = c.antiderivative_from(0).evaluate(1)
    M1 = _op_matrix(iso.slice_algebra(1).op(1, ZERO_BETA), n, n)
    H = rlinalg.matmul(hodge.g, rlinalg.matmul(Ci, hodge.incl))
    want = rlinalg.matmul(M1, [[-x for x in row] for row in H])
    assert diff == want
    assert any(any(row) for row in diff)  # the composites genuinely differ


def test_two_parameter_families_verify():
    iso = random_isotopy(0)
    sq = promote_product(iso)
    assert verify_isotopy2(sq).ok
    pb = promote_pullback(iso)
    assert verify_isotopy2(pb).ok
    # boundary restrictions are one-parameter isotopies again
    for s in (0, F(1, 3), 1):
        assert verify_isotopy(pb.restrict_s(s)).ok
        assert verify_isotopy(pb.restrict_t(s)).ok
    assert verify_isotopy(sq.restrict_s(F(1, 2))).ok
    # restricting the square family in s recovers the input
    r = sq.restrict_s(F(1, 4))
    assert {kb: op.entries for kb, op in r.m_ops.items()} == \
        {kb: op.entries for kb, op in iso.m_ops.items()}


def test_two_parameter_mixed_perturbation_is_located():
    pb = promote_pullback(random_isotopy(0))
    assert not pb.e_ops  # cross-derivative weights cancel for a pullback
    eop = MultiOp(1, B1, "homotopy-map",
                  {(1,): {2: PiecewiseBiPoly.from_bipoly({(0, 0): F(1)})}})
    bad = PseudoIsotopy2(pb.space, pb.pairing, pb.monoid, pb.e_cut,
                         pb.m_ops, pb.c_ops, pb.d_ops, {(1, B1): eop}, pb.unit)
    rep = verify_isotopy2(bad)
    assert not rep.ok
    assert all(v.beta == B1 for v in rep.violations)
    assert {v.check for v in rep.violations} >= {"relation2"}
