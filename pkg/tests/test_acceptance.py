"""Acceptance gate: each test is one pass/fail line for one criterion.

All comparisons are exact equalities of rationals; no tolerances anywhere.
"""

import itertools
import os
import random
import subprocess
import sys
from fractions import Fraction as F

from cyclainf import rlinalg
from cyclainf.ainf import (compose_morphisms, verify_ainf, verify_cyclic,
                           verify_cyclic_morphism, verify_morphism,
                           verify_unital)
from cyclainf.deform import (BoundingData, DivisorPairingData,
                             check_divisor_property, deform_by_b,
                             energy_shift, mc_value)
from cyclainf.docio import algebra_to_doc, isotopy_to_doc, serialize_document
from cyclainf.graded import MultiOp
from cyclainf.instances import (divisor_model, gauge_isotopy, random_complex,
                                random_cyclic_component, random_gapped_algebra,
                                random_isotopy)
from cyclainf.isotopy import (PseudoIsotopy, PseudoIsotopy2, extend_isotopy,
                              integrate_allocations, integrate_to_morphism,
                              promote_product, promote_pullback,
                              verify_hat_ainf, verify_isotopy, verify_isotopy2)
from cyclainf.models import acyclic_extended_model, torus_model
from cyclainf.novikov import (DiscreteMonoid, MonoidElement, NovikovScalar,
                              ZERO_BETA, exp_scalar)
from cyclainf.polyval import (PiecewiseBiPoly, PiecewisePoly, poly_antideriv,
                              poly_eval, poly_mul)
from cyclainf.transfer import build_hodge, flag_value, transfer_canonical
from cyclainf.trees import (LEAF, RibbonTree, enumerate_trees, interior_paths,
                            order_polytope_volume, subtree_at,
                            tree_partial_order)

B1 = MonoidElement(1, 2)


def test_criterion_01_torus_fixture():
    A = torus_model()
    assert verify_ainf(A).ok
    assert verify_cyclic(A).ok
    assert verify_unital(A).ok


def test_criterion_02_splitting_identities():
    def pair(P, u, v):
        return sum((P.matrix[i][j] * u[i] * v[j]
                    for i in range(len(u)) for j in range(len(v))), F(0))

    checked = 0
    seed = 0
    while checked < 50:
        rng = random.Random(seed)
        seed += 1
        A = random_complex(rng, max_dim=8)
        data = build_hodge(A)
        n = A.space.dim
        P, G, M = data.proj, data.g, data.m1
        ident = rlinalg.identity(n)
        assert rlinalg.matmul(P, P) == P
        assert rlinalg.matmul(G, G) == rlinalg.zeros(n, n)
        mg, gm = rlinalg.matmul(M, G), rlinalg.matmul(G, M)
        assert all(ident[i][j] - P[i][j] == -(mg[i][j] + gm[i][j])
                   for i in range(n) for j in range(n))
        cols = rlinalg.identity(n)
        for x in range(n):
            for y in range(n):
                px, py = rlinalg.matvec(P, cols[x]), rlinalg.matvec(P, cols[y])
                assert pair(A.pairing, px, cols[y]) == pair(A.pairing, cols[x], py)
                gx, gy = rlinalg.matvec(G, cols[x]), rlinalg.matvec(G, cols[y])
                sgn = -1 if (A.space.degree(x) * A.space.degree(y)) % 2 else 1
                assert pair(A.pairing, cols[x], gy) == \
                    sgn * pair(A.pairing, cols[y], gx)
        checked += 1


def test_criterion_03_canonical_transfer():
    for seed in range(20):
        A = random_gapped_algebra(seed)
        assert A.space.dim <= 6
        assert len(A.monoid.enumerate(A.e_cut)) <= 3
        can, f, _ = transfer_canonical(A, k_max=6)
        assert verify_ainf(can, k_max=6).ok
        assert verify_cyclic(can, k_max=6).ok
        assert verify_unital(can, k_max=6).ok
        assert verify_morphism(f, k_max=6).ok
        assert verify_cyclic_morphism(f, k_max=6).ok


def test_criterion_04_flag_independence():
    for seed in range(10):
        A = random_gapped_algebra(seed)
        hodge = build_hodge(A)
        hd = hodge.h_space.dim
        cache = {}
        for beta in A.monoid.enumerate(A.e_cut):
            for k in range(1, 4):
                for tree in enumerate_trees(A.monoid, beta, k, e_cut=A.e_cut):
                    paths = list(interior_paths(tree))
                    if not paths or len(paths) > 3:
                        continue
                    for x0, *inputs in itertools.product(range(hd),
                                                         repeat=k + 1):
                        vals = set()
                        for path in paths:
                            arity = len(subtree_at(tree, path).children)
                            for edge in range(arity + 1):
                                vals.add(flag_value(A, hodge, tree, path,
                                                    edge, tuple(inputs), x0,
                                                    cache))
                        assert len(vals) == 1


def test_criterion_05_integration():
    for seed in range(10):
        iso = random_isotopy(seed)
        assert verify_isotopy(iso).ok
        f = integrate_to_morphism(iso, 0, 1)
        assert verify_morphism(f).ok
        assert verify_cyclic_morphism(f).ok

    # constant arity-one connection: the morphism is the exponential series
    mon = DiscreteMonoid([(1, 0)])
    beta = MonoidElement(1, 0)
    base = acyclic_extended_model(e_cut=3, monoid=mon)
    rng = random.Random(5)
    cop = random_cyclic_component(rng, base, 1, beta, poly_degree=0,
                                  avoid=(base.unit,))
    iso = gauge_isotopy(base, mon, 3, components={(1, beta): cop})
    assert verify_isotopy(iso).ok
    f = integrate_to_morphism(iso, 0, 1)
    n = base.space.dim
    C = [[F(0)] * n for _ in range(n)]
    for (j,), vec in cop.entries.items():
        for i, c in vec.items():
            C[i][j] = c.evaluate(0)
    assert any(any(row) for row in C)
    power = rlinalg.identity(n)
    for m in range(1, 3):  # all energy levels below the cutoff
        power = rlinalg.matmul([[-c / m for c in row] for row in C], power)
        got = [[F(0)] * n for _ in range(n)]
        op = f.map(1, MonoidElement(m, 0))
        if op:
            for (j,), vec in op.entries.items():
                for i, c in vec.items():
                    got[i][j] = c
        assert got == power


def _perturbed_isotopy(iso, k=2, beta=B1):
    m_ops = {kb: op.copy() for kb, op in iso.m_ops.items()}
    op = m_ops.get((k, beta)) or MultiOp(k, beta, "structure-map", {})
    entries = {kk: dict(v) for kk, v in op.entries.items()}
    row = entries.setdefault((1, 2), {})
    row[3] = row.get(3, PiecewisePoly.from_poly([F(0)])) + \
        PiecewisePoly.from_poly([F(0), F(1)])
    m_ops[(k, beta)] = MultiOp(k, beta, "structure-map", entries)
    return PseudoIsotopy(iso.space, iso.pairing, iso.monoid, iso.e_cut,
                         m_ops, iso.c_ops, iso.unit)


def test_criterion_06_family_relation_equivalence():
    for seed in range(3):
        iso = random_isotopy(seed)
        assert verify_isotopy(iso).ok
        assert verify_hat_ainf(iso).ok
        bad = _perturbed_isotopy(iso)
        flat = verify_isotopy(bad)
        fam = verify_hat_ainf(bad)
        assert not flat.ok and not fam.ok
        flat_loci = {(v.k, v.beta) for v in flat.violations
                     if v.check in ("ainf-relation", "main-equation")
                     and v.k <= 3}
        assert flat_loci == {(v.k, v.beta) for v in fam.violations}


def test_criterion_07_extension():
    for seed in range(5):
        iso = random_isotopy(seed, e_cut=2)
        small = PseudoIsotopy(
            iso.space, iso.pairing, iso.monoid, 1,
            {kb: op for kb, op in iso.m_ops.items() if kb[1].energy < 1},
            {kb: op for kb, op in iso.c_ops.items() if kb[1].energy < 1},
            iso.unit)
        ext = extend_isotopy(small, iso.slice_algebra(1), 2)
        assert verify_isotopy(ext).ok
        assert ext.slice_algebra(1).ops == iso.slice_algebra(1).ops
        for kb, op in small.m_ops.items():
            assert ext.m_ops[kb].entries == op.entries


def _simplex_sum(order, polys, tau0, tau1):
    # oracle: sum over linear extensions of iterated simplex integrals
    below = {i: set() for i in range(order.n)}
    for i, j in order.less_or_equal():
        below[j].add(i)
    exts = []

    def rec(seq, remaining):
        if not remaining:
            exts.append(seq)
            return
        for i in sorted(remaining):
            if not (below[i] & remaining):
                rec(seq + [i], remaining - {i})

    rec([], frozenset(range(order.n)))
    total = F(0)
    for ext in exts:
        f = (F(1),)
        for v in ext:
            f = poly_antideriv(poly_mul(f, polys[v]))
            if f:  # the zero integrand needs no constant adjustment
                f = (f[0] - poly_eval(f, F(tau0)),) + f[1:]
        total += poly_eval(f, F(tau1))
    return total


def test_criterion_08_integration_oracle():
    rng = random.Random(8)
    mon = DiscreteMonoid([B1])
    samples = (enumerate_trees(DiscreteMonoid([]), ZERO_BETA, 4)
               + enumerate_trees(mon, MonoidElement(2, 4), 2, e_cut=3))
    chain = LEAF
    for _ in range(4):
        chain = RibbonTree(B1, (chain,))
    samples.append(chain)
    checked = 0
    for tree in samples:
        order = tree_partial_order(tree)
        if order.n == 0 or order.n > 4:
            continue
        polys = {i: tuple(F(rng.randint(-3, 3)) for _ in range(4))
                 for i in range(order.n)}
        integrands = {i: PiecewisePoly.from_poly(p) for i, p in polys.items()}
        for tau0, tau1 in ((0, 1), (F(1, 3), F(3, 4))):
            assert integrate_allocations(tree, integrands, tau0, tau1) == \
                _simplex_sum(order, polys, tau0, tau1)
        checked += 1
    assert checked > 10

    for n in range(1, 7):
        chain = LEAF
        for _ in range(n):
            chain = RibbonTree(B1, (chain,))
        assert order_polytope_volume(tree_partial_order(chain)) == \
            F(1, [1, 1, 2, 6, 24, 120, 720][n])


def test_criterion_09_deformation():
    # divisor-constructed instance: identity, closed form, brute-force sum
    A, d = divisor_model()
    assert check_divisor_property(A, d).ok
    e1, e2 = A.space.names.index("e1"), A.space.names.index("e2")
    b = BoundingData(A.space,
                     divisor={e1: NovikovScalar.monomial(F(1, 3), F(1, 4)),
                              e2: NovikovScalar.monomial(F(2, 5), F(1, 2))})
    val = mc_value(A, b, divisor_data=d)
    brute = {}
    for (k, beta), op in A.ops.items():
        for key, vec in op.entries.items():
            if any(i not in b.divisor for i in key):
                continue
            coeff = NovikovScalar.one()
            for i in key:
                coeff = coeff * b.divisor[i]
            coeff = coeff.truncate(A.e_cut - beta.energy)
            for i, c in vec.items():
                w = (coeff * c).shift(beta.energy, beta.maslov).truncate(A.e_cut)
                if not w.is_zero():
                    brute[i] = brute.get(i, NovikovScalar.zero()) + w
    assert val == {i: c for i, c in brute.items() if not c.is_zero()}

    # energy reweighting commutes with summing the series
    As = energy_shift(A, d, {e1: F(1, 2)})
    assert verify_unital(As).ok

    def shifted(beta):
        return MonoidElement(beta.energy + F(1, 2) * d.pair(beta, e1),
                             beta.maslov)

    ds = DivisorPairingData(As.monoid,
                            {(shifted(beta), i): g
                             for (beta, i), g in d.values.items()},
                            e_cut=A.e_cut)
    lhs = mc_value(As, b, divisor_data=ds)
    rhs = {}
    for (k, beta), op in A.ops.items():
        if k != 0:
            continue
        lab = shifted(beta)
        if lab.energy >= A.e_cut:
            continue
        arg = (b.divisor[e1].scale(d.pair(beta, e1)) +
               b.divisor[e2].scale(d.pair(beta, e2)))
        fac = exp_scalar(arg, cutoff=A.e_cut - lab.energy)
        for i, q in op.entries[()].items():
            w = fac.scale(q).shift(lab.energy, lab.maslov).truncate(A.e_cut)
            if not w.is_zero():
                rhs[i] = rhs.get(i, NovikovScalar.zero()) + w
    assert lhs == {i: v for i, v in rhs.items() if not v.is_zero()}

    # high-valuation deformations stay verified; strictness <-> vanishing sum
    done = 0
    for seed in range(60):
        rng = random.Random(seed)
        base = random_complex(rng, max_dim=8, ambient_degree=6)
        odd = [i for i in range(base.space.dim)
               if base.space.degree(i) >= 3 and base.space.degree(i) % 2 == 1]
        if not odd:
            continue
        iso = gauge_isotopy(base, DiscreteMonoid([(1, 2)]), 2, rng=rng,
                            n_components=2, max_arity=3)
        Ai = iso.slice_algebra(1)
        assert verify_ainf(Ai).ok and verify_cyclic(Ai).ok
        deg = Ai.space.degree(odd[0])
        bb = BoundingData(Ai.space, high={odd[0]: NovikovScalar.monomial(
            F(1, 2), F(1, 2), 1 - deg)})
        Ab = deform_by_b(Ai, bb)
        assert verify_ainf(Ab).ok
        assert verify_cyclic(Ab).ok
        assert bool(mc_value(Ai, bb)) == any(k == 0 for k, _ in Ab.ops)
        done += 1
        if done >= 4:
            break
    assert done >= 4


def test_criterion_10_two_parameter():
    iso = random_isotopy(0)
    for pi2 in (promote_product(iso), promote_pullback(iso)):
        assert verify_isotopy2(pi2).ok
    pb = promote_pullback(iso)
    eop = MultiOp(1, B1, "homotopy-map",
                  {(1,): {2: PiecewiseBiPoly.from_bipoly({(0, 0): F(1)})}})
    bad = PseudoIsotopy2(pb.space, pb.pairing, pb.monoid, pb.e_cut,
                         pb.m_ops, pb.c_ops, pb.d_ops, {(1, B1): eop},
                         pb.unit)
    rep = verify_isotopy2(bad)
    assert not rep.ok
    assert all(v.beta == B1 for v in rep.violations)


def test_criterion_11_cli_determinism(tmp_path):
    apath = tmp_path / "a.json"
    apath.write_text(serialize_document(algebra_to_doc(random_gapped_algebra(3))))
    ipath = tmp_path / "iso.json"
    ipath.write_text(serialize_document(isotopy_to_doc(random_isotopy(2))))
    commands = (
        ["verify", str(apath)],
        ["transfer", str(apath), "--k-max", "6"],
        ["trees", str(apath), "--k-max", "2"],
        ["isotopy-integrate", str(ipath), "--tau1", "1/2"],
    )
    for argv in commands:
        outputs = set()
        for hashseed, workers in (("0", "1"), ("97", "16")):
            env = dict(os.environ, PYTHONHASHSEED=hashseed,
                       CYCLAINF_PARALLELISM=workers)
            proc = subprocess.run([sys.executable, "-m", "cyclainf.cli"] + argv,
                                  capture_output=True, text=True, env=env)
            assert proc.returncode == 0
            outputs.add(proc.stdout)
        assert len(outputs) == 1
