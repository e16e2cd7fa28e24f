"""Randomised example structures: complexes with cyclic differential,
gauge-flow pseudo-isotopies, and gapped cyclic algebras obtained as their
time-one slices.  Everything is seeded and exact, so generated instances are
reproducible fixtures rather than fuzz."""

from __future__ import annotations

import random
from fractions import Fraction

from . import rlinalg
from .novikov import ZERO_BETA, DiscreteMonoid, MonoidElement
from .graded import GradedSpace, MultiOp, Pairing, koszul_sign, op_add_into
from .ainf import FilteredAinfAlgebra
from .isotopy import PseudoIsotopy, _op_map, _pp
from .polyval import PiecewisePoly


# -- random complexes with compatible pairing ----------------------------------


def random_complex(rng, max_dim=8, ambient_degree=None):
    """Complex with nondegenerate pairing and self-dual squaring-zero
    differential, built from split atoms and a random degree-preserving
    basis change."""
    n = ambient_degree if ambient_degree is not None else rng.choice([2, 3, 4])
    basis = []          # (name, degree)
    pairs = []          # (i, j, value) defining entries, i < j rows filled below
    diff = {}           # column -> {row: coeff}

    def add(name, deg):
        basis.append(("%s%d" % (name, len(basis)), deg))
        return len(basis) - 1

    atoms = rng.randint(1, 3)
    for _ in range(atoms):
        if rng.random() < 0.5 or len(basis) + 4 > max_dim:
            # harmonic pair
            d = rng.randint(0, n)
            u = add("u", d)
            if 2 * d == n:
                v = add("v", d)
            else:
                v = add("v", n - d)
            pairs.append((u, v, Fraction(rng.choice([1, -1, 2]))))
        else:
            # acyclic span a -> b, a' -> b' with <b, a'> = 1
            d = rng.randint(0, n - 1)
            a = add("a", d)
            b = add("b", d + 1)
            ap = add("p", n - d - 1)
            bp = add("q", n - d)
            diff[a] = {b: Fraction(rng.choice([1, 2, -1]))}
            diff[ap] = {bp: Fraction(rng.choice([1, -1]))}
            s = Fraction(rng.choice([1, -1]))
            # <m1 a, a'> = (-1)^{deg'a deg'a'} <m1 a', a> fixes the other value
            pairs.append((b, ap, s * diff[a][b]))
            dd = ((d - 1) * (n - d - 2)) % 2
            val = s * diff[a][b] ** 2 / diff[ap][bp]
            pairs.append((bp, a, -val if dd else val))
        if len(basis) >= max_dim - 1:
            break

    space = GradedSpace(basis, n)
    dim = space.dim
    P = rlinalg.zeros(dim, dim)
    for i, j, v in pairs:
        P[i][j] = P[i][j] + v
        swap = koszul_sign((space.shifted_degree(i), space.shifted_degree(j)),
                           "pairing-swap")
        P[j][i] = P[j][i] + swap * v
    M = rlinalg.zeros(dim, dim)
    for j, vec in diff.items():
        for i, c in vec.items():
            M[i][j] = c

    # random degree-preserving unimodular change of basis via shears
    S = rlinalg.identity(dim)
    for _ in range(rng.randint(0, 3 * dim)):
        i, j = rng.randrange(dim), rng.randrange(dim)
        if i == j or space.degree(i) != space.degree(j):
            continue
        c = Fraction(rng.choice([1, -1, 2]))
        for r in range(dim):
            S[r][j] = S[r][j] + c * S[r][i]
    Sinv = rlinalg.inverse(S)
    M = rlinalg.matmul(Sinv, rlinalg.matmul(M, S))
    P = rlinalg.matmul(rlinalg.transpose(S), rlinalg.matmul(P, S))

    pairing = Pairing(space, P)
    m1 = MultiOp(1, ZERO_BETA, "structure-map", {})
    for j in range(dim):
        vec = {i: M[i][j] for i in range(dim) if M[i][j]}
        if vec:
            m1.entries[(j,)] = vec
    ops = {(1, ZERO_BETA): m1} if not m1.is_zero() else {}
    return FilteredAinfAlgebra(space, pairing, DiscreteMonoid([]), 1, ops)


# -- random cyclic connection components ----------------------------------------


def _pairing_transpose_inverse(pairing):
    return rlinalg.inverse(rlinalg.transpose([list(r) for r in pairing.matrix]))


def random_cyclic_component(rng, algebra, k, beta, poly_degree=1, terms=2,
                            avoid=()):
    """Connection component (k, beta) whose pairing tensor is cyclic.

    Random raw tensor entries are symmetrised over rotations with the
    rotation sign, then unfolded through the inverse pairing.  Basis indices
    in `avoid` (the unit) never appear in input slots.
    """
    sp = algebra.space
    n = sp.ambient_degree
    usable = [i for i in range(sp.dim) if i not in avoid]
    tuples = []
    for full in _index_tuples(usable, k + 1):
        # <c(x_1..x_k), x_0> needs deg c + deg x_0 = n
        out_deg = sum(sp.shifted_degree(i) for i in full[1:]) - beta.maslov + 1
        if out_deg + sp.degree(full[0]) == n:
            tuples.append(full)
    tensor = {}
    if tuples:
        for _ in range(terms):
            full = rng.choice(tuples)
            coeffs = [Fraction(rng.randint(-2, 2)) for _ in range(poly_degree + 1)]
            if not any(coeffs):
                coeffs[0] = Fraction(1)
            val = PiecewisePoly.from_poly(coeffs)
            cur, sgn = full, 1
            for _ in range(k + 1):
                tensor[cur] = tensor.get(cur, _pp(0)) + sgn * val
                sd = tuple(sp.shifted_degree(i) for i in cur)
                # T(x_0..x_k) = (-1)^{d'_0 (d'_1+..+d'_k)} T(x_k, x_0..x_{k-1})
                sgn = sgn * koszul_sign(sd, "cyclic-rotation")
                cur = (cur[-1],) + cur[:-1]
    PTinv = _pairing_transpose_inverse(algebra.pairing)
    op = MultiOp(k, beta, "morphism-map", {})
    keys = {full[1:] for full in tensor}
    for key in keys:
        tvec = [tensor.get((x0,) + key, _pp(0)) for x0 in range(sp.dim)]
        out = {}
        for i in range(sp.dim):
            acc = _pp(0)
            for j in range(sp.dim):
                if PTinv[i][j] and tvec[j]:
                    acc = acc + PTinv[i][j] * tvec[j]
            if acc:
                out[i] = acc
        if out:
            op.entries[key] = out
    return op


def _index_tuples(indices, k):
    if k == 0:
        yield ()
        return
    for rest in _index_tuples(indices, k - 1):
        for i in indices:
            yield rest + (i,)


# -- gauge flow: isotopies generated by a connection ----------------------------


def gauge_isotopy(base, monoid, e_cut, rng=None, components=None,
                  poly_degree=1, n_components=2, max_arity=2):
    """Pseudo-isotopy whose connection is given (or random cyclic) and whose
    structure maps solve the defining differential equation level by level,
    starting from `base` at time zero with zero positive-energy part."""
    from .isotopy import isotopy_defect

    sp = base.space
    e_cut = Fraction(e_cut)
    avoid = (base.unit,) if base.unit is not None else ()
    betas = monoid.enumerate(e_cut)
    positive = [b for b in betas if not b.is_zero]
    c_ops = {}
    if components is not None:
        for (k, beta), op in components.items():
            c_ops[(k, beta)] = op
    else:
        if rng is None:
            rng = random.Random(0)
        for _ in range(n_components):
            beta = rng.choice(positive)
            k = rng.randint(1, max_arity)
            op = random_cyclic_component(rng, base, k, beta,
                                         poly_degree=poly_degree, avoid=avoid)
            if not op.is_zero():
                prev = c_ops.get((k, beta))
                if prev is None:
                    c_ops[(k, beta)] = op
                else:
                    op_add_into(prev, op)

    m_ops = {kb: _op_map(op, _pp) for kb, op in base.ops.items()}

    shim = PseudoIsotopy.__new__(PseudoIsotopy)
    shim.space, shim.pairing, shim.monoid = sp, base.pairing, monoid
    shim.e_cut, shim.unit = e_cut, base.unit
    shim.m_ops, shim.c_ops = m_ops, c_ops

    k_cap = base.default_k_max() + max((k for k, _ in c_ops), default=0)
    for beta in positive:   # sorted by energy, lower levels first
        for k in range(0, k_cap + 1):
            # the bracket only involves strictly lower energy structure maps
            bracket = isotopy_defect(shim, k, beta)
            if bracket.is_zero():
                continue
            acc = MultiOp(k, beta, "structure-map", {})
            seed_op = m_ops.get((k, beta))
            if seed_op is not None:
                op_add_into(acc, seed_op)
            op_add_into(acc, _op_map(bracket, lambda c: -1 * c.antiderivative_from(0)))
            if acc.is_zero():
                m_ops.pop((k, beta), None)
            else:
                m_ops[(k, beta)] = acc
    return PseudoIsotopy(sp, base.pairing, monoid, e_cut, m_ops, c_ops,
                         base.unit)


def random_gapped_algebra(seed, base=None, monoid=None, e_cut=2,
                          n_components=2, max_arity=2):
    """Gapped cyclic unital algebra: time-one slice of a random gauge flow."""
    from .models import acyclic_extended_model

    rng = random.Random(seed)
    if monoid is None:
        monoid = DiscreteMonoid([(1, 2)] if rng.random() < 0.5
                                else [(1, 0), (Fraction(3, 2), 2)])
    if base is None:
        base = acyclic_extended_model(e_cut=e_cut, monoid=monoid)
    iso = gauge_isotopy(base, monoid, e_cut, rng=rng,
                        n_components=n_components, max_arity=max_arity)
    return iso.slice_algebra(1)


def random_isotopy(seed, base=None, monoid=None, e_cut=2, n_components=2,
                   max_arity=2, poly_degree=1):
    """Random verified-by-construction pseudo-isotopy."""
    from .models import acyclic_extended_model

    rng = random.Random(seed)
    if monoid is None:
        monoid = DiscreteMonoid([(1, 2)])
    if base is None:
        base = acyclic_extended_model(e_cut=e_cut, monoid=monoid)
    return gauge_isotopy(base, monoid, e_cut, rng=rng,
                         n_components=n_components, max_arity=max_arity,
                         poly_degree=poly_degree)


def divisor_model(e_cut=2, g=(1, 2), m_build=4):
    """Torus-space instance whose positive-energy operations are constructed
    from a curvature seed by the divisor insertion formula, together with the
    matching intersection data.

    Returns (algebra, DivisorPairingData).  The arity-m component at the
    generator level is (1/m!) times the m-fold product of weighted divisor
    variables applied to the seed, so the insertion identity holds at every
    (k, m) split by construction."""
    from math import factorial

    from .models import torus_model
    from .deform import DivisorPairingData

    base = torus_model(e_cut=e_cut)
    sp = base.space
    one, e1, e2 = 0, 1, 2
    beta0 = MonoidElement(1, 2)
    monoid = DiscreteMonoid([beta0])
    weights = {e1: g[0], e2: g[1]}

    ops = dict(base.ops)
    seed_out = {one: Fraction(1)}
    for m in range(0, m_build + 1):
        op = MultiOp(m, beta0, "structure-map", {})
        for key in _index_tuples((e1, e2), m):
            q = Fraction(1, factorial(m))
            for i in key:
                q *= weights[i]
            op.entries[key] = {i: q * c for i, c in seed_out.items()}
        if not op.is_zero():
            ops[(m, beta0)] = op

    algebra = FilteredAinfAlgebra(sp, base.pairing, monoid, e_cut, ops,
                                  base.unit)
    # multiples of the generator meet the divisors proportionally
    pairing_data = DivisorPairingData(
        monoid,
        {(beta, i): int(beta.energy) * w
         for beta in monoid.enumerate(e_cut) if not beta.is_zero
         for i, w in weights.items()},
        e_cut=e_cut)
    return algebra, pairing_data
