"""Small exactly-known reference algebras used by tests and docs."""

from __future__ import annotations

from fractions import Fraction

from .novikov import DiscreteMonoid, ZERO_BETA
from .graded import GradedSpace, Pairing, MultiOp
from .ainf import FilteredAinfAlgebra


def torus_model(e_cut=1):
    """Cohomology of the two-torus with its wedge product and integration
    pairing; m_1 = 0, unit in degree 0, ambient degree 2."""
    space = GradedSpace([("1", 0), ("e1", 1), ("e2", 1), ("vol", 2)], 2)
    one, e1, e2, vol = 0, 1, 2, 3
    deg = space.degrees

    def wedge_int(i, j):
        """integral of basis_i wedge basis_j over the torus"""
        table = {(one, vol): 1, (vol, one): 1, (e1, e2): 1, (e2, e1): -1}
        return Fraction(table.get((i, j), 0))

    pairing_matrix = [
        [(-1) ** (deg[i] * deg[j] + deg[i]) * wedge_int(i, j) for j in range(4)]
        for i in range(4)
    ]

    wedge = {  # basis products, zero ones omitted
        (one, one): (one, 1), (one, e1): (e1, 1), (one, e2): (e2, 1), (one, vol): (vol, 1),
        (e1, one): (e1, 1), (e2, one): (e2, 1), (vol, one): (vol, 1),
        (e1, e2): (vol, 1), (e2, e1): (vol, -1),
    }
    m2 = MultiOp(2, ZERO_BETA, "structure-map", {})
    for (i, j), (out, c) in wedge.items():
        sgn = (-1) ** (deg[i] * deg[j] + deg[i])
        m2.entries[(i, j)] = {out: Fraction(sgn * c)}

    return FilteredAinfAlgebra(
        space=space,
        pairing=Pairing(space, pairing_matrix),
        monoid=DiscreteMonoid([]),
        e_cut=e_cut,
        ops={(2, ZERO_BETA): m2},
        unit=one,
    )


def acyclic_extended_model(e_cut=1, monoid=None):
    """Six-dimensional cyclic unital algebra with nonzero differential.

    Unit u and volume class vol survive in cohomology; the pairs (a, b=da)
    and (a', b'=da') cancel. Signs were fixed by requiring all structure
    verifiers to pass; with this pairing there are exactly two valid sign
    patterns and we use the lexicographically first.
    """
    space = GradedSpace([("u", 0), ("a", 0), ("b", 1), ("ap", 1), ("bp", 2), ("vol", 2)], 2)
    U, A, B, AP, BP, VOL = range(6)
    deg = space.degrees

    P = [[Fraction(0)] * 6 for _ in range(6)]

    def setpair(i, j, v):
        P[i][j] = Fraction(v)
        P[j][i] = Fraction((-1) ** (1 + (deg[i] - 1) * (deg[j] - 1)) * v)

    setpair(U, VOL, 1)
    setpair(A, BP, 1)
    setpair(B, AP, 1)

    m1 = MultiOp(1, ZERO_BETA, "structure-map",
                 {(A,): {B: Fraction(1)}, (AP,): {BP: Fraction(1)}})
    m2 = MultiOp(2, ZERO_BETA, "structure-map", {})
    for x in range(6):
        m2.entries[(U, x)] = {x: Fraction(1)}
        if x != U:
            m2.entries[(x, U)] = {x: Fraction((-1) ** deg[x])}
    m2.entries[(A, BP)] = {VOL: Fraction(1)}
    m2.entries[(BP, A)] = {VOL: Fraction(1)}
    m2.entries[(B, AP)] = {VOL: Fraction(1)}
    m2.entries[(AP, B)] = {VOL: Fraction(-1)}

    return FilteredAinfAlgebra(
        space=space,
        pairing=Pairing(space, P),
        monoid=monoid if monoid is not None else DiscreteMonoid([]),
        e_cut=e_cut,
        ops={(1, ZERO_BETA): m1, (2, ZERO_BETA): m2},
        unit=U,
    )
