import random
from fractions import Fraction as F
from itertools import product

from cyclainf.novikov import MonoidElement, DiscreteMonoid, ZERO_BETA
from cyclainf.trees import (RibbonTree, LEAF, enumerate_trees, TreeOrder,
                            tree_partial_order, linear_extension_count,
                            order_polytope_volume, leaf_slots, subtree_at,
                            interior_paths)
from cyclainf.isotopy import integrate_allocations
from cyclainf.polyval import PiecewisePoly, poly_mul, poly_eval, poly_antideriv

B1 = MonoidElement(1, 2)
G1 = DiscreteMonoid([B1])
TRIVIAL = DiscreteMonoid([])


def brute_trees(monoid, beta, k, max_interior=4):
    """Independent generation: all planar shapes by (leaf, interior) counts,
    then all label assignments; filtered by stability and sum."""
    memo = {}

    def shapes(leaves, n_int):
        # shapes with exactly `leaves` leaves and `n_int` interior vertices
        key = (leaves, n_int)
        if key in memo:
            return memo[key]
        if n_int == 0:
            memo[key] = [LEAF] if leaves == 1 else []
            return memo[key]
        out = []
        for arity in range(0, leaves + n_int):
            for kid_lists in _distribute(leaves, n_int - 1, arity):
                out.extend(RibbonTree(ZERO_BETA, kids)
                           for kids in product(*kid_lists))
        memo[key] = out
        return out

    def _distribute(leaves, n_int, parts):
        if parts == 0:
            return [()] if (leaves, n_int) == (0, 0) else []
        return [(shapes(l, m),) + rest
                for l in range(0, leaves + 1)
                for m in range(0, n_int + 1)
                if shapes(l, m)
                for rest in _distribute(leaves - l, n_int - m, parts - 1)]

    labels = [b for b in monoid.enumerate(beta.energy + 1)]

    def labelings(shape, budget):
        # all stable label assignments, pruned by the energy budget
        if shape.is_leaf:
            return [(shape, ZERO_BETA)]
        out = []
        for lab in labels:
            if lab.energy > budget:
                continue
            if lab.is_zero and len(shape.children) < 2:
                continue
            combos = [((), lab)]
            for c in shape.children:
                combos = [(kids + (ct,), tot + cb)
                          for kids, tot in combos
                          for ct, cb in labelings(c, budget - tot.energy)
                          if tot.energy + cb.energy <= budget]
            out.extend((RibbonTree(lab, kids), tot) for kids, tot in combos)
        return out

    found = set()
    for n_int in range(0, max_interior + 1):
        for shape in shapes(k, n_int):
            if shape.is_leaf:
                if beta.is_zero and k == 1:
                    found.add(shape.encode())
                continue
            for t, tot in labelings(shape, beta.energy):
                if tot == beta:
                    found.add(t.encode())
    return sorted(found)


def _relabel(tree, labels):
    if tree.is_leaf:
        return tree
    beta = labels.pop(0)
    return RibbonTree(beta, tuple(_relabel(c, labels) for c in tree.children))


def _stable(tree):
    if tree.is_leaf:
        return True
    if tree.beta.is_zero and len(tree.children) < 2:
        return False
    return all(_stable(c) for c in tree.children)


def test_bare_edge_and_trivalent():
    assert [t.encode() for t in enumerate_trees(TRIVIAL, ZERO_BETA, 1)] == ["x"]
    two = enumerate_trees(TRIVIAL, ZERO_BETA, 2)
    assert len(two) == 1 and two[0].num_interior() == 1


def test_unlabeled_counts_match_planar_tree_numbers():
    # trees with all vertices of valence >= 3: 1, 3, 11 for k = 2, 3, 4
    assert [len(enumerate_trees(TRIVIAL, ZERO_BETA, k)) for k in (2, 3, 4)] \
        == [1, 3, 11]


def test_enumeration_matches_brute_force():
    G = DiscreteMonoid([(1, 2), (F(3, 2), 0)])
    for beta in (B1, MonoidElement(2, 4), MonoidElement(F(3, 2), 0)):
        cmax = int(beta.energy)  # lightest generator has energy 1
        for k in range(0, 4):
            lib = [t.encode() for t in enumerate_trees(G, beta, k)]
            assert lib == brute_trees(G, beta, k,
                                      max_interior=k + 2 * cmax)
            assert len(lib) == len(set(lib))


def test_invalid_label_gives_no_trees():
    assert enumerate_trees(G1, MonoidElement(F(1, 2), 0), 2) == []


def test_enumerated_trees_are_stable_with_correct_sums():
    for t in enumerate_trees(G1, MonoidElement(2, 4), 3, e_cut=3):
        assert _stable(t)
        assert t.total_beta() == MonoidElement(2, 4)
        assert t.num_leaves() == 3


def chain(n):
    t = RibbonTree(B1, (LEAF,))
    for _ in range(n - 1):
        t = RibbonTree(B1, (t,))
    return t


def test_partial_order_shapes():
    assert tree_partial_order(chain(3)).less_or_equal() == {(1, 0), (2, 1),
                                                            (2, 0)}
    vee = RibbonTree(B1, (RibbonTree(B1, (LEAF,)), RibbonTree(B1, (LEAF,))))
    order = tree_partial_order(vee)
    assert order.less_or_equal() == {(1, 0), (2, 0)}
    assert linear_extension_count(order) == 2
    assert order_polytope_volume(order) == F(1, 3)


def test_chain_volume_is_inverse_factorial():
    fact = 1
    for n in range(1, 7):
        fact *= n
        assert order_polytope_volume(tree_partial_order(chain(n))) \
            == F(1, fact)


def test_antichain_volume_is_one():
    assert order_polytope_volume(TreeOrder(4, frozenset())) == 1


def test_leaf_slots_and_subtrees():
    t = RibbonTree(B1, (RibbonTree(B1, (LEAF, LEAF)), LEAF))
    assert leaf_slots(t) == [1, 2, 3]
    assert subtree_at(t, (0,)).num_leaves() == 2
    assert subtree_at(t, ()).encode() == t.encode()


def simplex_sum(order, polys, tau0=0, tau1=1):
    """Oracle: sum over linear extensions of iterated simplex integrals."""
    n = order.n
    below = {i: set() for i in range(n)}
    for i, j in order.less_or_equal():
        below[j].add(i)
    exts = []

    def rec(seq, remaining):
        if not remaining:
            exts.append(seq)
            return
        for i in sorted(remaining):
            if below[i] & remaining:
                continue
            rec(seq + [i], remaining - {i})

    rec([], frozenset(range(n)))
    total = F(0)
    for ext in exts:
        f = (F(1),)
        for v in ext:
            f = poly_antideriv(poly_mul(f, polys[v]))
            shiftv = poly_eval(f, F(tau0))
            f = (f[0] - shiftv,) + f[1:]
        total += poly_eval(f, F(tau1))
    return total


def test_recursive_integration_matches_simplex_oracle():
    rng = random.Random(11)
    samples = (enumerate_trees(TRIVIAL, ZERO_BETA, 4)
               + enumerate_trees(G1, MonoidElement(2, 4), 2, e_cut=3)
               + [chain(4)])
    for t in samples:
        order = tree_partial_order(t)
        if order.n == 0 or order.n > 4:
            continue
        polys = {i: tuple(F(rng.randint(-3, 3)) for _ in range(4))
                 for i in range(order.n)}
        integrands = {i: PiecewisePoly.from_poly(p) for i, p in polys.items()}
        for tau0, tau1 in ((0, 1), (F(1, 3), F(3, 4))):
            assert integrate_allocations(t, integrands, tau0, tau1) \
                == simplex_sum(order, polys, tau0, tau1)


def test_constant_integrand_recovers_volume():
    one = PiecewisePoly.constant(1)
    for t in enumerate_trees(TRIVIAL, ZERO_BETA, 4):
        vol = integrate_allocations(t, {i: one for i in range(t.num_interior())})
        assert vol == order_polytope_volume(tree_partial_order(t))
