"""Stable ribbon trees with monoid labels, their vertex orders and volumes.

A tree with k inputs and total label beta is either the bare edge (k = 1,
beta = (0,0), no interior vertex) or a root interior vertex carrying a label
beta_v and an ordered (planar, counterclockwise) tuple of subtrees.  Label
(0,0) vertices must have valence >= 3, which together with the energy gap
makes every enumeration finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .novikov import MonoidElement, ZERO_BETA


@dataclass(frozen=True)
class RibbonTree:
    """beta is None for the bare edge; otherwise the root vertex label."""

    beta: object = None
    children: tuple = ()

    @property
    def is_leaf(self):
        return self.beta is None

    def encode(self):
        """Canonical root-first preorder string."""
        if self.is_leaf:
            return "x"
        inner = ",".join(c.encode() for c in self.children)
        return "v[%s/%d](%s)" % (self.beta.energy, self.beta.maslov, inner)

    def num_leaves(self):
        if self.is_leaf:
            return 1
        return sum(c.num_leaves() for c in self.children)

    def total_beta(self):
        if self.is_leaf:
            return ZERO_BETA
        total = self.beta
        for c in self.children:
            total = total + c.total_beta()
        return total

    def num_interior(self):
        if self.is_leaf:
            return 0
        return 1 + sum(c.num_interior() for c in self.children)

    def __str__(self):
        return self.encode()


LEAF = RibbonTree()


def _child_sequences(elems, energy, maslov, k, tree_fn):
    """Ordered tuples of subtrees with total leaves k and total label
    (energy, maslov); tree_fn(beta, k) supplies candidate subtrees."""
    results = []

    def rec(acc, k_left, e_left, m_left):
        if k_left == 0 and e_left == 0 and m_left == 0:
            results.append(tuple(acc))
        # next child: any (beta_c, k_c) within budget carrying a tree
        seen = set()
        for beta_c, k_c in _label_choices(elems, e_left, k_left):
            if (beta_c, k_c) in seen:
                continue
            seen.add((beta_c, k_c))
            for t in tree_fn(beta_c, k_c):
                acc.append(t)
                rec(acc, k_left - k_c, e_left - beta_c.energy, m_left - beta_c.maslov)
                acc.pop()

    rec([], k, energy, maslov)
    return results


def _label_choices(elems, e_left, k_left):
    for beta_c in elems:
        if beta_c.energy > e_left:
            continue
        for k_c in range(0, k_left + 1):
            if k_c == 0 and beta_c.is_zero:
                continue  # Gr((0,0), 0) is empty
            if k_c == 1 and beta_c.is_zero:
                yield beta_c, k_c  # bare edge only
                continue
            yield beta_c, k_c


def enumerate_trees(monoid, beta, k, e_cut=None):
    """All stable trees with k inputs and total label beta, sorted by their
    canonical encoding.  Mirrors the root-split recursion: a tree is the bare
    edge or a root vertex whose label and subtree labels sum to beta."""
    window = beta.energy + 1 if e_cut is None else Fraction(e_cut)
    elems = monoid.enumerate(window)
    elem_set = set(elems)
    if beta not in elem_set and not beta.is_zero:
        return []
    memo = {}

    def gr(b, kk):
        key = (b, kk)
        if key in memo:
            return memo[key]
        memo[key] = []  # temporarily; recursion below never revisits (b, kk)
        out = []
        if kk == 1 and b.is_zero:
            out.append(LEAF)
        for beta_v in elems:
            if beta_v.energy > b.energy:
                continue
            rem_e = b.energy - beta_v.energy
            rem_m = b.maslov - beta_v.maslov
            for children in _child_sequences(elems, rem_e, rem_m, kk, gr):
                if beta_v.is_zero and len(children) < 2:
                    continue  # stability: label-(0,0) vertices have valence >= 3
                out.append(RibbonTree(beta_v, children))
        out.sort(key=RibbonTree.encode)
        memo[key] = out
        return out

    return gr(beta, k)


# -- partial order of interior vertices and its polytope ---------------------


@dataclass(frozen=True)
class TreeOrder:
    """Interior vertices in root-first preorder; pairs (i, j) mean that the
    time of vertex i is constrained below the time of its ancestor j."""

    n: int
    below: frozenset  # (descendant, ancestor) covering pairs

    def less_or_equal(self):
        """Transitive closure as a set of (i, j), i strictly below j."""
        adj = {i: set() for i in range(self.n)}
        for i, j in self.below:
            adj[i].add(j)
        out = set()
        for i in range(self.n):
            stack = list(adj[i])
            while stack:
                j = stack.pop()
                if (i, j) not in out:
                    out.add((i, j))
                    stack.extend(adj[j])
        return out


def tree_partial_order(tree):
    """Descendant vertices are constrained below their ancestors: a time
    allocation is admissible when it is monotone toward the root."""
    pairs = []
    counter = [0]

    def walk(node, parent_idx):
        if node.is_leaf:
            return
        idx = counter[0]
        counter[0] += 1
        if parent_idx is not None:
            pairs.append((idx, parent_idx))
        for c in node.children:
            walk(c, idx)

    walk(tree, None)
    return TreeOrder(counter[0], frozenset(pairs))


def linear_extension_count(order):
    """Number of linear extensions, by peeling minimal elements."""
    n = order.n
    above = {i: set() for i in range(n)}  # i -> elements that must come later
    below = {i: set() for i in range(n)}
    for i, j in order.less_or_equal():
        above[i].add(j)
        below[j].add(i)
    from functools import lru_cache

    full = frozenset(range(n))

    @lru_cache(maxsize=None)
    def count(remaining):
        if not remaining:
            return 1
        total = 0
        for i in remaining:
            if below[i] & remaining:
                continue  # not minimal
            total += count(remaining - {i})
        return total

    return count(full)


def order_polytope_volume(order):
    """Volume of {tau in [0,1]^n : tau_i <= tau_j for each order pair}."""
    n = order.n
    if n == 0:
        return Fraction(1)
    fact = 1
    for i in range(2, n + 1):
        fact *= i
    return Fraction(linear_extension_count(order), fact)


# -- planar structure: slots, subtree addressing, flags ----------------------


def leaf_slots(tree, start=1):
    """Global input slot numbers of the leaves, left to right."""
    if tree.is_leaf:
        return [start]
    slots = []
    cur = start
    for c in tree.children:
        s = leaf_slots(c, cur)
        slots.extend(s)
        cur += c.num_leaves()
    return slots


def subtree_at(tree, path):
    node = tree
    for j in path:
        node = node.children[j]
    return node


def interior_paths(tree):
    """Paths (tuples of child indices) of interior vertices, preorder."""
    out = []

    def walk(node, path):
        if node.is_leaf:
            return
        out.append(path)
        for j, c in enumerate(node.children):
            walk(c, path + (j,))

    walk(tree, ())
    return out


def _slot_start(tree, path):
    """First global slot used by the subtree at path."""
    start = 1
    node = tree
    for j in path:
        for c in node.children[:j]:
            start += c.num_leaves()
        node = node.children[j]
    return start


def _reroot_upward(tree, path):
    """The component of tree minus subtree_at(path), seen as a tree rooted at
    the cut; returns (component_tree, slot_list) with slot 0 marking the
    original output edge."""
    if not path:
        return LEAF, [0]
    parent_path, j = path[:-1], path[-1]
    parent = subtree_at(tree, parent_path)
    up_tree, up_slots = _reroot_upward(tree, parent_path)
    children = []
    slots = []
    order = list(range(j + 1, len(parent.children))) + [None] + list(range(0, j))
    for item in order:
        if item is None:
            children.append(up_tree)
            slots.extend(up_slots)
        else:
            sub = parent.children[item]
            children.append(sub)
            base = _slot_start(tree, parent_path + (item,))
            slots.extend(leaf_slots(sub, base))
    return RibbonTree(parent.beta, tuple(children)), slots


def components_at_flag(tree, path, edge):
    """Split at the flag (vertex at `path`, incident edge `edge`).

    edge 0 is the upward edge, edge i >= 1 the i-th child edge.  Returns
    (gamma0, others): gamma0 = (component through the flag edge, slots) and
    others = remaining components in counterclockwise order after the flag
    edge, each as (component, slots).
    """
    v = subtree_at(tree, path)
    if v.is_leaf:
        raise ValueError("flag vertex must be interior")
    up = _reroot_upward(tree, path)
    kids = []
    for j, c in enumerate(v.children):
        base = _slot_start(tree, path + (j,))
        kids.append((c, leaf_slots(c, base)))
    incident = [up] + kids  # cyclic order: up, child 1, ..., child l
    ncomp = len(incident)
    if not 0 <= edge < ncomp:
        raise ValueError("edge index out of range")
    gamma0 = incident[edge]
    others = [incident[(edge + r) % ncomp] for r in range(1, ncomp)]
    return gamma0, others
