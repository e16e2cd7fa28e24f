"""Hodge-type splittings and the canonical (minimal) model transfer.

The splitting C = B + D + H picks the image of m1 (B), an isotropic lift of
its complement inside the pairing-annihilator of the harmonic part (D), and
harmonic representatives (H).  The propagator G inverts m1 from B back to D
and has degree -1; together with the projection P onto H it satisfies

    P o P = P,   id - P = -(m1 G + G m1),   G o G = 0,
    <Px, y> = <x, Py>,   <x, Gy> = (-1)^{deg x deg y} <y, Gx>.

The transferred structure and morphism are sums over stable trees; they are
computed by the equivalent root-split recursion with memoised components.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import rlinalg
from .novikov import ZERO_BETA, MonoidElement
from .graded import (
    GradedSpace,
    MultiOp,
    Pairing,
    apply_multiop,
    matrix_postcompose,
    op_add_into,
    tensor_compose,
)
from .ainf import FilteredAinfAlgebra, AinfMorphism


class HodgeError(ValueError):
    pass


@dataclass
class HodgeData:
    space: object
    pairing: object
    m1: list
    b_vectors: list
    d_vectors: list
    h_vectors: list
    tags: list                  # per combined-basis column: "B" | "D" | "H"
    proj: list                  # n x n projection onto H along B + D
    g: list                     # n x n propagator, degree -1
    h_space: object             # GradedSpace on the harmonic basis
    incl: list                  # n x h inclusion, columns = h_vectors
    h_coords: list              # h x n harmonic coordinates of the projection


def _pair(pairing, u, v):
    total = Fraction(0)
    for i, ci in enumerate(u):
        if ci:
            for j, cj in enumerate(v):
                if cj and pairing.matrix[i][j]:
                    total += ci * cj * pairing.matrix[i][j]
    return total


def _vector_degree(space, v):
    degs = {space.degree(i) for i, c in enumerate(v) if c}
    if len(degs) != 1:
        raise HodgeError("expected a degree-homogeneous vector, got degrees %s" % degs)
    return degs.pop()


def check_m1_duality(algebra):
    """<m1 x, y> = (-1)^{deg'x deg'y} <m1 y, x> on all basis pairs."""
    sp = algebra.space
    m1op = algebra.op(1, ZERO_BETA)
    out = []
    for x in range(sp.dim):
        for y in range(sp.dim):
            vx = m1op.entries.get((x,), {}) if m1op else {}
            vy = m1op.entries.get((y,), {}) if m1op else {}
            lhs = algebra.pairing.pair_vectors(vx, {y: Fraction(1)})
            rhs = algebra.pairing.pair_vectors(vy, {x: Fraction(1)})
            sgn = -1 if (sp.shifted_degree(x) * sp.shifted_degree(y)) % 2 else 1
            if lhs != sgn * rhs:
                out.append((sp.names[x], sp.names[y], lhs - sgn * rhs))
    return out


def build_hodge(algebra):
    """Deterministic splitting for a complex with cyclic differential.

    Preconditions: m1 squares to zero and is self-dual for the pairing; the
    pairing is nondegenerate.  If the algebra is unital the unit is placed
    first among the harmonic vectors, so the transferred structure stays
    strictly unital.
    """
    sp = algebra.space
    n = sp.dim
    m1op = algebra.op(1, ZERO_BETA)
    M = rlinalg.zeros(n, n)
    if m1op:
        for (j,), vec in m1op.entries.items():
            for i, c in vec.items():
                M[i][j] = c
    if any(any(row) for row in rlinalg.matmul(M, M)):
        raise HodgeError("differential does not square to zero")
    dual = check_m1_duality(algebra)
    if dual:
        raise HodgeError("differential is not self-dual for the pairing: %s" % dual[:3])

    b_vectors = rlinalg.column_space_basis(M)
    ker = rlinalg.nullspace_basis(M)
    ker_candidates = []
    if algebra.unit is not None:
        e_vec = [Fraction(1 if i == algebra.unit else 0) for i in range(n)]
        if not any(rlinalg.matvec(M, e_vec)):
            ker_candidates.append(e_vec)
    ker_candidates.extend(ker)
    extended = rlinalg.extend_basis(b_vectors, ker_candidates)
    h_vectors = extended[len(b_vectors):]

    # annihilator of H under the pairing
    if h_vectors:
        rows = [[sum(algebra.pairing.matrix[i][j] * h[j] for j in range(n))
                 for i in range(n)] for h in h_vectors]
        cprime = rlinalg.nullspace_basis(rows)
    else:
        cprime = rlinalg.identity(n)
    extended = rlinalg.extend_basis(b_vectors, cprime)
    d0 = extended[len(b_vectors):]
    m = len(b_vectors)
    if len(d0) != m:
        raise HodgeError("complement dimension mismatch (pairing degenerate?)")

    d_vectors = _isotropic_complement(algebra, b_vectors, d0)

    # nu inverts m1 from B to D; columns of T express m1(d_j) in the B basis
    if m:
        Bmat = rlinalg.transpose(b_vectors)          # n x m, columns b_i
        T = rlinalg.zeros(m, m)
        for j, d in enumerate(d_vectors):
            img = rlinalg.matvec(M, d)
            coeffs = _coords_in(Bmat, img)
            if coeffs is None:
                raise HodgeError("m1(D) escapes B")
            for i in range(m):
                T[i][j] = coeffs[i]
        Tinv = rlinalg.inverse(T)
        Dmat = rlinalg.transpose(d_vectors)          # n x m
    full = rlinalg.transpose(b_vectors + d_vectors + h_vectors)  # n x n
    if rlinalg.rank(full) != n:
        raise HodgeError("splitting does not span")
    full_inv = rlinalg.inverse(full)
    b_rows = full_inv[:m]
    h_rows = full_inv[2 * m:]
    if h_vectors:
        Hmat = rlinalg.transpose(h_vectors)
        proj = rlinalg.matmul(Hmat, h_rows)
    else:
        Hmat = [[] for _ in range(n)]
        proj = rlinalg.zeros(n, n)
    if m:
        g = rlinalg.matmul(Dmat, rlinalg.matmul(Tinv, b_rows))
        g = [[-x for x in row] for row in g]
    else:
        g = rlinalg.zeros(n, n)

    tags = ["B"] * m + ["D"] * m + ["H"] * len(h_vectors)
    h_basis = []
    for h in h_vectors:
        nz = [i for i, c in enumerate(h) if c]
        if len(nz) == 1 and h[nz[0]] == 1:
            name = sp.names[nz[0]]
        else:
            name = "h%d" % len(h_basis)
        h_basis.append((name, _vector_degree(sp, h)))
    h_space = GradedSpace(h_basis, sp.ambient_degree)

    data = HodgeData(
        space=sp, pairing=algebra.pairing, m1=M,
        b_vectors=b_vectors, d_vectors=d_vectors, h_vectors=h_vectors,
        tags=tags, proj=proj, g=g, h_space=h_space,
        incl=Hmat, h_coords=h_rows if h_vectors else [],
    )
    _validate_hodge(data)
    return data


def _coords_in(Bmat, v):
    return rlinalg.solve(Bmat, v) if Bmat and Bmat[0] else ([] if not any(v) else None)


def _isotropic_complement(algebra, b_vectors, d0):
    """Correct d0 by B so that <D, D> = 0, keeping degree homogeneity."""
    sp = algebra.space
    m = len(b_vectors)
    if m == 0:
        return []
    # normalise to <b_i, d_j> = delta_ij
    Mbd = [[_pair(algebra.pairing, b, d) for d in d0] for b in b_vectors]
    C = rlinalg.inverse(Mbd)
    n = sp.dim
    d_norm = []
    for j in range(m):
        v = [Fraction(0)] * n
        for l in range(m):
            if C[l][j]:
                for i in range(n):
                    v[i] += d0[l][i] * C[l][j]
        d_norm.append(v)
    deg_b = [_vector_degree(sp, b) for b in b_vectors]
    deg_d = [_vector_degree(sp, d) for d in d_norm]
    # unknowns A[j][l] (correction of d_j by b_l), degree-matched only
    unknowns = [(j, l) for j in range(m) for l in range(m) if deg_d[j] == deg_b[l]]
    index = {u: t for t, u in enumerate(unknowns)}
    rows, rhs = [], []
    for i in range(m):
        for j in range(m):
            s = _pair(algebra.pairing, d_norm[i], d_norm[j])
            row = [Fraction(0)] * len(unknowns)
            # <d_i + sum A[i][l] b_l, d_j + sum A[j][l] b_l> = 0, <b,b> = 0
            for l in range(m):
                if (j, l) in index:
                    row[index[(j, l)]] += _pair(algebra.pairing, d_norm[i], b_vectors[l])
                if (i, l) in index:
                    row[index[(i, l)]] += _pair(algebra.pairing, b_vectors[l], d_norm[j])
            if any(row) or s:
                rows.append(row)
                rhs.append(-s)
    if rows:
        sol = rlinalg.solve(rows, rhs)
        if sol is None:
            raise HodgeError("no isotropic complement found")
    else:
        sol = [Fraction(0)] * len(unknowns)
    out = []
    for j in range(m):
        v = list(d_norm[j])
        for l in range(m):
            t = index.get((j, l))
            if t is not None and sol[t]:
                for i in range(len(v)):
                    v[i] += sol[t] * b_vectors[l][i]
        out.append(v)
    return out


def _validate_hodge(data):
    n = data.space.dim
    P, G, M = data.proj, data.g, data.m1
    if rlinalg.matmul(P, P) != P:
        raise HodgeError("projection is not idempotent")
    if any(any(row) for row in rlinalg.matmul(G, G)):
        raise HodgeError("G o G != 0")
    # id - P = -(m1 G + G m1)
    lhs = [[Fraction(int(i == j)) - P[i][j] for j in range(n)] for i in range(n)]
    mg = rlinalg.matmul(M, G)
    gm = rlinalg.matmul(G, M)
    rhs = [[-(mg[i][j] + gm[i][j]) for j in range(n)] for i in range(n)]
    if lhs != rhs:
        raise HodgeError("homotopy identity id - P = -(m1 G + G m1) fails")
    sp = data.space
    for x in range(n):
        ex = [Fraction(int(i == x)) for i in range(n)]
        px = rlinalg.matvec(P, ex)
        gx = rlinalg.matvec(G, ex)
        for y in range(n):
            ey = [Fraction(int(i == y)) for i in range(n)]
            py = rlinalg.matvec(P, ey)
            gy = rlinalg.matvec(G, ey)
            if _pair(data.pairing, px, ey) != _pair(data.pairing, ex, py):
                raise HodgeError("projection is not self-adjoint")
            sgn = -1 if (sp.degree(x) * sp.degree(y)) % 2 else 1
            if _pair(data.pairing, ex, gy) != sgn * _pair(data.pairing, ey, gx):
                raise HodgeError("propagator symmetry fails")


# -- transferred structure ----------------------------------------------------


def _incl_op(data):
    op = MultiOp(1, ZERO_BETA, "morphism-map", {})
    for j in range(data.h_space.dim):
        vec = {i: data.incl[i][j] for i in range(data.space.dim) if data.incl[i][j]}
        op.entries[(j,)] = vec
    return op


def transfer_canonical(algebra, k_max=None, hodge=None):
    """Minimal-model operations on H and the inclusion-type morphism into A.

    Returns (canonical_algebra, morphism, hodge_data).  The recursion follows
    the root split of the stable-tree sum: for (k, beta) != (1, (0,0)),

        raw(k, beta) = sum_{root op (l, beta_v) != (1,(0,0))}
                       m_{l,beta_v} o (f_{k_1,beta_1} x ... x f_{k_l,beta_l})
        f = G o raw,   m^can = P_H o raw,

    with f_{1,(0,0)} the inclusion of H.
    """
    A = algebra
    if hodge is None:
        hodge = build_hodge(A)
    if k_max is None:
        k_max = A.default_k_max()
    betas = A.monoid.enumerate(A.e_cut)
    incl = _incl_op(hodge)

    f_maps = {(1, ZERO_BETA): incl}
    raw_cache = {}

    def f_comp(k, beta):
        key = (k, beta)
        if key in f_maps:
            return f_maps[key]
        raw = raw_op(k, beta)
        f = matrix_postcompose(hodge.g, raw, "morphism-map")
        f_maps[key] = f
        return f

    def raw_op(k, beta):
        key = (k, beta)
        if key in raw_cache:
            return raw_cache[key]
        raw = MultiOp(k, beta, "morphism-map", {})
        raw_cache[key] = raw
        for (l, beta_v), mop in A.ops.items():
            if (l, beta_v) == (1, ZERO_BETA):
                continue
            if beta_v.energy > beta.energy:
                continue
            rem_e = beta.energy - beta_v.energy
            rem_m = beta.maslov - beta_v.maslov
            rem = MonoidElement(rem_e, rem_m) if rem_e >= 0 else None
            if rem is None:
                continue
            for seq in _sequences_for(l, k, rem, betas):
                inners = []
                ok = True
                for kk, bb in seq:
                    fc = f_comp(kk, bb)
                    if fc is None or fc.is_zero():
                        ok = False
                        break
                    inners.append(fc)
                if not ok:
                    continue
                op_add_into(raw, tensor_compose(mop, inners, hodge.h_space, "morphism-map"))
        raw_cache[key] = raw
        return raw

    def _sequences_for(l, k, rem, betas):
        out = []

        def rec(acc, parts_left, k_left, e_left, m_left):
            if parts_left == 0:
                if k_left == 0 and e_left == 0 and m_left == 0:
                    out.append(tuple(acc))
                return
            for bb in betas:
                if bb.energy > e_left:
                    continue
                for kk in range(0, k_left + 1):
                    if kk == 0 and bb.is_zero:
                        continue
                    acc.append((kk, bb))
                    rec(acc, parts_left - 1, k_left - kk, e_left - bb.energy, m_left - bb.maslov)
                    acc.pop()

        rec([], l, k, rem.energy, rem.maslov)
        return out

    m_can = {}
    for beta in betas:
        for k in range(0, k_max + 1):
            if (k, beta) == (1, ZERO_BETA):
                # P m1 on H, zero because harmonic vectors are closed
                comp = _m1_on_h(hodge)
                if not comp.is_zero():
                    m_can[(k, beta)] = comp
                continue
            raw = raw_op(k, beta)
            if raw.is_zero():
                continue
            comp = matrix_postcompose(hodge.h_coords, raw, "structure-map")
            if not comp.is_zero():
                m_can[(k, beta)] = comp
            f_comp(k, beta)

    unit_idx = None
    if A.unit is not None:
        # the unit was placed first among the harmonic vectors when possible
        for j in range(hodge.h_space.dim):
            col = [hodge.incl[i][j] for i in range(A.space.dim)]
            if col == [Fraction(int(i == A.unit)) for i in range(A.space.dim)]:
                unit_idx = j
                break

    h_pairing = Pairing(hodge.h_space, [
        [_pair(A.pairing, hv, hw) for hw in hodge.h_vectors] for hv in hodge.h_vectors
    ])
    canonical = FilteredAinfAlgebra(
        space=hodge.h_space, pairing=h_pairing, monoid=A.monoid,
        e_cut=A.e_cut, ops=m_can, unit=unit_idx,
    )
    f_clean = {kb: op for kb, op in f_maps.items() if not op.is_zero()}
    morphism = AinfMorphism(canonical, A, f_clean)
    return canonical, morphism, hodge


def _m1_on_h(hodge):
    op = MultiOp(1, ZERO_BETA, "structure-map", {})
    n = hodge.space.dim
    for j in range(hodge.h_space.dim):
        hv = [hodge.incl[i][j] for i in range(n)]
        img = rlinalg.matvec(hodge.m1, hv)
        coords = rlinalg.matvec(hodge.h_coords, img) if hodge.h_coords else []
        vec = {i: c for i, c in enumerate(coords) if c}
        if vec:
            op.entries[(j,)] = vec
    return op


# -- flag values (cyclic symmetrised tree contributions) ----------------------


def tree_component_op(algebra, hodge, tree, cache=None):
    """f_Gamma for a single rooted tree: identity on leaves, G m (x) on
    vertices. Entries map harmonic basis tuples to ambient vectors."""
    if cache is None:
        cache = {}
    key = tree.encode()
    if key in cache:
        return cache[key]
    if tree.is_leaf:
        op = _incl_op(hodge)
    else:
        mop = algebra.op(len(tree.children), tree.beta)
        if mop is None:
            op = MultiOp(tree.num_leaves(), tree.total_beta(), "morphism-map", {})
        else:
            inners = [tree_component_op(algebra, hodge, c, cache) for c in tree.children]
            raw = tensor_compose(mop, inners, hodge.h_space, "morphism-map")
            op = matrix_postcompose(hodge.g, raw, "morphism-map")
    cache[key] = op
    return op


def flag_value(algebra, hodge, tree, path, edge, inputs, x0, cache=None):
    """Value of the cyclicly symmetrised tree contribution read off at the
    flag (vertex at `path`, incident `edge`).

    inputs: harmonic basis indices x_1..x_k; x0: harmonic basis index at the
    output slot. Proposition-level invariance: the value is independent of
    the chosen flag.
    """
    from .trees import components_at_flag, subtree_at

    if cache is None:
        cache = {}
    v = subtree_at(tree, path)
    gamma0, others = components_at_flag(tree, path, edge)
    slot_value = {0: x0}
    for s, idx in enumerate(inputs, start=1):
        slot_value[s] = idx

    def eval_component(comp):
        ctree, slots = comp
        op = tree_component_op(algebra, hodge, ctree, cache)
        key = tuple(slot_value[s] for s in slots)
        return op.entries.get(key, {})

    out_vecs = [eval_component(c) for c in others]
    mop = algebra.op(len(others), v.beta)
    if mop is None:
        top = {}
    else:
        top = apply_multiop(mop, algebra.space, out_vecs)
    g0_vec = eval_component(gamma0)
    value = algebra.pairing.pair_vectors(top, g0_vec)

    # rotation sign: rotate the cyclic word (x_1..x_k, x_0) to start at the
    # first input of the first non-flag component
    hs = hodge.h_space
    cyc = list(range(1, len(inputs) + 1)) + [0]
    if others and others[0][1]:
        pos = cyc.index(others[0][1][0])
    else:
        pos = 0
    lead, wrapped = cyc[:pos], cyc[pos:]
    e1 = sum(hs.shifted_degree(slot_value[s]) for s in wrapped)
    e2 = sum(hs.shifted_degree(slot_value[s]) for s in lead)
    if (e1 * e2) % 2:
        value = -value
    return value
