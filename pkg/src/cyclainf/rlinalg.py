"""Small exact linear algebra over Q (list-of-lists of Fraction)."""

from __future__ import annotations

from fractions import Fraction


def mat(rows):
    return [[Fraction(x) for x in row] for row in rows]


def zeros(m, n):
    return [[Fraction(0)] * n for _ in range(m)]


def identity(n):
    out = zeros(n, n)
    for i in range(n):
        out[i][i] = Fraction(1)
    return out


def matmul(a, b):
    n, k = len(a), len(b)
    m = len(b[0]) if b else 0
    out = zeros(n, m)
    for i in range(n):
        ai = a[i]
        oi = out[i]
        for t in range(k):
            c = ai[t]
            if c:
                bt = b[t]
                for j in range(m):
                    if bt[j]:
                        oi[j] += c * bt[j]
    return out


def matvec(a, v):
    return [sum((a[i][j] * v[j] for j in range(len(v)) if v[j]), Fraction(0)) for i in range(len(a))]


def transpose(a):
    return [list(col) for col in zip(*a)] if a else []


def rref(a):
    """Reduced row echelon form; returns (R, pivot_columns)."""
    r = [row[:] for row in a]
    m = len(r)
    n = len(r[0]) if m else 0
    pivots = []
    lead = 0
    for col in range(n):
        piv = None
        for i in range(lead, m):
            if r[i][col]:
                piv = i
                break
        if piv is None:
            continue
        r[lead], r[piv] = r[piv], r[lead]
        inv = 1 / r[lead][col]
        r[lead] = [x * inv for x in r[lead]]
        for i in range(m):
            if i != lead and r[i][col]:
                c = r[i][col]
                r[i] = [x - c * y for x, y in zip(r[i], r[lead])]
        pivots.append(col)
        lead += 1
        if lead == m:
            break
    return r, pivots


def column_space_basis(a):
    """Basis of the column span: the pivot columns of a, in column order."""
    _, pivots = rref(a)
    cols = transpose(a)
    return [cols[j] for j in pivots]


def nullspace_basis(a):
    """Deterministic basis of {v : a v = 0}."""
    m = len(a)
    n = len(a[0]) if m else 0
    r, pivots = rref(a)
    free = [j for j in range(n) if j not in pivots]
    basis = []
    for j in free:
        v = [Fraction(0)] * n
        v[j] = Fraction(1)
        for row_i, pc in enumerate(pivots):
            v[pc] = -r[row_i][j]
        basis.append(v)
    return basis


def solve(a, b):
    """One exact solution of a x = b, or None if inconsistent."""
    m = len(a)
    n = len(a[0]) if m else 0
    aug = [a[i][:] + [Fraction(b[i])] for i in range(m)]
    r, pivots = rref(aug)
    if n in pivots:
        return None
    x = [Fraction(0)] * n
    for row_i, pc in enumerate(pivots):
        x[pc] = r[row_i][n]
    return x


def inverse(a):
    n = len(a)
    aug = [a[i][:] + identity(n)[i] for i in range(n)]
    r, pivots = rref(aug)
    if pivots != list(range(n)):
        raise ValueError("matrix is singular")
    return [row[n:] for row in r]


def rank(a):
    return len(rref(a)[1])


def extend_basis(have, candidates):
    """Greedily extend the independent list `have` by vectors from `candidates`."""
    out = list(have)
    for v in candidates:
        stacked = out + [v]
        if rank(stacked) == len(stacked):
            out.append(v)
    return out
