"""Exact piecewise polynomial functions on [0,1] and [0,1]^2.

Coefficients and breakpoints are rational, so every derivative, product and
definite integral used by the isotopy checks is computed exactly.
"""

from __future__ import annotations

from fractions import Fraction


# -- plain polynomials (ascending coefficient tuples) -------------------------


def poly_trim(c):
    c = list(c)
    while c and not c[-1]:
        c.pop()
    return tuple(c)


def poly_add(a, b):
    n = max(len(a), len(b))
    return poly_trim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0)
                      for i in range(n)])


def poly_neg(a):
    return tuple(-x for x in a)


def poly_scale(a, q):
    return poly_trim([x * q for x in a])


def poly_mul(a, b):
    if not a or not b:
        return ()
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] += x * y
    return poly_trim(out)


def poly_eval(a, t):
    acc = Fraction(0)
    for c in reversed(a):
        acc = acc * t + c
    return acc


def poly_deriv(a):
    return poly_trim([a[i] * i for i in range(1, len(a))])


def poly_antideriv(a):
    return poly_trim([Fraction(0)] + [Fraction(a[i], i + 1) for i in range(len(a))])


def poly_compose_affine(a, p, q):
    """a(p*t + q) expanded."""
    out = ()
    lin = (Fraction(q), Fraction(p))
    power = (Fraction(1),)
    for c in a:
        if c:
            out = poly_add(out, poly_scale(power, c))
        power = poly_mul(power, lin)
    return out


class PiecewisePoly:
    """Rational-breakpoint piecewise polynomial on [0,1]."""

    __slots__ = ("breaks", "pieces")

    def __init__(self, breaks, pieces):
        breaks = tuple(Fraction(b) for b in breaks)
        if len(breaks) < 2 or breaks[0] != 0 or breaks[-1] != 1:
            raise ValueError("breakpoints must run from 0 to 1")
        if any(breaks[i] >= breaks[i + 1] for i in range(len(breaks) - 1)):
            raise ValueError("breakpoints must be strictly increasing")
        if len(pieces) != len(breaks) - 1:
            raise ValueError("need one piece per interval")
        self.breaks = breaks
        self.pieces = tuple(poly_trim(tuple(Fraction(c) for c in p)) for p in pieces)

    @classmethod
    def constant(cls, q):
        return cls((0, 1), ((Fraction(q),),))

    @classmethod
    def from_poly(cls, coeffs):
        return cls((0, 1), (tuple(Fraction(c) for c in coeffs),))

    def is_zero(self):
        return all(not p for p in self.pieces)

    def __bool__(self):
        return not self.is_zero()

    def simplify(self):
        """Merge adjacent intervals carrying identical polynomials."""
        breaks = [self.breaks[0]]
        pieces = []
        for i, p in enumerate(self.pieces):
            if pieces and pieces[-1] == p:
                breaks[-1] = self.breaks[i + 1]
            else:
                pieces.append(p)
                breaks.append(self.breaks[i + 1])
            breaks[-1] = self.breaks[i + 1]
        return PiecewisePoly(breaks, pieces)

    def _aligned(self, other):
        merged = sorted(set(self.breaks) | set(other.breaks))
        return merged, self._refine(merged), other._refine(merged)

    def _refine(self, merged):
        out = []
        j = 0
        for i in range(len(merged) - 1):
            while self.breaks[j + 1] <= merged[i]:
                j += 1
            out.append(self.pieces[j])
        return out

    def __add__(self, other):
        other = _coerce_pp(other)
        if other is NotImplemented:
            return NotImplemented
        merged, a, b = self._aligned(other)
        return PiecewisePoly(merged, [poly_add(x, y) for x, y in zip(a, b)])

    __radd__ = __add__

    def __neg__(self):
        return PiecewisePoly(self.breaks, [poly_neg(p) for p in self.pieces])

    def __sub__(self, other):
        other = _coerce_pp(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce_pp(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = _coerce_pp(other)
        if other is NotImplemented:
            return NotImplemented
        merged, a, b = self._aligned(other)
        return PiecewisePoly(merged, [poly_mul(x, y) for x, y in zip(a, b)])

    __rmul__ = __mul__

    def __eq__(self, other):
        other = _coerce_pp(other)
        if other is NotImplemented:
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        s = self.simplify()
        return hash((s.breaks, s.pieces))

    def evaluate(self, t):
        t = Fraction(t)
        if not 0 <= t <= 1:
            raise ValueError("argument outside [0,1]")
        for i in range(len(self.pieces)):
            if t < self.breaks[i + 1] or i == len(self.pieces) - 1:
                return poly_eval(self.pieces[i], t)

    def derivative(self):
        return PiecewisePoly(self.breaks, [poly_deriv(p) for p in self.pieces])

    def is_continuous(self):
        for i in range(len(self.pieces) - 1):
            b = self.breaks[i + 1]
            if poly_eval(self.pieces[i], b) != poly_eval(self.pieces[i + 1], b):
                return False
        return True

    def integrate(self, a, b):
        """Definite integral over [a, b] (a, b rational in [0,1], any order)."""
        a, b = Fraction(a), Fraction(b)
        if a > b:
            return -self.integrate(b, a)
        total = Fraction(0)
        for i in range(len(self.pieces)):
            lo = max(a, self.breaks[i])
            hi = min(b, self.breaks[i + 1])
            if lo < hi:
                F = poly_antideriv(self.pieces[i])
                total += poly_eval(F, hi) - poly_eval(F, lo)
        return total

    def antiderivative_from(self, a):
        """Continuous F with F' = self on each piece and F(a) = 0."""
        a = Fraction(a)
        antis = [poly_antideriv(p) for p in self.pieces]
        # running constants so the result is continuous
        consts = [Fraction(0)] * len(antis)
        for i in range(1, len(antis)):
            b = self.breaks[i]
            consts[i] = consts[i - 1] + poly_eval(antis[i - 1], b) - poly_eval(antis[i], b)
        val_a = None
        for i in range(len(antis)):
            if self.breaks[i] <= a <= self.breaks[i + 1]:
                val_a = poly_eval(antis[i], a) + consts[i]
                break
        pieces = [poly_add(antis[i], (consts[i] - val_a,)) for i in range(len(antis))]
        return PiecewisePoly(self.breaks, pieces)

    def compose_affine_pieces(self, phi):
        """Pullback along a monotone increasing piecewise-affine map of [0,1]
        onto [0,1]; phi is a PiecewisePoly whose pieces are affine."""
        # subdivide the s-axis at preimages of our breakpoints
        s_breaks = set(phi.breaks)
        for i in range(len(phi.pieces)):
            p = phi.pieces[i]
            if len(p) > 2:
                raise ValueError("reparametrisations must be piecewise affine")
            a1 = p[1] if len(p) == 2 else Fraction(0)
            a0 = p[0] if p else Fraction(0)
            for b in self.breaks:
                if a1:
                    s = (b - a0) / a1
                    if phi.breaks[i] < s < phi.breaks[i + 1]:
                        s_breaks.add(s)
        s_breaks = sorted(s_breaks)
        pieces = []
        for i in range(len(s_breaks) - 1):
            mid = (s_breaks[i] + s_breaks[i + 1]) / 2
            t_mid = phi.evaluate(mid)
            # affine piece of phi at mid
            for j in range(len(phi.pieces)):
                if phi.breaks[j] <= mid <= phi.breaks[j + 1]:
                    p = phi.pieces[j]
                    break
            a1 = p[1] if len(p) == 2 else Fraction(0)
            a0 = p[0] if p else Fraction(0)
            # polynomial piece of self containing t_mid
            for j in range(len(self.pieces)):
                if self.breaks[j] <= t_mid <= self.breaks[j + 1]:
                    target = self.pieces[j]
                    if t_mid < self.breaks[j + 1] or j == len(self.pieces) - 1:
                        break
            pieces.append(poly_compose_affine(target, a1, a0))
        return PiecewisePoly(s_breaks, pieces)

    def __repr__(self):
        return "PiecewisePoly(%r, %r)" % ([str(b) for b in self.breaks],
                                          [[str(c) for c in p] for p in self.pieces])


def _coerce_pp(x):
    if isinstance(x, PiecewisePoly):
        return x
    if isinstance(x, (int, Fraction)):
        return PiecewisePoly.constant(x)
    return NotImplemented


PP_ZERO = PiecewisePoly.constant(0)
PP_ONE = PiecewisePoly.constant(1)


# -- bivariate piecewise polynomials on a grid --------------------------------


def bipoly_trim(d):
    return {k: v for k, v in d.items() if v}


def bipoly_add(a, b):
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, Fraction(0)) + v
    return bipoly_trim(out)


def bipoly_mul(a, b):
    out = {}
    for (i, j), x in a.items():
        for (p, q), y in b.items():
            k = (i + p, j + q)
            out[k] = out.get(k, Fraction(0)) + x * y
    return bipoly_trim(out)


def bipoly_neg(a):
    return {k: -v for k, v in a.items()}


def bipoly_dt(a):
    return bipoly_trim({(i - 1, j): v * i for (i, j), v in a.items() if i})


def bipoly_ds(a):
    return bipoly_trim({(i, j - 1): v * j for (i, j), v in a.items() if j})


def bipoly_eval_t(a, t):
    """Partial evaluation t = const; returns univariate coefficient tuple in s."""
    out = {}
    for (i, j), v in a.items():
        out[j] = out.get(j, Fraction(0)) + v * t ** i
    n = max(out) + 1 if out else 0
    return poly_trim([out.get(j, Fraction(0)) for j in range(n)])


def bipoly_eval_s(a, s):
    out = {}
    for (i, j), v in a.items():
        out[i] = out.get(i, Fraction(0)) + v * s ** j
    n = max(out) + 1 if out else 0
    return poly_trim([out.get(i, Fraction(0)) for i in range(n)])


class PiecewiseBiPoly:
    """Grid-piecewise polynomial in (t, s) on [0,1]^2."""

    __slots__ = ("t_breaks", "s_breaks", "pieces")

    def __init__(self, t_breaks, s_breaks, pieces):
        self.t_breaks = tuple(Fraction(b) for b in t_breaks)
        self.s_breaks = tuple(Fraction(b) for b in s_breaks)
        for br in (self.t_breaks, self.s_breaks):
            if len(br) < 2 or br[0] != 0 or br[-1] != 1:
                raise ValueError("breakpoints must run from 0 to 1")
        self.pieces = tuple(tuple(bipoly_trim(dict(p)) for p in row) for row in pieces)
        if len(self.pieces) != len(self.t_breaks) - 1 or any(
                len(row) != len(self.s_breaks) - 1 for row in self.pieces):
            raise ValueError("grid shape mismatch")

    @classmethod
    def constant(cls, q):
        q = Fraction(q)
        return cls((0, 1), (0, 1), (({(0, 0): q} if q else {},),))

    @classmethod
    def from_bipoly(cls, d):
        return cls((0, 1), (0, 1), ((dict(d),),))

    @classmethod
    def from_pp_t(cls, pp):
        """Promote a piecewise polynomial in t (s-independent)."""
        return cls(pp.breaks, (0, 1),
                   tuple(({(i, 0): c for i, c in enumerate(p) if c},) for p in pp.pieces))

    @classmethod
    def from_pp_s(cls, pp):
        return cls((0, 1), pp.breaks,
                   (tuple({(0, j): c for j, c in enumerate(p) if c} for p in pp.pieces),))

    def is_zero(self):
        return all(not p for row in self.pieces for p in row)

    def __bool__(self):
        return not self.is_zero()

    def _aligned(self, other):
        tb = sorted(set(self.t_breaks) | set(other.t_breaks))
        sb = sorted(set(self.s_breaks) | set(other.s_breaks))
        return tb, sb, self._refine(tb, sb), other._refine(tb, sb)

    def _refine(self, tb, sb):
        out = []
        for i in range(len(tb) - 1):
            ti = next(a for a in range(len(self.t_breaks) - 1)
                      if self.t_breaks[a] <= tb[i] and tb[i + 1] <= self.t_breaks[a + 1])
            row = []
            for j in range(len(sb) - 1):
                sj = next(a for a in range(len(self.s_breaks) - 1)
                          if self.s_breaks[a] <= sb[j] and sb[j + 1] <= self.s_breaks[a + 1])
                row.append(self.pieces[ti][sj])
            out.append(tuple(row))
        return out

    def _binop(self, other, fn):
        other = _coerce_bp(other)
        if other is NotImplemented:
            return NotImplemented
        tb, sb, a, b = self._aligned(other)
        return PiecewiseBiPoly(tb, sb, [tuple(fn(x, y) for x, y in zip(ra, rb))
                                        for ra, rb in zip(a, b)])

    def __add__(self, other):
        return self._binop(other, bipoly_add)

    __radd__ = __add__

    def __neg__(self):
        return PiecewiseBiPoly(self.t_breaks, self.s_breaks,
                               [tuple(bipoly_neg(p) for p in row) for row in self.pieces])

    def __sub__(self, other):
        other = _coerce_bp(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce_bp(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        return self._binop(other, bipoly_mul)

    __rmul__ = __mul__

    def __eq__(self, other):
        other = _coerce_bp(other)
        if other is NotImplemented:
            return NotImplemented
        return (self - other).is_zero()

    def dt(self):
        return PiecewiseBiPoly(self.t_breaks, self.s_breaks,
                               [tuple(bipoly_dt(p) for p in row) for row in self.pieces])

    def ds(self):
        return PiecewiseBiPoly(self.t_breaks, self.s_breaks,
                               [tuple(bipoly_ds(p) for p in row) for row in self.pieces])

    def restrict_t(self, t):
        """Univariate piecewise polynomial in s at fixed t."""
        t = Fraction(t)
        ti = 0
        for a in range(len(self.t_breaks) - 1):
            if self.t_breaks[a] <= t <= self.t_breaks[a + 1]:
                ti = a
                if t < self.t_breaks[a + 1]:
                    break
        return PiecewisePoly(self.s_breaks,
                             [bipoly_eval_t(self.pieces[ti][j], t)
                              for j in range(len(self.s_breaks) - 1)])

    def restrict_s(self, s):
        s = Fraction(s)
        sj = 0
        for a in range(len(self.s_breaks) - 1):
            if self.s_breaks[a] <= s <= self.s_breaks[a + 1]:
                sj = a
                if s < self.s_breaks[a + 1]:
                    break
        return PiecewisePoly(self.t_breaks,
                             [bipoly_eval_s(self.pieces[i][sj], s)
                              for i in range(len(self.t_breaks) - 1)])

    def is_continuous(self):
        for i in range(len(self.t_breaks) - 2):
            b = self.t_breaks[i + 1]
            if self.restrict_t_side(b, i) != self.restrict_t_side(b, i + 1):
                return False
        for j in range(len(self.s_breaks) - 2):
            b = self.s_breaks[j + 1]
            if self.restrict_s_side(b, j) != self.restrict_s_side(b, j + 1):
                return False
        return True

    def restrict_t_side(self, t, ti):
        return PiecewisePoly(self.s_breaks,
                             [bipoly_eval_t(self.pieces[ti][j], t)
                              for j in range(len(self.s_breaks) - 1)])

    def restrict_s_side(self, s, sj):
        return PiecewisePoly(self.t_breaks,
                             [bipoly_eval_s(self.pieces[i][sj], s)
                              for i in range(len(self.t_breaks) - 1)])


def _coerce_bp(x):
    if isinstance(x, PiecewiseBiPoly):
        return x
    if isinstance(x, (int, Fraction)):
        return PiecewiseBiPoly.constant(x)
    return NotImplemented
