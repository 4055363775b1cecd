"""Rewriting engine for residue products and normal forms.

All products reduce to table lookups through a fixed rule order:
linearity, identity laws, derivative extraction on the left factor,
the composite-left expansion (Borcherds identity at p=0, r=-1, valid
for all integer q between mutually local fields), the composite-right
expansion for non-negative indices, and skew-symmetry reordering of
misordered (-1)-products.  Sum bounds come from the weight grading, so
every loop here is finite by construction; a step budget guards against
tables that break the grading assumptions.
"""

from __future__ import annotations

from .errors import OpeAlgError, StepBudgetExceeded
from .scalars import gbinom
from . import expr as ex
from .expr import NormalForm

DEFAULT_STEP_BUDGET = 10**6


class Engine:
    """Rewriting engine bound to one algebra.

    Results of monomial products and derivatives are memoized for the
    lifetime of the engine; cached dicts are shared and must never be
    mutated.
    """

    def __init__(self, algebra, step_budget: int = DEFAULT_STEP_BUDGET):
        self.algebra = algebra
        self.step_budget = step_budget
        self._steps = 0
        self._depth = 0
        self._gw = [g.weight for g in algebra.generators]
        self._one = algebra.ring.one
        self._rp_cache = {}
        self._deriv_cache = {}
        self._nf_cache = {}
        self._wcache = {}
        self._ints = {}

    # -- bookkeeping ---------------------------------------------------------

    @property
    def steps_used(self) -> int:
        return self._steps

    def clear_caches(self):
        self._rp_cache.clear()
        self._deriv_cache.clear()
        self._nf_cache.clear()

    def _tick(self):
        self._steps += 1
        if self._steps > self.step_budget:
            raise StepBudgetExceeded(
                f"rewriting exceeded the step budget of {self.step_budget}"
            )

    def _begin(self):
        self._depth += 1
        if self._depth == 1:
            self._steps = 0

    def _end(self):
        self._depth -= 1

    def int_scalar(self, n: int):
        """Cached integer Scalar in the algebra's ring."""
        s = self._ints.get(n)
        if s is None:
            s = self.algebra.ring.const(n)
            self._ints[n] = s
        return s

    _sc = int_scalar

    def _wmono(self, mono) -> int:
        w = self._wcache.get(mono)
        if w is None:
            w = sum(self._gw[g] + j for g, j in mono)
            self._wcache[mono] = w
        return w

    def _wrap(self, d) -> NormalForm:
        nf = NormalForm(self.algebra)
        nf.terms = d
        return nf

    # -- public operations -----------------------------------------------------

    def normalize(self, e) -> NormalForm:
        """Normal form of a field expression."""
        self._begin()
        try:
            return self._wrap(self._norm(e))
        finally:
            self._end()

    def residue_product(self, a: NormalForm, m: int, b: NormalForm) -> NormalForm:
        """The m-th residue product a_(m)b of two normal forms."""
        key = (id(a), m, id(b))
        hit = self._nf_cache.get(key)
        if hit is not None and hit[0] is a and hit[1] is b:
            return hit[2]
        self._begin()
        try:
            out = self._wrap(self._rp_dict_dict(a.terms, m, b.terms))
        finally:
            self._end()
        self._nf_cache[key] = (a, b, out)
        return out

    def derivative(self, a: NormalForm, j: int = 1) -> NormalForm:
        """Divided-power derivative d^(j) of a normal form."""
        if j < 0:
            raise OpeAlgError("derivative order must be >= 0")
        self._begin()
        try:
            out = {}
            for mono, c in a.terms.items():
                self._madd(out, self._deriv_mono(mono, j), c)
            return self._wrap(out)
        finally:
            self._end()

    def contraction(self, a: NormalForm, b: NormalForm):
        """Singular pairing: list of (i, a_(i)b) for the non-vanishing i >= 0,
        ascending.  Encodes the full singular part of a(z)b(w)."""
        bound = a.max_weight() + b.max_weight()
        out = []
        for i in range(0, max(0, bound)):
            nf = self.residue_product(a, i, b)
            if not nf.is_zero:
                out.append((i, nf))
        return out

    def locality_order(self, a: NormalForm, b: NormalForm) -> int:
        """Smallest N >= 0 with (z-w)^N a(z)b(w) regular."""
        if a.is_zero or b.is_zero:
            raise OpeAlgError("locality order of the zero field is undefined")
        pairs = self.contraction(a, b)
        return pairs[-1][0] + 1 if pairs else 0

    def skew(self, b: NormalForm, m: int, a: NormalForm) -> NormalForm:
        """b_(m)a computed through skew symmetry:
        sum_i (-1)^(m+i+1) d^(i)(a_(m+i)b)."""
        self._begin()
        try:
            out = {}
            bound = a.max_weight() + b.max_weight() - m
            for i in range(0, max(0, bound)):
                inner = self._rp_dict_dict(a.terms, m + i, b.terms)
                if not inner:
                    continue
                sgn = -1 if (m + i + 1) % 2 else 1
                der = {}
                for mono, c in inner.items():
                    self._madd(der, self._deriv_mono(mono, i), c)
                self._madd(out, der, self._sc(sgn))
            return self._wrap(out)
        finally:
            self._end()

    # -- raw dict layer --------------------------------------------------------

    def _norm(self, e):
        if isinstance(e, ex.Gen):
            g = self.algebra.gen_index(e.name)
            return {((g, 0),): self._one}
        if isinstance(e, ex.Ident):
            return {(): self._one}
        if isinstance(e, ex.Deriv):
            if e.order < 0:
                raise OpeAlgError("derivative order must be >= 0")
            inner = self._norm(e.child)
            out = {}
            for mono, c in inner.items():
                self._madd(out, self._deriv_mono(mono, e.order), c)
            return out
        if isinstance(e, ex.Prod):
            return self._rp_dict_dict(self._norm(e.left), e.m, self._norm(e.right))
        if isinstance(e, ex.Sum):
            out = {}
            for s, t in e.terms:
                if s.params != self.algebra.ring.params:
                    raise OpeAlgError(
                        "expression coefficients use a different parameter space"
                    )
                self._madd(out, self._norm(t), s)
            return out
        raise OpeAlgError(f"not a field expression: {e!r}")

    def _madd(self, acc, d, s=None):
        """acc += d * s, pruning zeros; acc is a fresh dict owned by caller."""
        if s is None or s.is_one:
            for mono, c in d.items():
                cur = acc.get(mono)
                cur = c if cur is None else cur + c
                if cur.is_zero:
                    acc.pop(mono, None)
                else:
                    acc[mono] = cur
        else:
            for mono, c in d.items():
                c = c * s
                cur = acc.get(mono)
                cur = c if cur is None else cur + c
                if cur.is_zero:
                    acc.pop(mono, None)
                else:
                    acc[mono] = cur

    def _rp_dict_dict(self, d1, m, d2):
        out = {}
        for X, cx in d1.items():
            cx_is_one = cx.is_one
            for Y, cy in d2.items():
                base = self._rp_mono(X, m, Y)
                if base:
                    self._madd(out, base, cy if cx_is_one else cx * cy)
        return out

    def _rp_mono_dict(self, X, m, d):
        out = {}
        for Y, cy in d.items():
            base = self._rp_mono(X, m, Y)
            if base:
                self._madd(out, base, cy)
        return out

    def _rp_mono(self, X, m, Y):
        key = (X, m, Y)
        hit = self._rp_cache.get(key)
        if hit is None:
            self._tick()
            hit = self._rp_mono_compute(X, m, Y)
            self._rp_cache[key] = hit
        return hit

    def _rp_mono_compute(self, X, m, Y):
        one = self._one
        if not X:
            # I_(m)Y: the identity has I(z)Y(w) regular with :IY: = Y
            return {Y: one} if m == -1 else {}
        if not Y:
            # X_(m)I = 0 for m >= 0, d^(-m-1)X otherwise
            if m >= 0:
                return {}
            return self._deriv_mono(X, -m - 1)
        if len(X) >= 2:
            return self._composite_left(X, m, Y)
        g, j = X[0]
        if m >= 0:
            if j:
                # (d^(j)G)_(m)Y = (-1)^j binom(m,j) G_(m-j)Y
                c = gbinom(m, j)
                if c == 0:
                    return {}
                if j % 2:
                    c = -c
                base = self._rp_mono(((g, 0),), m - j, Y)
                return self._scaled(base, c)
            if len(Y) >= 2:
                return self._composite_right(g, m, Y)
            h, l = Y[0]
            if l == 0:
                entry = self.algebra.table_entry(g, h, m)
                return dict(entry.terms) if entry is not None else {}
            # G_(m)(d^(l)H) = sum_s binom(m,s) d^(l-s)(G_(m-s)H)
            out = {}
            for s in range(0, min(l, m) + 1):
                c = gbinom(m, s)
                if c == 0:
                    continue
                inner = self._rp_mono(((g, 0),), m - s, ((h, 0),))
                if not inner:
                    continue
                der = {}
                for mono, cc in inner.items():
                    self._madd(der, self._deriv_mono(mono, l - s), cc)
                self._madd(out, der, self._sc(c))
            return out
        if m == -1:
            if ex.factor_key(X[0]) <= ex.factor_key(Y[0]):
                return {(X[0],) + Y: one}
            return self._skew_reorder(X[0], Y)
        # m <= -2: X_(m)Y = :d^(-m-1)X Y:, and d^(s)d^(j)G = binom(s+j,j) d^(s+j)G
        s = -m - 1
        c = gbinom(s + j, j)
        base = self._rp_mono(((g, s + j),), -1, Y)
        return self._scaled(base, c)

    def _scaled(self, d, c: int):
        if c == 1:
            return d
        if not d:
            return {}
        s = self._sc(c)
        return {mono: v * s for mono, v in d.items()}

    def _composite_left(self, X, m, Y):
        """(U_(-1)R)_(m)Y for a standard word X = U R, any integer m."""
        U, R = X[0], X[1:]
        wU = self._gw[U[0]] + U[1]
        wR = self._wmono(R)
        wY = self._wmono(Y)
        out = {}
        for i in range(0, max(0, wR + wY - m)):
            inner = self._rp_mono(R, m + i, Y)
            if inner:
                self._madd(out, self._rp_mono_dict((U,), -1 - i, inner))
        for i in range(0, max(0, wU + wY)):
            inner = self._rp_mono((U,), i, Y)
            if inner:
                out2 = {}
                for Z, cz in inner.items():
                    base = self._rp_mono(R, m - 1 - i, Z)
                    if base:
                        self._madd(out2, base, cz)
                self._madd(out, out2)
        return out

    def _composite_right(self, g, m, Y):
        """G_(m)(V_(-1)W) for m >= 0 via
        sum_{i=0}^{m} binom(m,i)(G_(i)V)_(m-i-1)W + V_(-1)(G_(m)W)."""
        V, W = Y[0], Y[1:]
        G = ((g, 0),)
        wGV = self._gw[g] + self._gw[V[0]] + V[1]
        out = {}
        for i in range(0, min(m, wGV - 1) + 1):
            c = gbinom(m, i)
            if c == 0:
                continue
            inner = self._rp_mono(G, i, (V,))
            if not inner:
                continue
            out2 = {}
            for Z, cz in inner.items():
                base = self._rp_mono(Z, m - i - 1, W)
                if base:
                    self._madd(out2, base, cz)
            self._madd(out, out2, self._sc(c))
        tail = self._rp_mono(G, m, W)
        if tail:
            self._madd(out, self._rp_mono_dict((V,), -1, tail))
        return out

    def _skew_reorder(self, x, Y):
        """x_(-1)Y with key(x) > key(Y[0]), through skew symmetry:
        sum_i (-1)^i d^(i)(Y_(i-1)x)."""
        wx = self._gw[x[0]] + x[1]
        wY = self._wmono(Y)
        out = {}
        for i in range(0, wx + wY + 1):
            inner = self._rp_mono(Y, i - 1, (x,))
            if not inner:
                continue
            der = {}
            for mono, c in inner.items():
                self._madd(der, self._deriv_mono(mono, i), c)
            self._madd(out, der, self._sc(-1 if i % 2 else 1))
        return out

    def _deriv_mono(self, X, j):
        if j == 0:
            return {X: self._one}
        key = (X, j)
        hit = self._deriv_cache.get(key)
        if hit is not None:
            return hit
        self._tick()
        out = {}
        if X:
            for split in _compositions(j, len(X)):
                coeff = 1
                word = []
                for (g, jg), s in zip(X, split):
                    coeff *= gbinom(s + jg, s)
                    word.append((g, jg + s))
                word = tuple(word)
                if ex.is_standard(word):
                    self._madd(out, {word: self._one}, self._sc(coeff))
                else:
                    # Leibniz can disorder the word; rebuild it right to left
                    cur = {(word[-1],): self._one}
                    for f in reversed(word[:-1]):
                        cur = self._rp_mono_dict((f,), -1, cur)
                    self._madd(out, cur, self._sc(coeff))
        self._deriv_cache[key] = out
        return out


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest
