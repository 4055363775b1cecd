"""Exact coefficient arithmetic.

Coefficients are rational functions in the algebra's declared parameters
(central charge, level, ...) with Gaussian-rational coefficients.  Polynomials
are dicts mapping exponent tuples to Gaussian rationals; a Scalar is a reduced
fraction num/den of two such dicts with a monic denominator, so equal scalars
compare equal structurally and hash consistently.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import ScalarDomainError

_F0 = Fraction(0)
_F1 = Fraction(1)
_QI_RAW = object.__new__


def gbinom(n: int, k: int) -> int:
    """Binomial coefficient binom(n, k) for arbitrary integer n, k >= 0.

    Defined as n(n-1)...(n-k+1)/k!, which is what appears in all the
    expansion formulas with negative upper index.  Returns 0 for k < 0.
    """
    if k < 0:
        return 0
    num = 1
    for t in range(k):
        num *= n - t
    return num // math.factorial(k)


class QI:
    """Gaussian rational re + im*i with exact int or Fraction components.

    Integer values are kept as plain ints (int and Fraction mix exactly in
    ring arithmetic and agree on ==, hash and str); division goes through
    an explicit Fraction inverse so int/int never hits float division.
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is int or isinstance(re, Fraction) else Fraction(re)
        self.im = im if type(im) is int or isinstance(im, Fraction) else Fraction(im)

    def __add__(self, other):
        if type(other) is not QI:
            other = _as_qi(other)
        q = _QI_RAW(QI)
        q.re = self.re + other.re
        q.im = self.im + other.im
        return q

    __radd__ = __add__

    def __sub__(self, other):
        if type(other) is not QI:
            other = _as_qi(other)
        q = _QI_RAW(QI)
        q.re = self.re - other.re
        q.im = self.im - other.im
        return q

    def __rsub__(self, other):
        return _as_qi(other) - self

    def __neg__(self):
        q = _QI_RAW(QI)
        q.re = -self.re
        q.im = -self.im
        return q

    def __mul__(self, other):
        if type(other) is not QI:
            other = _as_qi(other)
        q = _QI_RAW(QI)
        si, oi = self.im, other.im
        if not si:
            if not oi:
                q.re = self.re * other.re
                q.im = 0
            else:
                q.re = self.re * other.re
                q.im = self.re * oi
        elif not oi:
            q.re = self.re * other.re
            q.im = si * other.re
        else:
            q.re = self.re * other.re - si * oi
            q.im = self.re * oi + si * other.re
        return q

    __rmul__ = __mul__

    def __truediv__(self, other):
        if type(other) is not QI:
            other = _as_qi(other)
        q = _QI_RAW(QI)
        if not other.im:
            if not other.re:
                raise ScalarDomainError("division by zero")
            inv = _F1 / other.re
            q.re = self.re * inv
            q.im = self.im * inv if self.im else 0
            return q
        n = other.re * other.re + other.im * other.im
        inv = _F1 / n
        q.re = (self.re * other.re + self.im * other.im) * inv
        q.im = (self.im * other.re - self.re * other.im) * inv
        return q

    def __rtruediv__(self, other):
        return _as_qi(other) / self

    def __eq__(self, other):
        if isinstance(other, QI):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __repr__(self):
        return f"QI({self.re!r}, {self.im!r})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            if self.im == 1:
                return "i"
            if self.im == -1:
                return "-i"
            return f"{self.im}*i"
        sign = "+" if self.im > 0 else "-"
        m = abs(self.im)
        im_s = "i" if m == 1 else f"{m}*i"
        return f"{self.re} {sign} {im_s}"


def _as_qi(x):
    if isinstance(x, QI):
        return x
    if isinstance(x, (int, Fraction)):
        return QI(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to Gaussian rational")


QI_ZERO = QI(0)
QI_ONE = QI(1)
QI_I = QI(0, 1)


# ---------------------------------------------------------------------------
# polynomial layer: dict[exponent tuple, QI], zero polynomial = {}


def _glex(item):
    exps = item[0]
    return (sum(exps), exps)


def _plead(f):
    """Leading (exponents, coeff) under graded lex with declaration order."""
    return max(f.items(), key=_glex)


def _padd(f, g):
    if len(g) > len(f):
        f, g = g, f
    out = dict(f)
    for e, c in g.items():
        s = out.get(e)
        s = c if s is None else s + c
        if s:
            out[e] = s
        elif e in out:
            del out[e]
    return out


def _pneg(f):
    return {e: -c for e, c in f.items()}


def _psub(f, g):
    return _padd(f, _pneg(g))


def _pscale(f, c):
    if not c:
        return {}
    return {e: v * c for e, v in f.items()}


def _pmul(f, g):
    if not f or not g:
        return {}
    if len(f) == 1:
        (e1, c1), = f.items()
        if not any(e1):
            return {e2: c1 * c2 for e2, c2 in g.items()}
        return {
            tuple(a + b for a, b in zip(e1, e2)): c1 * c2 for e2, c2 in g.items()
        }
    if len(g) == 1:
        (e2, c2), = g.items()
        if not any(e2):
            return {e1: c1 * c2 for e1, c1 in f.items()}
        return {
            tuple(a + b for a, b in zip(e1, e2)): c1 * c2 for e1, c1 in f.items()
        }
    out = {}
    for e1, c1 in f.items():
        for e2, c2 in g.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            s = out.get(e)
            s = c1 * c2 if s is None else s + c1 * c2
            if s:
                out[e] = s
            elif e in out:
                del out[e]
    return out


def _is_const(f):
    return len(f) == 0 or (len(f) == 1 and not any(next(iter(f))))


def _deg_v(f, v):
    return max((e[v] for e in f), default=-1)


def _coeff_v(f, v, d):
    """Coefficient of x_v^d as a polynomial with the v-slot zeroed."""
    out = {}
    for e, c in f.items():
        if e[v] == d:
            out[e[:v] + (0,) + e[v + 1 :]] = c
    return out


def _shift_v(f, v, s):
    return {e[:v] + (e[v] + s,) + e[v + 1 :]: c for e, c in f.items()}


def _pdivexact(f, g):
    """Exact polynomial division f/g; raises if g does not divide f."""
    if not f:
        return {}
    q = {}
    r = dict(f)
    ge, gc = _plead(g)
    while r:
        re_, rc = _plead(r)
        de = tuple(a - b for a, b in zip(re_, ge))
        if any(d < 0 for d in de):
            raise ScalarDomainError("inexact polynomial division")
        t = rc / gc
        q[de] = q.get(de, QI_ZERO) + t
        r = _psub(r, _pmul(g, {de: t}))
    return {e: c for e, c in q.items() if c}


def _content_v(f, v):
    """gcd of the univariate-in-x_v coefficients of f."""
    cont = {}
    for d in range(_deg_v(f, v) + 1):
        cf = _coeff_v(f, v, d)
        if cf:
            cont = _pgcd(cont, cf)
            if _is_const(cont):
                break
    return cont


def _prem_v(f, g, v):
    """Pseudo-remainder of f by g in the variable x_v (coefficients polys)."""
    dg = _deg_v(g, v)
    lg = _coeff_v(g, v, dg)
    r = dict(f)
    while r:
        dr = _deg_v(r, v)
        if dr < dg:
            break
        lr = _coeff_v(r, v, dr)
        r = _psub(_pmul(lg, r), _pmul(_shift_v(lr, v, dr - dg), g))
    return r


def _pgcd(f, g):
    """gcd of two polynomials over Q(i), via a primitive remainder sequence.

    The result is defined up to a unit; callers normalize at the Scalar
    level.  Any nonzero constant counts as gcd 1.
    """
    if not f:
        return dict(g)
    if not g:
        return dict(f)
    arity = len(next(iter(f)))
    one = {(0,) * arity: QI_ONE}
    if _is_const(f) or _is_const(g):
        return one
    v = next(i for i in range(arity) if _deg_v(f, i) > 0 or _deg_v(g, i) > 0)
    df, dg = _deg_v(f, v), _deg_v(g, v)
    if df == 0:
        return _pgcd(f, _content_v(g, v))
    if dg == 0:
        return _pgcd(_content_v(f, v), g)
    cf, cg = _content_v(f, v), _content_v(g, v)
    c = _pgcd(cf, cg)
    a = _pdivexact(f, cf)
    b = _pdivexact(g, cg)
    if _deg_v(a, v) < _deg_v(b, v):
        a, b = b, a
    while True:
        r = _prem_v(a, b, v)
        if not r:
            h = b
            break
        if _deg_v(r, v) == 0:
            h = one
            break
        a, b = b, _pdivexact(r, _content_v(r, v))
    if _is_const(h):
        return c
    return _pmul(c, h)


def _peval(f, values):
    """Evaluate a polynomial dict at a tuple of QI values."""
    total = QI_ZERO
    for e, c in f.items():
        term = c
        for v, p in zip(values, e):
            for _ in range(p):
                term = term * v
        total = total + term
    return total


def _frac_str(q: Fraction) -> str:
    return str(q)


def _poly_str(f, params):
    if not f:
        return "0"
    parts = []
    for exps, c in sorted(f.items(), key=_glex, reverse=True):
        mono = "*".join(
            p if e == 1 else f"{p}^{e}" for p, e in zip(params, exps) if e
        )
        if c.im == 0:
            neg, body = c.re < 0, _frac_str(abs(c.re))
        elif c.re == 0:
            m = abs(c.im)
            neg, body = c.im < 0, ("i" if m == 1 else f"{_frac_str(m)}*i")
        else:
            neg, body = False, f"({c})"
        if mono and body == "1":
            text = mono
        elif mono:
            text = f"{body}*{mono}"
        else:
            text = body
        parts.append(("-" if neg else "+", text))
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, text in parts[1:]:
        out += f" {sign} {text}"
    return out


class Scalar:
    """Canonical rational function in the ring's parameters over Q(i).

    Arithmetic keeps num/den gcd-reduced with a monic denominator under
    graded lex, so `==` and `hash` are structural.
    """

    __slots__ = ("params", "num", "den", "_key", "_one_flag", "_dc")

    def __init__(self, params, num, den, _canonical=False):
        self.params = params
        self._key = None
        self._one_flag = None
        if _canonical:
            self.num = num
            self.den = den
            self._dc = _is_const(den)
            return
        arity = len(params)
        one = {(0,) * arity: QI_ONE}
        if not den:
            raise ScalarDomainError("division by zero")
        if not num:
            self.num, self.den = {}, one
            self._dc = True
            return
        if _is_const(den):
            lc = next(iter(den.values()))
            self.num = num if lc == QI_ONE else _pscale(num, QI_ONE / lc)
            self.den = one
            self._dc = True
            return
        g = _pgcd(num, den)
        if not _is_const(g):
            num = _pdivexact(num, g)
            den = _pdivexact(den, g)
        _, lc = _plead(den)
        if lc != QI_ONE:
            inv = QI_ONE / lc
            num = _pscale(num, inv)
            den = _pscale(den, inv)
        if _is_const(den):
            den = one
            self._dc = True
        else:
            self._dc = False
        self.num = num
        self.den = den

    # -- ring structure ----------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Scalar):
            if other.params != self.params:
                raise ScalarDomainError(
                    "scalars from different parameter spaces cannot be mixed"
                )
            return other
        if isinstance(other, (int, Fraction, QI)):
            return _const_scalar(self.params, _as_qi(other))
        return None

    @property
    def _one_poly(self):
        return {(0,) * len(self.params): QI_ONE}

    def __add__(self, other):
        if type(other) is not Scalar:
            other = self._coerce(other)
            if other is None:
                return NotImplemented
        elif other.params != self.params:
            raise ScalarDomainError(
                "scalars from different parameter spaces cannot be mixed"
            )
        if self._dc and other._dc:
            # canonical constant denominators are exactly the monic one
            f, g = self.num, other.num
            if len(f) == 1 and len(g) == 1:
                e, c = next(iter(f.items()))
                e2, c2 = next(iter(g.items()))
                if e == e2:
                    c = c + c2
                    return Scalar(
                        self.params, {e: c} if c else {}, self.den, _canonical=True
                    )
            return Scalar(self.params, _padd(f, g), self.den, _canonical=True)
        if self.den == other.den:
            return Scalar(self.params, _padd(self.num, other.num), self.den)
        return Scalar(
            self.params,
            _padd(_pmul(self.num, other.den), _pmul(other.num, self.den)),
            _pmul(self.den, other.den),
        )

    __radd__ = __add__

    def __sub__(self, other):
        if type(other) is not Scalar:
            other = self._coerce(other)
            if other is None:
                return NotImplemented
        elif other.params != self.params:
            raise ScalarDomainError(
                "scalars from different parameter spaces cannot be mixed"
            )
        if self._dc and other._dc:
            f, g = self.num, other.num
            if len(f) == 1 and len(g) == 1:
                e, c = next(iter(f.items()))
                e2, c2 = next(iter(g.items()))
                if e == e2:
                    c = c - c2
                    return Scalar(
                        self.params, {e: c} if c else {}, self.den, _canonical=True
                    )
            return Scalar(self.params, _psub(f, g), self.den, _canonical=True)
        if self.den == other.den:
            return Scalar(self.params, _psub(self.num, other.num), self.den)
        return Scalar(
            self.params,
            _psub(_pmul(self.num, other.den), _pmul(other.num, self.den)),
            _pmul(self.den, other.den),
        )

    def __rsub__(self, other):
        return -(self - other)

    def __neg__(self):
        return Scalar(self.params, _pneg(self.num), self.den, _canonical=True)

    def __mul__(self, other):
        if type(other) is not Scalar:
            other = self._coerce(other)
            if other is None:
                return NotImplemented
        elif other.params != self.params:
            raise ScalarDomainError(
                "scalars from different parameter spaces cannot be mixed"
            )
        if self._dc and other._dc:
            if self.is_one:
                return other
            if other.is_one:
                return self
            return Scalar(
                self.params, _pmul(self.num, other.num), self.den, _canonical=True
            )
        return Scalar(
            self.params,
            _pmul(self.num, other.num),
            _pmul(self.den, other.den),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if not other.num:
            raise ScalarDomainError("division by zero")
        return Scalar(
            self.params,
            _pmul(self.num, other.den),
            _pmul(self.den, other.num),
        )

    def __rtruediv__(self, other):
        other = self._coerce(other)
        return other / self

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return (self.ring_one() / self) ** (-n)
        out = _const_scalar(self.params, QI_ONE)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base if n > 1 else base
            n >>= 1
        return out

    def ring_one(self):
        return _const_scalar(self.params, QI_ONE)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, QI)):
            other = _const_scalar(self.params, _as_qi(other))
        if not isinstance(other, Scalar):
            return NotImplemented
        return (
            self.params == other.params
            and self.num == other.num
            and self.den == other.den
        )

    def key(self):
        if self._key is None:
            self._key = (
                tuple(sorted(self.num.items(), key=_glex)),
                tuple(sorted(self.den.items(), key=_glex)),
            )
        return self._key

    def __hash__(self):
        return hash(self.key())

    def __bool__(self):
        return bool(self.num)

    @property
    def is_zero(self):
        return not self.num

    @property
    def is_one(self):
        # canonical form makes a constant denominator exactly the monic one
        flag = self._one_flag
        if flag is None:
            num = self.num
            if not self._dc or len(num) != 1:
                flag = False
            else:
                e, c = next(iter(num.items()))
                flag = not any(e) and c == QI_ONE
            self._one_flag = flag
        return flag

    def is_constant(self):
        return _is_const(self.num) and _is_const(self.den)

    @property
    def den_is_one(self):
        return self._dc

    # -- evaluation ----------------------------------------------------------

    def eval(self, bindings):
        """Substitute values for parameters, returning a constant Scalar.

        `bindings` maps parameter names to ints, Fractions, strings like
        "1/2", or QI values.  Every parameter actually occurring in the
        scalar must be bound; evaluation at a denominator zero raises.
        """
        values = []
        used = [False] * len(self.params)
        for e in list(self.num) + list(self.den):
            for v, p in enumerate(e):
                if p:
                    used[v] = True
        for v, name in enumerate(self.params):
            if name in bindings:
                values.append(_binding_value(bindings[name]))
            elif used[v]:
                raise ScalarDomainError(f"unbound parameter {name!r}")
            else:
                values.append(QI_ZERO)
        nv = _peval(self.num, values)
        dv = _peval(self.den, values)
        if not dv:
            raise ScalarDomainError("evaluation hits a pole of the coefficient")
        return _const_scalar(self.params, nv / dv)

    def as_qi(self) -> QI:
        if not self.is_constant():
            raise ScalarDomainError("scalar is not constant")
        if not self.num:
            return QI_ZERO
        return next(iter(self.num.values())) / next(iter(self.den.values()))

    # -- rendering -----------------------------------------------------------

    def __str__(self):
        num_s = _poly_str(self.num, self.params)
        if _is_const(self.den):
            return num_s
        if len(self.num) > 1:
            num_s = f"({num_s})"
        if len(self.den) == 1:
            (exps, _), = self.den.items()
            bare = sum(1 for e in exps if e) == 1
        else:
            bare = False
        den_s = _poly_str(self.den, self.params)
        if not bare:
            den_s = f"({den_s})"
        return f"{num_s}/{den_s}"

    def __repr__(self):
        return f"<Scalar {self}>"


def _binding_value(x):
    if isinstance(x, str):
        return QI(Fraction(x))
    return _as_qi(x)


def _const_scalar(params, c: QI):
    arity = len(params)
    one = {(0,) * arity: QI_ONE}
    num = {(0,) * arity: c} if c else {}
    return Scalar(params, num, one, _canonical=True)


class ScalarRing:
    """Factory for Scalars over a fixed tuple of parameter names."""

    __slots__ = ("params",)

    def __init__(self, params):
        params = tuple(params)
        if len(set(params)) != len(params):
            raise ScalarDomainError("duplicate parameter names")
        self.params = params

    @property
    def zero(self):
        return _const_scalar(self.params, QI_ZERO)

    @property
    def one(self):
        return _const_scalar(self.params, QI_ONE)

    @property
    def i(self):
        return _const_scalar(self.params, QI_I)

    def const(self, x):
        return _const_scalar(self.params, _as_qi(Fraction(x) if isinstance(x, str) else x))

    def param(self, name):
        if name not in self.params:
            raise ScalarDomainError(f"unknown parameter {name!r}")
        v = self.params.index(name)
        e = tuple(1 if j == v else 0 for j in range(len(self.params)))
        return Scalar(self.params, {e: QI_ONE}, {(0,) * len(self.params): QI_ONE}, _canonical=True)

    def __eq__(self, other):
        return isinstance(other, ScalarRing) and self.params == other.params

    def __hash__(self):
        return hash(self.params)

    def __repr__(self):
        return f"ScalarRing{self.params!r}"
