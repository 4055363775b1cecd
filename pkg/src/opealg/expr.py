"""Field expressions and normal forms.

An expression is a tree of generators, the identity field, divided-power
derivatives d^(j) = partial^j / j!, residue products A_(m)B, and scalar
linear combinations.  A normal form is a finite scalar combination of
standard monomials: right-nested (-1)-products of derived generators
:d^(j1)G1 d^(j2)G2 ... : whose factors are sorted by the key
(declaration index, -j), equal keys allowed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import OpeAlgError
from .scalars import QI, Scalar

# ((generator index, derivative order), ...); the empty tuple is the identity
Monomial = tuple


@dataclass(frozen=True)
class Gen:
    name: str


@dataclass(frozen=True)
class Ident:
    pass


@dataclass(frozen=True)
class Deriv:
    order: int
    child: "FieldExpr"


@dataclass(frozen=True)
class Prod:
    m: int
    left: "FieldExpr"
    right: "FieldExpr"


@dataclass(frozen=True)
class Sum:
    terms: tuple  # of (Scalar, FieldExpr) pairs


FieldExpr = Union[Gen, Ident, Deriv, Prod, Sum]

IDENT = Ident()


def gen(name: str) -> Gen:
    return Gen(name)


def ident() -> Ident:
    return IDENT


def deriv(j: int, e: FieldExpr) -> FieldExpr:
    """Divided-power derivative d^(j); order 0 is the identity map."""
    if not isinstance(j, int) or j < 0:
        raise OpeAlgError("derivative order must be a non-negative integer")
    if j == 0:
        return e
    return Deriv(j, e)


def prod(a: FieldExpr, m: int, b: FieldExpr) -> Prod:
    """The m-th residue product A_(m)B."""
    if not isinstance(m, int):
        raise OpeAlgError("product index must be an integer")
    return Prod(m, a, b)


def nop(a: FieldExpr, b: FieldExpr) -> Prod:
    """Normally ordered product :A B: = A_(-1)B."""
    return Prod(-1, a, b)


def lincomb(pairs) -> Sum:
    """Scalar linear combination; zero-coefficient terms are dropped."""
    kept = []
    for s, e in pairs:
        if not isinstance(s, Scalar):
            raise OpeAlgError("lincomb coefficients must be Scalars")
        if not s.is_zero:
            kept.append((s, e))
    return Sum(tuple(kept))


def scale(s: Scalar, e: FieldExpr) -> Sum:
    return lincomb([(s, e)])


def expr_weight(algebra, e: FieldExpr):
    """Conformal weight of an expression, or None if inhomogeneous.

    The zero expression (an empty Sum) also reports None.
    """
    if isinstance(e, Gen):
        return algebra.gen_weight(e.name)
    if isinstance(e, Ident):
        return 0
    if isinstance(e, Deriv):
        w = expr_weight(algebra, e.child)
        return None if w is None else w + e.order
    if isinstance(e, Prod):
        wl = expr_weight(algebra, e.left)
        wr = expr_weight(algebra, e.right)
        if wl is None or wr is None:
            return None
        return wl + wr - e.m - 1
    if isinstance(e, Sum):
        weights = {expr_weight(algebra, t) for s, t in e.terms if not s.is_zero}
        if len(weights) == 1:
            return weights.pop()
        return None
    raise OpeAlgError(f"not a field expression: {e!r}")


# ---------------------------------------------------------------------------
# standard monomials


def factor_key(f):
    """Sort key of a single derived generator d^(j)G: (gen index, -j)."""
    return (f[0], -f[1])


def is_standard(mono: Monomial) -> bool:
    return all(
        factor_key(mono[t]) <= factor_key(mono[t + 1]) for t in range(len(mono) - 1)
    )


def mono_weight(algebra, mono: Monomial) -> int:
    return sum(algebra.gen_weight_by_index(g) + j for g, j in mono)


def mono_sort_key(algebra, mono: Monomial):
    """Total order on standard monomials: weight, then length, then factors."""
    return (mono_weight(algebra, mono), len(mono), mono)


def mono_str(algebra, mono: Monomial) -> str:
    if not mono:
        return "I"
    parts = []
    for g, j in mono:
        name = algebra.gen_name(g)
        if j == 0:
            parts.append(name)
        elif j == 1:
            parts.append(f"d {name}")
        else:
            parts.append(f"d^({j}) {name}")
    if len(parts) == 1:
        return parts[0]
    return ":" + " ".join(parts) + ":"


def mono_to_expr(algebra, mono: Monomial) -> FieldExpr:
    if not mono:
        return IDENT
    factors = [deriv(j, Gen(algebra.gen_name(g))) for g, j in mono]
    out = factors[-1]
    for f in reversed(factors[:-1]):
        out = Prod(-1, f, out)
    return out


def _coeff_str(s: Scalar) -> str:
    text = str(s)
    if len(s.num) > 1 and s.den_is_one:
        return f"({text})"
    return text


class NormalForm:
    """A finite Scalar-weighted sum of standard monomials."""

    __slots__ = ("algebra", "terms", "_cached_key")

    def __init__(self, algebra, terms=None):
        self.algebra = algebra
        self.terms = {}
        self._cached_key = None
        if terms:
            for mono, coeff in terms.items() if isinstance(terms, dict) else terms:
                if not coeff.is_zero:
                    self.terms[mono] = coeff

    # construction helpers -------------------------------------------------

    @classmethod
    def zero(cls, algebra):
        return cls(algebra)

    def _check_same(self, other):
        if not isinstance(other, NormalForm):
            raise OpeAlgError("expected a NormalForm")
        if other.algebra is not self.algebra:
            raise OpeAlgError("normal forms over different algebras cannot be mixed")

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other):
        self._check_same(other)
        out = dict(self.terms)
        for mono, c in other.terms.items():
            s = out.get(mono)
            s = c if s is None else s + c
            if s.is_zero:
                out.pop(mono, None)
            else:
                out[mono] = s
        nf = NormalForm(self.algebra)
        nf.terms = out
        return nf

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        nf = NormalForm(self.algebra)
        nf.terms = {m: -c for m, c in self.terms.items()}
        return nf

    def __mul__(self, s):
        if isinstance(s, (int, Fraction, QI)):
            s = self.algebra.ring.const(s)
        if not isinstance(s, Scalar):
            return NotImplemented
        nf = NormalForm(self.algebra)
        if not s.is_zero:
            nf.terms = {m: c * s for m, c in self.terms.items()}
        return nf

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, NormalForm):
            return NotImplemented
        return self.algebra is other.algebra and self.terms == other.terms

    __hash__ = None

    def key(self):
        """Canonical hashable snapshot (sorted term tuple)."""
        if self._cached_key is None:
            self._cached_key = tuple(
                (m, c.key()) for m, c in self.sorted_terms()
            )
        return self._cached_key

    def sorted_terms(self):
        return sorted(
            self.terms.items(), key=lambda it: mono_sort_key(self.algebra, it[0])
        )

    def weight(self):
        """Common weight of all monomials, or None if mixed or zero."""
        weights = {mono_weight(self.algebra, m) for m in self.terms}
        if len(weights) == 1:
            return weights.pop()
        return None

    def max_weight(self) -> int:
        """Largest monomial weight; -1 for the zero normal form.

        Used for truncation bounds: a homogeneous product a_(n)b vanishes
        once n exceeds max_weight(a) + max_weight(b) - 1.
        """
        if not self.terms:
            return -1
        return max(mono_weight(self.algebra, m) for m in self.terms)

    def to_expr(self) -> FieldExpr:
        return lincomb(
            [(c, mono_to_expr(self.algebra, m)) for m, c in self.sorted_terms()]
        )

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for mono, coeff in self.sorted_terms():
            ms = mono_str(self.algebra, mono)
            if coeff.is_one:
                parts.append(ms)
            elif coeff == -1:
                parts.append(f"-{ms}")
            else:
                parts.append(f"{_coeff_str(coeff)}*{ms}")
        out = parts[0]
        for p in parts[1:]:
            if p.startswith("-"):
                out += " - " + p[1:]
            else:
                out += " + " + p
        return out

    def __repr__(self):
        return f"<NormalForm {self}>"
