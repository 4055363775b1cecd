"""Generalized Wick theorems, assembled from contour-kernel integrals.

The two theorems expand a(z):bc:(w) and :ab:(z)c(w) into contractions of
contractions plus normally ordered remainders.  Both directions are built
here from the basic closed-contour integral

    (1/2 pi i) oint_{C_w} dx / ((z-x)^m (x-w)^n)
        = binom(m+n-2, n-1) / (z-w)^(m+n-1),   m, n >= 1,

applied to the operator-valued pieces, which keeps the assembly
independent of the engine's direct composite expansion of the same
products.
"""

from __future__ import annotations

from .errors import OpeAlgError
from .expr import NormalForm
from .scalars import gbinom


def contour_kernel(m: int, n: int):
    """Coefficient and (z-w) pole order of the contour integral above."""
    if m < 1 or n < 1:
        raise OpeAlgError("contour kernel requires pole orders m, n >= 1")
    return gbinom(m + n - 2, n - 1), m + n - 1


class SingularSeries:
    """Finitely many pole coefficients {order >= 1: NormalForm} in (z-w).

    `regular` optionally carries a (left, right) pair of normal forms used
    by renderers to show the normally ordered remainder of an OPE; it is
    ignored by equality, which is pole-by-pole.
    """

    __slots__ = ("algebra", "poles", "regular")

    def __init__(self, algebra, poles=None, regular=None):
        self.algebra = algebra
        self.poles = {}
        self.regular = regular
        if poles:
            for order, nf in poles.items():
                self.add(order, nf)

    def add(self, order: int, nf: NormalForm):
        if order < 1:
            raise OpeAlgError("pole orders must be >= 1")
        if nf.is_zero:
            return
        cur = self.poles.get(order)
        total = nf if cur is None else cur + nf
        if total.is_zero:
            self.poles.pop(order, None)
        else:
            self.poles[order] = total

    def orders(self):
        """Pole orders, highest first."""
        return sorted(self.poles, reverse=True)

    def get(self, order: int) -> NormalForm:
        return self.poles.get(order, NormalForm(self.algebra))

    @property
    def is_zero(self) -> bool:
        return not self.poles

    def __eq__(self, other):
        if not isinstance(other, SingularSeries):
            return NotImplemented
        if self.algebra is not other.algebra:
            return False
        if set(self.poles) != set(other.poles):
            return False
        return all(self.poles[k] == other.poles[k] for k in self.poles)

    __hash__ = None

    def __str__(self):
        if not self.poles:
            body = "0"
        else:
            parts = []
            for order in self.orders():
                nf = self.poles[order]
                num = str(nf)
                if len(nf.terms) > 1:
                    num = f"({num})"
                den = "(z-w)" if order == 1 else f"(z-w)^{order}"
                parts.append(f"{num}/{den}")
            body = " + ".join(parts)
        if self.regular is not None:
            left, right = self.regular
            body += f" + :{left} {right}:(w) + O(z-w)"
        return body

    def __repr__(self):
        return f"<SingularSeries {self}>"


def render_ope(engine, a: NormalForm, b: NormalForm) -> SingularSeries:
    """Full OPE view of a(z)b(w): the contraction plus a symbolic normally
    ordered remainder marker."""
    out = SingularSeries(engine.algebra, regular=(a, b))
    for i, nf in engine.contraction(a, b):
        out.add(i + 1, nf)
    return out


def wick_left(engine, a: NormalForm, b: NormalForm, c: NormalForm) -> SingularSeries:
    """Singular part of a(z) :bc:(w).

    Pieces: the a-b contraction taken at an intermediate point x produces
    contractions of contractions integrated against 1/((z-x)^(i+1)(x-w)^(j+2))
    plus a normally ordered remainder with only the Taylor constant term
    surviving the plain 1/(x-w) measure; the a-c contraction contributes
    its normally ordered pairing with b directly.
    """
    out = SingularSeries(engine.algebra)
    for i, x in engine.contraction(a, b):
        for j, y in engine.contraction(x, c):
            coeff, pole = contour_kernel(i + 1, j + 2)
            out.add(pole, y * engine.int_scalar(coeff))
        coeff, pole = contour_kernel(i + 1, 1)
        out.add(pole, engine.residue_product(x, -1, c) * engine.int_scalar(coeff))
    for i, y in engine.contraction(a, c):
        out.add(i + 1, engine.residue_product(b, -1, y))
    return out


def wick_right(engine, a: NormalForm, b: NormalForm, c: NormalForm) -> SingularSeries:
    """Singular part of :ab:(z) c(w).

    The z-side composite is opened at an intermediate point x under the
    1/(z-x) measure: b-c and a-c contractions each produce contraction
    products, and the spectator field is Taylor-expanded at w, each order
    integrated with the contour kernel (regular terms drop out).
    """
    out = SingularSeries(engine.algebra)
    for i, x in engine.contraction(b, c):
        for j in range(0, i + 1):
            coeff, pole = contour_kernel(1, i + 1 - j)
            out.add(
                pole,
                engine.residue_product(a, -j - 1, x) * engine.int_scalar(coeff),
            )
    for i, y in engine.contraction(a, c):
        for j, z in engine.contraction(b, y):
            coeff, pole = contour_kernel(1, i + j + 2)
            out.add(pole, z * engine.int_scalar(coeff))
        for j in range(0, i + 1):
            coeff, pole = contour_kernel(1, i + 1 - j)
            out.add(
                pole,
                engine.residue_product(b, -j - 1, y) * engine.int_scalar(coeff),
            )
    return out
