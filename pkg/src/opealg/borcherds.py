"""Borcherds identity evaluation and window checks.

For fields a, b, c and integers p, q, r the identity reads

    sum_i binom(p,i) (a_(r+i)b)_(p+q-i)c
  = sum_i (-1)^i binom(r,i) [ a_(p+r-i)(b_(q+i)c)
                              - (-1)^r b_(q+r-i)(a_(p+i)c) ].

It holds unconditionally for p, r >= 0 and extends to all integers for
mutually local fields, which is what a declared singular table produces.
Every sum truncates through the weight grading.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .scalars import gbinom
from .expr import NormalForm


def borcherds_sides(engine, a, b, c, p, q, r):
    """Evaluate both sides for normal forms (a, b, c); returns (lhs, rhs)."""
    alg = engine.algebra
    wa, wb, wc = a.max_weight(), b.max_weight(), c.max_weight()
    lhs = NormalForm(alg)
    for i in range(0, max(0, wa + wb - r)):
        if p >= 0 and i > p:
            break
        coeff = gbinom(p, i)
        if coeff == 0:
            continue
        ab = engine.residue_product(a, r + i, b)
        if ab.is_zero:
            continue
        lhs = lhs + engine.residue_product(ab, p + q - i, c) * engine.int_scalar(coeff)
    rhs = NormalForm(alg)
    for i in range(0, max(0, wb + wc - q)):
        if r >= 0 and i > r:
            break
        coeff = gbinom(r, i)
        if coeff == 0:
            continue
        if i % 2:
            coeff = -coeff
        bc = engine.residue_product(b, q + i, c)
        if bc.is_zero:
            continue
        rhs = rhs + engine.residue_product(a, p + r - i, bc) * engine.int_scalar(coeff)
    sgn_r = -1 if r % 2 else 1
    for i in range(0, max(0, wa + wc - p)):
        if r >= 0 and i > r:
            break
        coeff = gbinom(r, i)
        if coeff == 0:
            continue
        coeff = -sgn_r * (-coeff if i % 2 else coeff)
        ac = engine.residue_product(a, p + i, c)
        if ac.is_zero:
            continue
        rhs = rhs + engine.residue_product(b, q + r - i, ac) * engine.int_scalar(coeff)
    return lhs, rhs


@dataclass
class BorcherdsFailure:
    pqr: tuple
    tier: str  # "unconditional" for p,r >= 0, else "local"
    lhs: str
    rhs: str


@dataclass
class BorcherdsReport:
    checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def check_borcherds(engine, a, b, c, window) -> BorcherdsReport:
    """Check the identity for all (p, q, r) in the inclusive window
    ((p1, p2), (q1, q2), (r1, r2))."""
    (p1, p2), (q1, q2), (r1, r2) = window
    report = BorcherdsReport()
    for p in range(p1, p2 + 1):
        for q in range(q1, q2 + 1):
            for r in range(r1, r2 + 1):
                report.checked += 1
                lhs, rhs = borcherds_sides(engine, a, b, c, p, q, r)
                if lhs != rhs:
                    tier = "unconditional" if p >= 0 and r >= 0 else "local"
                    report.failures.append(
                        BorcherdsFailure((p, q, r), tier, str(lhs), str(rhs))
                    )
    return report
