"""Algebra declarations: generators, singular OPE tables, presets.

An algebra packages a parameter ring, a list of weighted generators and a
table mapping (A, B, i) for i >= 0 to the singular part coefficients of
A(z)B(w), each a normal-form combination of weight wt A + wt B - i - 1.
The table is the single source of truth; everything else is computed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import AlgebraError, UnknownGeneratorError
from .scalars import QI, Scalar, ScalarRing, gbinom
from . import expr as ex
from .expr import NormalForm


@dataclass(frozen=True)
class GeneratorDecl:
    name: str
    weight: int


@dataclass(frozen=True)
class LieData:
    """Metadata for current-algebra presets.

    f_mixed[a][b][c] holds f^{ab}_c (indices 0-based), obtained from the
    fully raised constants by lowering with g_{ab} = 2*delta_{ab}.
    """

    dim: int
    h_dual: Fraction
    prefix: str
    level_param: str
    f_mixed: tuple


class Algebra:
    def __init__(self, name, ring, generators, lie=None):
        self.name = name
        self.ring = ring
        self.generators = tuple(generators)
        self.lie = lie
        self._index = {g.name: k for k, g in enumerate(self.generators)}
        self.table = {}  # (gA, gB, i) -> NormalForm
        self._locality = {}  # (gA, gB) -> 1 + max nonzero i

    # -- lookups -------------------------------------------------------------

    def gen_index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownGeneratorError(f"unknown generator {name!r}") from None

    def gen_name(self, idx: int) -> str:
        return self.generators[idx].name

    def gen_weight(self, name: str) -> int:
        return self.generators[self.gen_index(name)].weight

    def gen_weight_by_index(self, idx: int) -> int:
        return self.generators[idx].weight

    def table_entry(self, gA: int, gB: int, i: int):
        """Stored singular coefficient A_(i)B, or None when absent (zero)."""
        return self.table.get((gA, gB, i))

    def locality_bound(self, gA: int, gB: int) -> int:
        """1 + the largest i with a table entry for the pair; 0 if regular."""
        return self._locality.get((gA, gB), 0)

    # -- construction helpers ------------------------------------------------

    def gen(self, name: str) -> ex.Gen:
        self.gen_index(name)
        return ex.Gen(name)

    def nf_zero(self) -> NormalForm:
        return NormalForm(self)

    def nf_ident(self) -> NormalForm:
        return NormalForm(self, {(): self.ring.one})

    def nf_gen(self, name: str, j: int = 0) -> NormalForm:
        g = self.gen_index(name)
        return NormalForm(self, {((g, j),): self.ring.one})

    def nf_mono(self, mono) -> NormalForm:
        for g, j in mono:
            if not 0 <= g < len(self.generators) or j < 0:
                raise AlgebraError(f"bad monomial factor {(g, j)!r}")
        if not ex.is_standard(mono):
            raise AlgebraError(f"monomial {mono!r} is not in standard order")
        return NormalForm(self, {tuple(mono): self.ring.one})

    def _install(self, gA, gB, i, nf: NormalForm):
        if nf.is_zero:
            return
        self.table[(gA, gB, i)] = nf
        cur = self._locality.get((gA, gB), 0)
        if i + 1 > cur:
            self._locality[(gA, gB)] = i + 1

    # -- comparison ----------------------------------------------------------

    def same_content(self, other: "Algebra") -> bool:
        """Structural equality: parameters, generators, table entries."""
        if self.ring.params != other.ring.params:
            return False
        if self.generators != other.generators:
            return False
        if set(self.table) != set(other.table):
            return False
        return all(
            self.table[k].terms == other.table[k].terms for k in self.table
        )

    def __repr__(self):
        gens = ", ".join(f"{g.name}:{g.weight}" for g in self.generators)
        return f"<Algebra {self.name or '?'} [{gens}]>"


def _entry_to_nf(algebra: Algebra, e) -> NormalForm:
    """Convert a declared table entry to a NormalForm.

    Entries must already be linear combinations of standard monomials
    (identity, derived generators, ordered right-nested (-1)-words); the
    full rewriting engine is not available while the table is being built.
    """
    if isinstance(e, NormalForm):
        if e.algebra is not algebra:
            raise AlgebraError("table entry bound to a different algebra")
        return e
    if isinstance(e, ex.Sum):
        out = algebra.nf_zero()
        for s, t in e.terms:
            out = out + _entry_to_nf(algebra, t) * s
        return out
    coeff, factors = _linear_factor(algebra, e, [])
    mono = tuple(factors)
    if not ex.is_standard(mono):
        raise AlgebraError(
            f"table entry monomial {ex.mono_str(algebra, mono)} is not in standard order"
        )
    return NormalForm(algebra, {mono: coeff})


def _linear_factor(algebra, e, acc):
    """Flatten one entry branch into (scalar, factor list)."""
    if isinstance(e, ex.Ident):
        return algebra.ring.one, acc
    if isinstance(e, ex.Gen):
        acc.append((algebra.gen_index(e.name), 0))
        return algebra.ring.one, acc
    if isinstance(e, ex.Deriv):
        if isinstance(e.child, ex.Gen):
            acc.append((algebra.gen_index(e.child.name), e.order))
            return algebra.ring.one, acc
        if isinstance(e.child, ex.Deriv):
            # stacked divided powers: d^(a) d^(b) = binom(a+b, a) d^(a+b)
            inner = e.child
            total = e.order + inner.order
            c = algebra.ring.const(gbinom(total, e.order))
            s, acc = _linear_factor(algebra, ex.deriv(total, inner.child), acc)
            return c * s, acc
        raise AlgebraError("table entries may only derive single generators")
    if isinstance(e, ex.Prod):
        if e.m != -1:
            raise AlgebraError(
                "table entries must be normal-form combinations; "
                f"found a ({e.m})-product"
            )
        before = len(acc)
        s1, acc = _linear_factor(algebra, e.left, acc)
        if len(acc) != before + 1:
            raise AlgebraError(
                "table-entry words must be right-nested products of derived generators"
            )
        s2, acc = _linear_factor(algebra, e.right, acc)
        return s1 * s2, acc
    raise AlgebraError(f"unsupported table entry fragment {e!r}")


def define_algebra(name, params, generators, entries, lie=None) -> Algebra:
    """Build and validate an algebra from declarations.

    generators: iterable of (name, weight) with integer weight >= 1.
    entries: mapping (nameA, nameB, i) -> FieldExpr or NormalForm, i >= 0.
    """
    ring = ScalarRing(params)
    decls = []
    seen = set()
    for gname, w in generators:
        if gname in seen:
            raise AlgebraError(f"duplicate generator {gname!r}")
        if gname in ring.params:
            raise AlgebraError(f"generator {gname!r} shadows a parameter")
        seen.add(gname)
        if not isinstance(w, int) or w < 1:
            raise AlgebraError(
                f"generator {gname!r} has weight {w!r}; weights must be integers >= 1"
            )
        decls.append(GeneratorDecl(gname, w))
    alg = Algebra(name, ring, decls, lie=lie)
    for (na, nb, i), entry in entries.items():
        ga, gb = alg.gen_index(na), alg.gen_index(nb)
        if not isinstance(i, int) or i < 0:
            raise AlgebraError(
                f"table key ({na},{nb},{i}): singular indices must be integers >= 0"
            )
        nf = _entry_to_nf(alg, entry)
        if nf.is_zero:
            continue
        want = alg.gen_weight(na) + alg.gen_weight(nb) - i - 1
        got = nf.weight()
        if got != want:
            raise AlgebraError(
                f"table entry ({na},{nb},{i}) has weight {got}, expected {want}"
            )
        alg._install(ga, gb, i, nf)
    return alg


# ---------------------------------------------------------------------------
# presets


def preset_virasoro(name="virasoro") -> Algebra:
    alg = define_algebra(
        name,
        ("c",),
        [("T", 2)],
        {},
    )
    c = alg.ring.param("c")
    alg._install(0, 0, 3, NormalForm(alg, {(): c / 2}))
    alg._install(0, 0, 1, NormalForm(alg, {((0, 0),): alg.ring.const(2)}))
    alg._install(0, 0, 0, NormalForm(alg, {((0, 1),): alg.ring.one}))
    return alg


def preset_free_boson(name="free_boson") -> Algebra:
    alg = define_algebra(name, (), [("a", 1)], {})
    alg._install(0, 0, 1, alg.nf_ident())
    return alg


def _as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise AlgebraError(f"expected a rational value, got {x!r}")


def preset_current_algebra(
    f_raised, dim, h_dual, level_param="k", prefix="J", name=None
) -> Algebra:
    """Affine current algebra from fully raised structure constants.

    f_raised[a][b][c] = f^{abc} (0-based), rational values.  Conventions:
    the invariant metric is g^{ab} = delta^{ab}/2, so indices are lowered
    with g_{ab} = 2*delta_{ab} and the mixed constants are f^{ab}_c =
    2*f^{abc}.  Validates total antisymmetry, the Jacobi identity and the
    normalization sum_{a,b} f^{abc} f_{abd} = 2*h_dual*delta^c_d.
    """
    h_dual = _as_fraction(h_dual)
    f = [
        [[_as_fraction(f_raised[a][b][c]) for c in range(dim)] for b in range(dim)]
        for a in range(dim)
    ]
    for a in range(dim):
        for b in range(dim):
            for c in range(dim):
                if f[a][b][c] != -f[b][a][c] or f[a][b][c] != -f[a][c][b]:
                    raise AlgebraError(
                        f"structure constants not totally antisymmetric at ({a},{b},{c})"
                    )
    # mixed constants f^{ab}_c; lowering contributes the metric factor 2
    fm = [[[2 * f[a][b][c] for c in range(dim)] for b in range(dim)] for a in range(dim)]
    for a in range(dim):
        for b in range(dim):
            for c in range(dim):
                for e in range(dim):
                    s = sum(
                        fm[a][b][d] * fm[d][c][e]
                        + fm[b][c][d] * fm[d][a][e]
                        + fm[c][a][d] * fm[d][b][e]
                        for d in range(dim)
                    )
                    if s != 0:
                        raise AlgebraError(
                            f"Jacobi identity fails at indices ({a},{b},{c},{e})"
                        )
    # normalization: f_{abd} = 8 f^{abd} after lowering all three indices
    for c in range(dim):
        for d in range(dim):
            s = sum(8 * f[a][b][c] * f[a][b][d] for a in range(dim) for b in range(dim))
            want = 2 * h_dual if c == d else 0
            if s != want:
                raise AlgebraError(
                    f"normalization sum f^{{abc}}f_{{abd}} = 2*h_dual*delta fails at ({c},{d})"
                )
    lie = LieData(
        dim=dim,
        h_dual=h_dual,
        prefix=prefix,
        level_param=level_param,
        f_mixed=tuple(tuple(tuple(row) for row in plane) for plane in fm),
    )
    gens = [(f"{prefix}^{a + 1}", 1) for a in range(dim)]
    alg = define_algebra(name or "current", (level_param,), gens, {}, lie=lie)
    k = alg.ring.param(level_param)
    half_k = k / 2
    iunit = alg.ring.i
    for a in range(dim):
        alg._install(a, a, 1, NormalForm(alg, {(): half_k}))
        for b in range(dim):
            terms = {}
            for c in range(dim):
                if fm[a][b][c]:
                    terms[((c, 0),)] = iunit * alg.ring.const(fm[a][b][c])
            if terms:
                alg._install(a, b, 0, NormalForm(alg, terms))
    return alg


def preset_su2(level_param="k") -> Algebra:
    """Level-k su(2) currents: f^{abc} = eps^{abc}/2, dual Coxeter number 2."""
    eps = [[[0] * 3 for _ in range(3)] for _ in range(3)]
    for (a, b, c), s in (
        ((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
        ((1, 0, 2), -1), ((2, 1, 0), -1), ((0, 2, 1), -1),
    ):
        eps[a][b][c] = s
    f = [[[Fraction(eps[a][b][c], 2) for c in range(3)] for b in range(3)] for a in range(3)]
    return preset_current_algebra(f, 3, 2, level_param=level_param, prefix="J", name="su2")


# ---------------------------------------------------------------------------
# consistency checking


@dataclass
class SkewViolation:
    pair: tuple
    m: int
    stored: str
    derived: str


@dataclass
class BorcherdsViolation:
    triple: tuple
    pqr: tuple
    lhs: str
    rhs: str


@dataclass
class ConsistencyReport:
    skew: list = field(default_factory=list)
    borcherds: list = field(default_factory=list)
    checked_pairs: int = 0
    checked_triples: int = 0

    @property
    def ok(self) -> bool:
        return not self.skew and not self.borcherds


def check_algebra_consistency(algebra: Algebra, cutoff: int = 4) -> ConsistencyReport:
    """Verify the declared table against skew symmetry and the Borcherds
    identity on generator pairs/triples.

    Skew symmetry is checked at the table level: for each ordered pair
    (A, B) and each m with 0 <= m < locality, the stored B_(m)A must equal
    sum_i (-1)^(m+i+1) d^(i)(A_(m+i)B) built from the (A, B) entries.  The
    Borcherds identity is checked for all generator triples over the window
    p, q, r in [-2, cutoff].
    """
    from .engine import Engine
    from .borcherds import borcherds_sides

    maxw = max((g.weight for g in algebra.generators), default=1)
    if cutoff < maxw:
        raise AlgebraError(f"cutoff {cutoff} below the largest generator weight {maxw}")
    eng = Engine(algebra)
    report = ConsistencyReport()
    ngen = len(algebra.generators)
    for ga in range(ngen):
        for gb in range(ngen):
            loc = max(algebra.locality_bound(ga, gb), algebra.locality_bound(gb, ga))
            report.checked_pairs += 1
            for m in range(0, loc + 2):
                stored = algebra.table_entry(gb, ga, m)
                lhs = stored if stored is not None else algebra.nf_zero()
                rhs = algebra.nf_zero()
                for i in range(0, loc - m + 1):
                    entry = algebra.table_entry(ga, gb, m + i)
                    if entry is None:
                        continue
                    sgn = -1 if (m + i + 1) % 2 else 1
                    rhs = rhs + eng.derivative(entry, i) * sgn
                if lhs != rhs:
                    report.skew.append(
                        SkewViolation(
                            (algebra.gen_name(gb), algebra.gen_name(ga)),
                            m,
                            str(lhs),
                            str(rhs),
                        )
                    )
    window = range(-2, cutoff + 1)
    gens_nf = [algebra.nf_gen(g.name) for g in algebra.generators]
    for a in gens_nf:
        for b in gens_nf:
            for c in gens_nf:
                report.checked_triples += 1
                for p in window:
                    for q in window:
                        for r in window:
                            lhs, rhs = borcherds_sides(eng, a, b, c, p, q, r)
                            if lhs != rhs:
                                report.borcherds.append(
                                    BorcherdsViolation(
                                        (str(a), str(b), str(c)),
                                        (p, q, r),
                                        str(lhs),
                                        str(rhs),
                                    )
                                )
    return report
