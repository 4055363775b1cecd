"""Exact mode-level oracle.

Builds highest-weight modules for a declared algebra at concrete parameter
values and applies field modes to states exactly, with brackets

    [G_m, H_n] = sum_{i >= 0} binom(m, i) (G_(i)H)_(m+n-i)

read straight off the table.  States are free PBW words in creation modes;
straightening happens lazily, so composite modes are evaluated exactly even
when intermediate states run above the cutoff - the cutoff only selects
which states and mode indices get compared.

Mode conventions follow the expansion A(z) = sum_n A_n z^(-n-1): the shift
of A_n on the level grading is wt(A) - 1 - n.  Two highest-weight
conventions are supported: the default "vacuum" (A_n kills the vacuum for
all n >= 0, creation modes are n < 0) and "verma" (every level-raising mode
is kept, zero modes act by supplied eigenvalues).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import OracleError
from .scalars import QI, QI_ZERO, QI_ONE, gbinom
from . import expr as ex


def _as_qi_value(x):
    if isinstance(x, QI):
        return x
    if isinstance(x, str):
        return QI(Fraction(x))
    if isinstance(x, (int, Fraction)):
        return QI(x)
    raise OracleError(f"binding values must be rational, got {x!r}")


class GradedModule:
    def __init__(self, algebra, bindings, cutoff, hw=None):
        self.algebra = algebra
        self.cutoff = cutoff
        self.bindings = {k: _as_qi_value(v) for k, v in bindings.items()}
        for p in algebra.ring.params:
            if p not in self.bindings:
                raise OracleError(f"missing parameter binding for {p!r}")
        self.convention = "vacuum" if hw is None else "verma"
        self._eig = {}
        if hw is not None:
            for name, val in hw.items():
                self._eig[algebra.gen_index(name)] = _as_qi_value(val)
        self._gw = [g.weight for g in algebra.generators]
        self._basis = {0: [()]}
        self._apply_cache = {}
        self._entry_cache = {}
        self._mono_cache = {}
        self._tree_cache = {}

    # -- creation structure ---------------------------------------------------

    def _shift(self, g, n):
        return self._gw[g] - 1 - n

    def _is_creation(self, g, n):
        if self.convention == "vacuum":
            return n < 0
        return self._shift(g, n) >= 1

    def _mode_key(self, g, n):
        # canonical factor order: larger level shifts first, then generator
        return (-self._shift(g, n), g)

    def basis(self, level):
        """PBW words of creation modes with total shift `level`, sorted."""
        if level < 0:
            return []
        got = self._basis.get(level)
        if got is not None:
            return got
        cands = []
        for s in range(level, 0, -1):
            for g in range(len(self._gw)):
                n = self._gw[g] - 1 - s
                if self._is_creation(g, n):
                    cands.append((g, n))
        cands.sort(key=lambda f: self._mode_key(*f))
        out = []

        def grow(prefix, remaining, start):
            if remaining == 0:
                out.append(tuple(prefix))
                return
            for idx in range(start, len(cands)):
                f = cands[idx]
                s = self._shift(*f)
                if s > remaining:
                    continue
                prefix.append(f)
                grow(prefix, remaining - s, idx)
                prefix.pop()

        grow([], level, 0)
        out.sort(key=lambda w: tuple(self._mode_key(*f) for f in w))
        self._basis[level] = out
        return out

    def dims(self, up_to=None):
        top = self.cutoff if up_to is None else up_to
        return [len(self.basis(l)) for l in range(top + 1)]

    def level_of(self, word):
        return sum(self._shift(g, n) for g, n in word)

    def state_label(self, word):
        if not word:
            return "|0>"
        return "*".join(f"{self.algebra.gen_name(g)}({n})" for g, n in word) + "|0>"

    # -- mode action ------------------------------------------------------------

    def _entry_terms(self, ga, gb, i):
        key = (ga, gb, i)
        got = self._entry_cache.get(key)
        if got is None:
            entry = self.algebra.table_entry(ga, gb, i)
            if entry is None:
                got = ()
            else:
                got = tuple(
                    (mono, c.eval(self.bindings).as_qi())
                    for mono, c in entry.terms.items()
                )
            self._entry_cache[key] = got
        return got

    def apply_gen_mode(self, g, n, vec):
        """Apply the generator mode G_n to a state vector {word: QI}."""
        out = {}
        for word, c in vec.items():
            if c:
                _merge(out, self._apply(g, n, word), c)
        return out

    def _apply(self, g, n, word):
        key = (g, n, word)
        hit = self._apply_cache.get(key)
        if hit is not None:
            return hit
        out = self._apply_compute(g, n, word)
        self._apply_cache[key] = out
        return out

    def _apply_compute(self, g, n, word):
        if not word:
            if self._is_creation(g, n):
                return {((g, n),): QI_ONE}
            if self.convention == "verma" and self._shift(g, n) == 0:
                eig = self._eig.get(g, QI_ZERO)
                return {(): eig} if eig else {}
            return {}
        if self._is_creation(g, n) and self._mode_key(g, n) <= self._mode_key(*word[0]):
            return {((g, n),) + word: QI_ONE}
        (h, m), rest = word[0], word[1:]
        # G_n (H_m X) = H_m (G_n X) + [G_n, H_m] X
        out = {}
        for w2, c2 in self._apply(g, n, rest).items():
            _merge(out, self._apply(h, m, w2), c2)
        loc = self.algebra.locality_bound(g, h)
        for i in range(loc):
            cb = gbinom(n, i)
            if cb == 0:
                continue
            terms = self._entry_terms(g, h, i)
            if not terms:
                continue
            vec = {rest: QI(cb)}
            for mono, ce in terms:
                _merge(out, self._mono_mode(mono, n + m - i, vec), ce)
        return out

    def _derived_mode(self, g, j, t, vec):
        """(d^(j)G)_t = (-1)^j binom(t, j) G_(t-j) on a state vector."""
        c = gbinom(t, j)
        if c == 0:
            return {}
        if j % 2:
            c = -c
        out = {}
        cq = QI(c)
        for word, cw in vec.items():
            if cw:
                _merge(out, self._apply(g, t - j, word), cw * cq)
        return out

    def _mono_mode(self, mono, n, vec):
        """Apply the n-th mode of a standard monomial to a state vector."""
        out = {}
        for word, cw in vec.items():
            if cw:
                _merge(out, self._mono_word(mono, n, word), cw)
        return out

    def _mono_word(self, mono, n, word):
        key = (mono, n, word)
        hit = self._mono_cache.get(key)
        if hit is not None:
            return hit
        if not mono:
            out = {word: QI_ONE} if n == -1 else {}
        elif len(mono) == 1:
            g, j = mono[0]
            out = self._derived_mode(g, j, n, {word: QI_ONE})
        else:
            (g, j), rest = mono[0], mono[1:]
            wU = self._gw[g] + j
            wR = sum(self._gw[gg] + jj for gg, jj in rest)
            lvl = self.level_of(word)
            out = {}
            # (U_(-1)R)_n = sum_{t<0} U_t R_(n-1-t) + sum_{t>=0} R_(n-1-t) U_t
            for t in range(n - wR - lvl, 0):
                v1 = self._mono_word(rest, n - 1 - t, word)
                if v1:
                    _merge(out, self._derived_mode(g, j, t, v1))
            for t in range(0, wU + lvl):
                v2 = self._derived_mode(g, j, t, {word: QI_ONE})
                if v2:
                    _merge(out, self._mono_mode(rest, n - 1 - t, v2))
        self._mono_cache[key] = out
        return out

    def apply_nf_mode(self, nf, n, vec):
        """Apply the n-th mode of a normal form to a state vector."""
        out = {}
        for mono, c in nf.terms.items():
            cq = c.eval(self.bindings).as_qi()
            if cq:
                _merge(out, self._mono_mode(mono, n, vec), cq)
        return out

    def apply_expr_mode(self, e, n, vec):
        """Apply the n-th mode of a field expression to a state vector."""
        out = {}
        for cq, tree in self._flatten(e):
            if cq:
                _merge(out, self._tree_mode(tree, n, vec), cq)
        return out

    def _flatten(self, e):
        if isinstance(e, ex.Sum):
            out = []
            for s, t in e.terms:
                cs = s.eval(self.bindings).as_qi()
                for cq, tree in self._flatten(t):
                    out.append((cs * cq, tree))
            return out
        if isinstance(e, ex.Deriv):
            return [(cq, ex.Deriv(e.order, t)) for cq, t in self._flatten(e.child)]
        if isinstance(e, ex.Prod):
            out = []
            for cl, tl in self._flatten(e.left):
                for cr, tr in self._flatten(e.right):
                    out.append((cl * cr, ex.Prod(e.m, tl, tr)))
            return out
        return [(QI_ONE, e)]

    def _tree_mode(self, tree, n, vec):
        out = {}
        for word, cw in vec.items():
            if cw:
                _merge(out, self._tree_word(tree, n, word), cw)
        return out

    def _tree_word(self, tree, n, word):
        key = (tree, n, word)
        hit = self._tree_cache.get(key)
        if hit is not None:
            return hit
        if isinstance(tree, ex.Gen):
            out = self._apply(self.algebra.gen_index(tree.name), n, word)
        elif isinstance(tree, ex.Ident):
            out = {word: QI_ONE} if n == -1 else {}
        elif isinstance(tree, ex.Deriv):
            c = gbinom(n, tree.order)
            if c == 0:
                out = {}
            else:
                if tree.order % 2:
                    c = -c
                inner = self._tree_word(tree.child, n - tree.order, word)
                cq = QI(c)
                out = {w: v * cq for w, v in inner.items()}
        elif isinstance(tree, ex.Prod):
            m = tree.m
            wa = ex.expr_weight(self.algebra, tree.left)
            wb = ex.expr_weight(self.algebra, tree.right)
            sgn_m = -1 if m % 2 else 1
            lvl = self.level_of(word)
            out = {}
            # (A_(m)B)_n = sum_i (-1)^i binom(m,i)
            #              [A_(m-i)B_(n+i) - (-1)^m B_(m+n-i)A_(i)]
            for i in range(0, max(0, wb - n + lvl)):
                c = gbinom(m, i)
                if m >= 0 and i > m:
                    break
                if c == 0:
                    continue
                if i % 2:
                    c = -c
                v1 = self._tree_word(tree.right, n + i, word)
                if v1:
                    _merge(out, self._tree_mode(tree.left, m - i, v1), QI(c))
            for i in range(0, max(0, wa + lvl)):
                c = gbinom(m, i)
                if m >= 0 and i > m:
                    break
                if c == 0:
                    continue
                c = -sgn_m * (-c if i % 2 else c)
                v2 = self._tree_word(tree.left, i, word)
                if v2:
                    _merge(out, self._tree_mode(tree.right, m + n - i, v2), QI(c))
        else:
            raise OracleError(f"cannot take modes of {tree!r}")
        self._tree_cache[key] = out
        return out

    # -- matrices and dumps -------------------------------------------------------

    def states(self):
        """All basis words up to the cutoff, with deterministic indices."""
        out = []
        for l in range(self.cutoff + 1):
            out.extend(self.basis(l))
        return out

    def mode_matrix(self, x, n):
        """Sparse matrix of the n-th mode of x on the truncated basis.

        x may be a NormalForm or a FieldExpr.  Returns {(row, col): QI} with
        indices into states(); rows above the cutoff are dropped, which is
        consistent because modes shift the level homogeneously.
        """
        states = self.states()
        index = {w: i for i, w in enumerate(states)}
        if isinstance(x, ex.NormalForm):
            w = x.weight()
            apply_one = lambda word: self.apply_nf_mode(x, n, {word: QI_ONE})
        else:
            w = ex.expr_weight(self.algebra, x)
            apply_one = lambda word: self.apply_expr_mode(x, n, {word: QI_ONE})
        if w is not None:
            shift = w - 1 - n
            if shift > self.cutoff or shift < -self.cutoff:
                raise OracleError(
                    f"cutoff {self.cutoff} too small for mode {n} (level shift {shift})"
                )
        out = {}
        for col, word in enumerate(states):
            for w2, c in apply_one(word).items():
                row = index.get(w2)
                if row is not None and c:
                    out[(row, col)] = c
        return out

    def dump(self):
        """JSON-ready snapshot: bindings, basis labels, generator mode matrices."""
        levels = [
            {
                "level": l,
                "dim": len(self.basis(l)),
                "states": [self.state_label(w) for w in self.basis(l)],
            }
            for l in range(self.cutoff + 1)
        ]
        gens = []
        for g, decl in enumerate(self.algebra.generators):
            modes = {}
            for n in range(decl.weight - 1 - self.cutoff, decl.weight + self.cutoff):
                mat = self.mode_matrix(ex.Gen(decl.name), n)
                modes[str(n)] = [
                    [r, c, str(v)] for (r, c), v in sorted(mat.items())
                ]
            gens.append({"name": decl.name, "weight": decl.weight, "modes": modes})
        return {
            "schema": "opealg.oracle/1",
            "algebra": self.algebra.name,
            "convention": self.convention,
            "cutoff": self.cutoff,
            "bindings": {k: str(v) for k, v in sorted(self.bindings.items())},
            "levels": levels,
            "generators": gens,
        }


def _merge(acc, d, scale=None):
    if scale is None:
        for w, c in d.items():
            cur = acc.get(w)
            cur = c if cur is None else cur + c
            if cur:
                acc[w] = cur
            elif w in acc:
                del acc[w]
    else:
        for w, c in d.items():
            c = c * scale
            cur = acc.get(w)
            cur = c if cur is None else cur + c
            if cur:
                acc[w] = cur
            elif w in acc:
                del acc[w]


def build_module(algebra, bindings, cutoff, hw=None) -> GradedModule:
    """Highest-weight module oracle.

    bindings: parameter values (all parameters must be bound).
    hw: None for the vacuum convention; or {generator name: eigenvalue} for
    a Verma-style module where zero modes act by the given eigenvalues and
    every level-raising mode is retained.
    """
    if cutoff < 0:
        raise OracleError("cutoff must be >= 0")
    return GradedModule(algebra, bindings, cutoff, hw=hw)


@dataclass
class OracleMismatch:
    state: str
    mode: int
    symbolic: dict
    direct: dict


@dataclass
class OracleVerifyReport:
    checked: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def verify_against_symbolic(module, nf, e, max_level=None) -> OracleVerifyReport:
    """Compare the engine's normal form `nf` of expression `e` mode by mode.

    For every basis state up to `max_level` (default: the module cutoff)
    and every mode index n that maps some tested level into [0, cutoff],
    apply both nf and e exactly and compare full state vectors.
    """
    top = module.cutoff if max_level is None else max_level
    weights = {ex.expr_weight(module.algebra, t) for _, t in module._flatten(e)}
    weights.discard(None)
    if nf.weight() is not None:
        weights.add(nf.weight())
    report = OracleVerifyReport()
    for w in sorted(weights):
        for n in range(w - 1 - top, w + top):
            shift = w - 1 - n
            lo = max(0, -shift)
            hi = min(top, top - shift)
            for lvl in range(lo, hi + 1):
                for word in module.basis(lvl):
                    vec = {word: QI_ONE}
                    got = module.apply_nf_mode(nf, n, vec)
                    want = module.apply_expr_mode(e, n, vec)
                    report.checked += 1
                    if got != want:
                        report.mismatches.append(
                            OracleMismatch(
                                module.state_label(word),
                                n,
                                {module.state_label(k): str(v) for k, v in got.items()},
                                {module.state_label(k): str(v) for k, v in want.items()},
                            )
                        )
    return report
