"""Command-line driver: algebra-file DSL, expression queries, renderers.

The same tokenizer feeds three small recursive-descent parsers: scalar
expressions (parameters, rationals, the imaginary unit `i`), field
expressions (`:A B:` words, `A_(m) B` products, `d^(j) A` derivatives,
`sum(b){...}` index sums), and algebra definition files (`param`, `field`,
`ope`, `lie` statements).  Rendering goes the other way in three formats:
plain text matching the input grammar, JSON with versioned schemas, and
LaTeX laid out as poles in (z-w).

Exit codes: 0 success, 1 a requested check failed, 2 usage or input error,
3 step budget exhausted.  The budget comes from --step-budget, or the
OPEALG_STEP_BUDGET environment variable, or the engine default.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import expr as ex
from .algebra import (
    Algebra,
    check_algebra_consistency,
    ConsistencyReport,
    define_algebra,
    preset_free_boson,
    preset_su2,
    preset_virasoro,
)
from .borcherds import BorcherdsReport, check_borcherds
from .engine import DEFAULT_STEP_BUDGET, Engine
from .errors import AlgebraError, OpeAlgError, ParseError, StepBudgetExceeded
from .expr import NormalForm
from .oracle import build_module, OracleVerifyReport, verify_against_symbolic
from .scalars import Scalar
from .wick import render_ope, SingularSeries, wick_left, wick_right

RESERVED_NAMES = {"d", "I", "i", "sum"}

_KEYWORDS = {"param", "field", "ope", "lie", "weight", "level", "algebra", "let"}

ENV_BUDGET = "OPEALG_STEP_BUDGET"


# ---------------------------------------------------------------------------
# tokens


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"Token({self.kind!r}, {self.text!r}, {self.line}:{self.col})"


_PUNCT = set("(){}:;,^*/+-=_")


def tokenize(text: str):
    toks = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            col += 1
            i += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha():
            j = i
            while j < n and text[j].isalnum():
                j += 1
            toks.append(Token("name", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch in _PUNCT:
            toks.append(Token(ch, ch, line, col))
            col += 1
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks


class _TokenStream:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self, k=0):
        j = self.i + k
        return self.toks[j if j < len(self.toks) else -1]

    def bump(self):
        t = self.peek()
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, kind):
        return self.peek().kind == kind

    def expect(self, kind, what=None):
        t = self.peek()
        if t.kind != kind:
            shown = t.text or "end of input"
            self.err(f"expected {what or kind}, found {shown!r}", t)
        return self.bump()

    def err(self, msg, tok=None):
        t = tok or self.peek()
        raise ParseError(msg, t.line, t.col)


# ---------------------------------------------------------------------------
# expression parsing


class ExprParser(_TokenStream):
    """Field and scalar expressions over a fixed algebra.

    `env` maps script-defined names to already parsed expressions; they
    resolve before generators.  A scalar coefficient is a *-separated chain
    of factors (integers, parameters, `i`, parenthesized scalar sums,
    powers) and must be joined to its field with an explicit `*`.
    """

    def __init__(self, toks, algebra: Algebra, env=None):
        super().__init__(toks)
        self.algebra = algebra
        self.ring = algebra.ring
        self.env = env or {}
        self.gen_names = {g.name for g in algebra.generators}

    # scalars

    def _scalar_sum(self):
        s = self._scalar_product()
        while self.peek().kind in ("+", "-"):
            op = self.bump().kind
            rhs = self._scalar_product()
            s = s + rhs if op == "+" else s - rhs
        return s

    def _scalar_product(self):
        s = self._scalar_factor()
        while self.peek().kind in ("*", "/"):
            save = self.i
            op = self.bump().kind
            try:
                rhs = self._scalar_factor()
            except ParseError:
                self.i = save
                break
            s = s * rhs if op == "*" else s / rhs
        return s

    def _scalar_factor(self):
        if self.at("-"):
            self.bump()
            return -self._scalar_factor()
        s = self._scalar_atom()
        if self.at("^"):
            self.bump()
            t = self.expect("int", "an integer exponent")
            out = self.ring.one
            for _ in range(int(t.text)):
                out = out * s
            return out
        return s

    def _scalar_atom(self):
        t = self.peek()
        if t.kind == "int":
            self.bump()
            return self.ring.const(int(t.text))
        if t.kind == "(":
            self.bump()
            s = self._scalar_sum()
            self.expect(")")
            return s
        if t.kind == "name":
            if t.text == "i":
                self.bump()
                return self.ring.i
            if t.text in self.ring.params:
                self.bump()
                return self.ring.param(t.text)
            self.err(f"{t.text!r} is not a parameter", t)
        self.err("expected a scalar", t)

    # fields

    def parse_expression(self):
        e = self._additive()
        self.expect("eof", "end of expression")
        return e

    def _additive(self):
        pairs = []
        neg = False
        if self.peek().kind in ("+", "-"):
            neg = self.bump().kind == "-"
        c, f = self._term()
        pairs.append((-c if neg else c, f))
        while self.peek().kind in ("+", "-"):
            neg = self.bump().kind == "-"
            c, f = self._term()
            pairs.append((-c if neg else c, f))
        if len(pairs) == 1 and pairs[0][0] == self.ring.one:
            return pairs[0][1]
        return ex.lincomb(pairs)

    def _term(self):
        coeff = self._coeff_prefix()
        f = self._product()
        return (self.ring.one if coeff is None else coeff, f)

    def _coeff_prefix(self):
        save = self.i
        try:
            s = self._scalar_product()
        except ParseError:
            self.i = save
            return None
        if self.at("*"):
            self.bump()
            return s
        self.i = save
        return None

    def _product(self):
        f = self._atom()
        if self.at("_"):
            self.bump()
            self.expect("(")
            m = self._signed_int()
            self.expect(")")
            rhs = self._product()
            return ex.prod(f, m, rhs)
        return f

    def _signed_int(self):
        neg = False
        if self.at("-"):
            self.bump()
            neg = True
        t = self.expect("int", "an integer")
        v = int(t.text)
        return -v if neg else v

    def _atom(self):
        t = self.peek()
        if t.kind == ":":
            self.bump()
            items = [self._atom()]
            while not self.at(":"):
                if self.at("eof"):
                    self.err("unterminated normally ordered word", t)
                items.append(self._atom())
            self.bump()
            out = items[-1]
            for item in reversed(items[:-1]):
                out = ex.nop(item, out)
            return out
        if t.kind == "(":
            self.bump()
            e = self._additive()
            self.expect(")")
            return e
        if t.kind == "name":
            if t.text == "d":
                self.bump()
                j = 1
                if self.at("^"):
                    self.bump()
                    self.expect("(")
                    j = int(self.expect("int", "a derivative order").text)
                    self.expect(")")
                return ex.deriv(j, self._atom())
            if t.text == "I":
                self.bump()
                return ex.ident()
            if t.text == "sum":
                return self._sum(t)
            if t.text in self.env:
                self.bump()
                return self.env[t.text]
            n1, n2 = self.peek(1), self.peek(2)
            if n1.kind == "^" and n2.kind in ("int", "name"):
                cand = f"{t.text}^{n2.text}"
                if cand in self.gen_names:
                    self.bump()
                    self.bump()
                    self.bump()
                    return ex.gen(cand)
            if t.text in self.gen_names:
                self.bump()
                return ex.gen(t.text)
            if t.text in self.ring.params:
                self.err(f"parameter {t.text!r} used where a field is expected", t)
            self.err(f"unknown generator {t.text!r}", t)
        if t.kind == "int":
            self.err("number used where a field is expected (write n*F)", t)
        shown = t.text or "end of input"
        self.err(f"expected a field expression, found {shown!r}", t)

    def _sum(self, kw):
        self.bump()
        self.expect("(")
        var = self.expect("name", "an index variable").text
        self.expect(")")
        if var in RESERVED_NAMES:
            self.err(f"sum index {var!r} is a reserved name", kw)
        if var in self.ring.params or var in self.gen_names or var in self.env:
            self.err(f"sum index {var!r} shadows an existing name", kw)
        self.expect("{")
        depth = 1
        body = []
        while True:
            t = self.bump()
            if t.kind == "eof":
                self.err("unterminated sum body", kw)
            if t.kind == "{":
                depth += 1
            elif t.kind == "}":
                depth -= 1
                if depth == 0:
                    break
            body.append(t)
        lie = self.algebra.lie
        if lie is None:
            self.err("sum(..){..} needs an algebra with a Lie index range", kw)
        eof = Token("eof", "", kw.line, kw.col)
        pieces = []
        for v in range(1, lie.dim + 1):
            sub = [
                Token("int", str(v), t.line, t.col)
                if t.kind == "name" and t.text == var
                else t
                for t in body
            ]
            inner = ExprParser(sub + [eof], self.algebra, self.env)
            pieces.append((self.ring.one, inner.parse_expression()))
        return ex.lincomb(pieces)


def parse_expr_text(text: str, algebra: Algebra, env=None):
    """Parse one field expression; raises ParseError with line/column."""
    return ExprParser(tokenize(text), algebra, env).parse_expression()


def parse_scalar_text(text: str, algebra: Algebra) -> Scalar:
    p = ExprParser(tokenize(text), algebra)
    s = p._scalar_sum()
    p.expect("eof", "end of scalar")
    return s


# ---------------------------------------------------------------------------
# algebra definition files


def _gen_ref(p: _TokenStream):
    t = p.expect("name", "a field name")
    if p.peek().kind == "^" and p.peek(1).kind in ("int", "name"):
        p.bump()
        sup = p.bump()
        return f"{t.text}^{sup.text}", t
    return t.text, t


def parse_algebra_text(text: str, name: str = "user") -> Algebra:
    """Parse an algebra definition file.

    Statements, in any order: `param NAME...`, `field NAME weight INT`,
    `ope A B { i: expr ; ... }`, or a single `lie su2 level NAME` line
    standing alone.  `#` starts a comment.
    """
    p = _TokenStream(tokenize(text))
    params, fields = [], []
    blocks = []  # (A, B, [(pole_tok, i, expr_tokens)])
    lie_req = None
    while not p.at("eof"):
        t = p.peek()
        if t.kind != "name":
            p.err("expected a declaration (param, field, ope, lie)")
        if t.text == "param":
            p.bump()
            while True:
                nt = p.expect("name", "a parameter name")
                if nt.text in RESERVED_NAMES or nt.text in _KEYWORDS:
                    p.err(f"{nt.text!r} cannot be a parameter name", nt)
                if nt.text in params:
                    p.err(f"duplicate parameter {nt.text!r}", nt)
                params.append(nt.text)
                if not p.at(","):
                    break
                p.bump()
        elif t.text == "field":
            p.bump()
            nt = p.expect("name", "a field name")
            if nt.text in RESERVED_NAMES or nt.text in _KEYWORDS:
                p.err(f"{nt.text!r} cannot be a field name", nt)
            wt = p.expect("name", "the word 'weight'")
            if wt.text != "weight":
                p.err("expected 'weight'", wt)
            w = p.expect("int", "an integer weight")
            fields.append((nt.text, int(w.text), nt))
        elif t.text == "ope":
            p.bump()
            a, a_tok = _gen_ref(p)
            b, b_tok = _gen_ref(p)
            p.expect("{")
            entries = []
            while True:
                if p.at("}"):
                    p.bump()
                    break
                if p.at("-"):
                    p.err("pole index must be >= 0")
                pt = p.expect("int", "a pole index")
                p.expect(":")
                body = []
                depth = 0
                while True:
                    cur = p.peek()
                    if cur.kind == "eof":
                        p.err("unterminated ope block", t)
                    if depth == 0 and cur.kind in (";", "}"):
                        break
                    if cur.kind == "{":
                        depth += 1
                    elif cur.kind == "}":
                        depth -= 1
                    body.append(p.bump())
                if not body:
                    p.err("empty table entry", pt)
                entries.append((pt, int(pt.text), body))
                if p.at(";"):
                    p.bump()
            blocks.append((a, a_tok, b, b_tok, entries))
        elif t.text == "lie":
            p.bump()
            gt = p.expect("name", "a Lie preset name")
            if gt.text != "su2":
                p.err(f"unknown Lie preset {gt.text!r}", gt)
            lt = p.expect("name", "the word 'level'")
            if lt.text != "level":
                p.err("expected 'level'", lt)
            lv = p.expect("name", "a level parameter name")
            if lv.text in RESERVED_NAMES:
                p.err(f"{lv.text!r} is reserved", lv)
            lie_req = (gt.text, lv.text, t)
        else:
            p.err(f"unknown declaration {t.text!r}", t)

    if lie_req is not None:
        _, level_name, where = lie_req
        if params or fields or blocks:
            raise ParseError(
                "lie declares its own parameter and fields; "
                "it cannot be combined with param/field/ope statements",
                where.line,
                where.col,
            )
        alg = preset_su2(level_param=level_name)
        alg.name = name
        return alg

    seen = set()
    for fname, w, tok in fields:
        if fname in seen:
            raise ParseError(f"duplicate field {fname!r}", tok.line, tok.col)
        seen.add(fname)
        if fname in params:
            raise ParseError(f"field {fname!r} shadows a parameter", tok.line, tok.col)
        if w < 1:
            raise ParseError(
                f"field {fname!r} has weight {w}; weights start at 1", tok.line, tok.col
            )
    try:
        provisional = define_algebra(name, tuple(params), [(f, w) for f, w, _ in fields], {})
    except AlgebraError as exc:
        raise ParseError(str(exc)) from exc
    entries = {}
    declared = {f for f, _, _ in fields}
    for a, a_tok, b, b_tok, block in blocks:
        for gname, gtok in ((a, a_tok), (b, b_tok)):
            if gname not in declared:
                raise ParseError(
                    f"undeclared field {gname!r} in ope statement", gtok.line, gtok.col
                )
        wa, wb = provisional.gen_weight(a), provisional.gen_weight(b)
        for pt, i, body in block:
            if (a, b, i) in entries:
                raise ParseError(f"duplicate table entry for {a} {b} at pole {i}", pt.line, pt.col)
            eof = Token("eof", "", pt.line, pt.col)
            inner = ExprParser(body + [eof], provisional)
            e = inner.parse_expression()
            want = wa + wb - i - 1
            got = ex.expr_weight(provisional, e)
            if got != want:
                shown = "inhomogeneous" if got is None else f"weight {got}"
                raise ParseError(
                    f"entry ({a},{b},{i}) must have weight {want}, got {shown}",
                    pt.line,
                    pt.col,
                )
            entries[(a, b, i)] = e
    return define_algebra(name, tuple(params), [(f, w) for f, w, _ in fields], entries)


def parse_algebra_file(path: str) -> Algebra:
    with open(path) as fh:
        text = fh.read()
    name = os.path.splitext(os.path.basename(path))[0]
    return parse_algebra_text(text, name=name)


def render_algebra_text(alg: Algebra) -> str:
    """Canonical definition-file text; parsing it reproduces the algebra."""
    if alg.lie is not None:
        if alg.lie.prefix != "J" or alg.lie.dim != 3:
            raise OpeAlgError("only the su2 preset has a file form")
        return f"lie su2 level {alg.lie.level_param}\n"
    lines = []
    if alg.ring.params:
        lines.append("param " + " ".join(alg.ring.params))
    for g in alg.generators:
        lines.append(f"field {g.name} weight {g.weight}")
    pairs = sorted({(ga, gb) for (ga, gb, _) in alg.table})
    for ga, gb in pairs:
        orders = sorted((i for (a, b, i) in alg.table if (a, b) == (ga, gb)), reverse=True)
        body = "; ".join(f"{i}: {alg.table[(ga, gb, i)]}" for i in orders)
        lines.append(f"ope {alg.gen_name(ga)} {alg.gen_name(gb)} {{ {body} }}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# expression rendering (text)


def render_expr_text(e) -> str:
    if isinstance(e, ex.Gen):
        return e.name
    if isinstance(e, ex.Ident):
        return "I"
    if isinstance(e, ex.Deriv):
        head = "d" if e.order == 1 else f"d^({e.order})"
        return f"{head} {_expr_atom_text(e.child)}"
    if isinstance(e, ex.Prod):
        if e.m == -1:
            parts = []
            node = e
            while isinstance(node, ex.Prod) and node.m == -1:
                parts.append(_expr_atom_text(node.left))
                node = node.right
            parts.append(_expr_atom_text(node))
            return ":" + " ".join(parts) + ":"
        return f"{_expr_atom_text(e.left)}_({e.m}) {_expr_prod_text(e.right)}"
    if isinstance(e, ex.Sum):
        if not e.terms:
            return "0*I"
        chunks = []
        for k, (s, t) in enumerate(e.terms):
            body = _expr_prod_text(t)
            if s.is_one:
                piece = body
            elif (-s).is_one:
                piece = f"-{body}"
            else:
                piece = f"{ex._coeff_str(s)}*{body}"
            if k == 0:
                chunks.append(piece)
            elif piece.startswith("-"):
                chunks.append(f"- {piece[1:]}")
            else:
                chunks.append(f"+ {piece}")
        return " ".join(chunks)
    raise OpeAlgError(f"cannot render {e!r}")


def _expr_prod_text(e) -> str:
    if isinstance(e, ex.Sum):
        return f"({render_expr_text(e)})"
    return render_expr_text(e)


def _expr_atom_text(e) -> str:
    if isinstance(e, (ex.Gen, ex.Ident)):
        return render_expr_text(e)
    if isinstance(e, ex.Prod) and e.m == -1:
        return render_expr_text(e)
    if isinstance(e, ex.Deriv) and isinstance(e.child, (ex.Gen, ex.Ident)):
        return render_expr_text(e)
    return f"({render_expr_text(e)})"


# ---------------------------------------------------------------------------
# LaTeX rendering


def _frac_latex(fr: Fraction) -> str:
    if fr.denominator == 1:
        return str(fr.numerator)
    sign = "-" if fr < 0 else ""
    return f"{sign}\\frac{{{abs(fr.numerator)}}}{{{fr.denominator}}}"


def _qi_latex(q) -> str:
    re, im = q.re, q.im
    if not im:
        return _frac_latex(re)
    if abs(im) == 1:
        imt = "\\mathrm{i}"
    else:
        imt = f"{_frac_latex(abs(im))}\\,\\mathrm{{i}}"
    if not re:
        return ("-" if im < 0 else "") + imt
    op = "-" if im < 0 else "+"
    return f"{_frac_latex(re)} {op} {imt}"


def _poly_latex(poly, params) -> str:
    if not poly:
        return "0"
    items = sorted(poly.items(), key=lambda kv: (sum(kv[0]), kv[0]), reverse=True)
    parts = []
    for exps, q in items:
        vars_ = []
        for v, e in enumerate(exps):
            if e == 0:
                continue
            vars_.append(params[v] if e == 1 else f"{params[v]}^{{{e}}}")
        mono = " ".join(vars_)
        if not mono:
            parts.append(_qi_latex(q))
        elif q.re and q.im:
            parts.append(f"({_qi_latex(q)}) {mono}")
        elif q == 1:
            parts.append(mono)
        elif q == -1:
            parts.append(f"-{mono}")
        else:
            parts.append(f"{_qi_latex(q)} {mono}")
    return " + ".join(parts).replace("+ -", "- ")


def _scalar_latex(s: Scalar) -> str:
    num = _poly_latex(s.num, s.params)
    if s.den_is_one:
        return num
    return f"\\frac{{{num}}}{{{_poly_latex(s.den, s.params)}}}"


def _scalar_latex_factor(s: Scalar) -> str:
    """Scalar as a prefactor: parenthesized when visually a sum."""
    lat = _scalar_latex(s)
    if s.den_is_one:
        if len(s.num) > 1:
            return f"\\left({lat}\\right)"
        (q,) = s.num.values()
        if q.re and q.im:
            return f"\\left({lat}\\right)"
    return lat


def _factor_latex(alg: Algebra, g: int, j: int) -> str:
    nm = alg.gen_name(g)
    if "^" in nm:
        base, sup = nm.split("^", 1)
        nm = f"{base}^{{{sup}}}"
    if j == 0:
        return nm
    if j == 1:
        return f"\\partial {nm}"
    return f"\\partial^{{({j})}} {nm}"


def _mono_latex(alg: Algebra, mono) -> str:
    if not mono:
        return "\\mathbf{1}"
    parts = [_factor_latex(alg, g, j) for g, j in mono]
    if len(parts) == 1:
        return parts[0]
    return ":" + "\\, ".join(parts) + ":"


def render_nf_latex(nf: NormalForm) -> str:
    if nf.is_zero:
        return "0"
    parts = []
    for mono, c in nf.sorted_terms():
        mlat = _mono_latex(nf.algebra, mono)
        if c == nf.algebra.ring.one:
            parts.append(mlat)
        elif c == -nf.algebra.ring.one:
            parts.append(f"-{mlat}")
        else:
            parts.append(f"{_scalar_latex_factor(c)}\\, {mlat}")
    return " + ".join(parts).replace("+ -", "- ")


def _nf_latex_atom(nf: NormalForm) -> str:
    if len(nf.terms) == 1:
        ((mono, c),) = nf.terms.items()
        if c == nf.algebra.ring.one:
            return _mono_latex(nf.algebra, mono)
    return f"\\left({render_nf_latex(nf)}\\right)"


def render_series_latex(sr: SingularSeries) -> str:
    parts = []
    for order in sr.orders():
        den = "(z-w)" if order == 1 else f"(z-w)^{{{order}}}"
        parts.append(f"\\frac{{{render_nf_latex(sr.poles[order])}}}{{{den}}}")
    body = " + ".join(parts) if parts else "0"
    if sr.regular is not None:
        left, right = sr.regular
        body += f" + :{_nf_latex_atom(left)}\\,{_nf_latex_atom(right)}:(w) + O(z-w)"
    return body


# ---------------------------------------------------------------------------
# JSON rendering


def _nf_json(nf: NormalForm) -> dict:
    return {
        "schema": "opealg.nf/1",
        "terms": [
            {
                "coefficient": str(c),
                "monomial": [[nf.algebra.gen_name(g), j] for g, j in mono],
            }
            for mono, c in nf.sorted_terms()
        ],
    }


def _series_json(sr: SingularSeries) -> dict:
    out = {
        "schema": "opealg.ope/1",
        "poles": [
            {"order": o, "coefficient": _nf_json(sr.poles[o])} for o in sr.orders()
        ],
        "regular": None,
    }
    if sr.regular is not None:
        left, right = sr.regular
        out["regular"] = {"left": _nf_json(left), "right": _nf_json(right)}
    return out


def _report_json(rep) -> dict:
    if isinstance(rep, BorcherdsReport):
        return {
            "schema": "opealg.report/1",
            "kind": "borcherds",
            "ok": rep.ok,
            "checked": rep.checked,
            "failures": [
                {
                    "p": f.pqr[0],
                    "q": f.pqr[1],
                    "r": f.pqr[2],
                    "tier": f.tier,
                    "lhs": f.lhs,
                    "rhs": f.rhs,
                }
                for f in rep.failures
            ],
        }
    if isinstance(rep, ConsistencyReport):
        return {
            "schema": "opealg.report/1",
            "kind": "algebra",
            "ok": rep.ok,
            "pairs": rep.checked_pairs,
            "triples": rep.checked_triples,
            "skew_failures": [
                {"pair": list(v.pair), "m": v.m, "stored": v.stored, "derived": v.derived}
                for v in rep.skew
            ],
            "borcherds_failures": [
                {
                    "triple": list(v.triple),
                    "p": v.pqr[0],
                    "q": v.pqr[1],
                    "r": v.pqr[2],
                    "lhs": v.lhs,
                    "rhs": v.rhs,
                }
                for v in rep.borcherds
            ],
        }
    if isinstance(rep, OracleVerifyReport):
        return {
            "schema": "opealg.report/1",
            "kind": "oracle",
            "ok": rep.ok,
            "checked": rep.checked,
            "mismatches": [
                {
                    "state": m.state,
                    "mode": m.mode,
                    "symbolic": m.symbolic,
                    "direct": m.direct,
                }
                for m in rep.mismatches
            ],
        }
    raise OpeAlgError(f"no JSON form for {rep!r}")


def _report_text(rep) -> str:
    if isinstance(rep, BorcherdsReport):
        if rep.ok:
            return f"borcherds: checked {rep.checked} (p,q,r) windows, all hold"
        lines = [f"borcherds: {len(rep.failures)} of {rep.checked} windows FAIL"]
        for f in rep.failures:
            p, q, r = f.pqr
            lines.append(f"  p={p} q={q} r={r} [{f.tier}]")
            lines.append(f"    lhs = {f.lhs}")
            lines.append(f"    rhs = {f.rhs}")
        return "\n".join(lines)
    if isinstance(rep, ConsistencyReport):
        if rep.ok:
            return (
                f"algebra consistent: skew on {rep.checked_pairs} pairs, "
                f"borcherds on {rep.checked_triples} triples"
            )
        lines = ["algebra INCONSISTENT"]
        for v in rep.skew:
            a, b = v.pair
            lines.append(f"  skew {a},{b} at m={v.m}: stored {v.stored}, derived {v.derived}")
        for v in rep.borcherds:
            p, q, r = v.pqr
            lines.append(
                f"  borcherds {','.join(v.triple)} at p={p} q={q} r={r}: {v.lhs} != {v.rhs}"
            )
        return "\n".join(lines)
    if isinstance(rep, OracleVerifyReport):
        if rep.ok:
            return f"oracle: {rep.checked} (state, mode) pairs agree"
        lines = [f"oracle: {len(rep.mismatches)} mismatches in {rep.checked} pairs"]
        for m in rep.mismatches[:10]:
            lines.append(f"  state {m.state}, mode {m.mode}:")
            lines.append(f"    symbolic -> {m.symbolic}")
            lines.append(f"    direct   -> {m.direct}")
        return "\n".join(lines)
    raise OpeAlgError(f"no text form for {rep!r}")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def render_result(obj, fmt: str) -> str:
    """Render a NormalForm, SingularSeries, report, or plain dict."""
    if isinstance(obj, NormalForm):
        if fmt == "json":
            return _dumps(_nf_json(obj))
        if fmt == "latex":
            return render_nf_latex(obj)
        return str(obj)
    if isinstance(obj, SingularSeries):
        if fmt == "json":
            return _dumps(_series_json(obj))
        if fmt == "latex":
            return render_series_latex(obj)
        return str(obj)
    if isinstance(obj, (BorcherdsReport, ConsistencyReport, OracleVerifyReport)):
        if fmt == "json":
            return _dumps(_report_json(obj))
        return _report_text(obj)
    if isinstance(obj, dict):
        return _dumps(obj)
    raise OpeAlgError(f"cannot render {obj!r}")


# ---------------------------------------------------------------------------
# command plumbing


def load_algebra(spec: str) -> Algebra:
    """Resolve --algebra: a preset name or a definition file path."""
    presets = {
        "virasoro": preset_virasoro,
        "su2": preset_su2,
        "free_boson": preset_free_boson,
        "free-boson": preset_free_boson,
    }
    if spec in presets:
        return presets[spec]()
    if os.path.exists(spec):
        return parse_algebra_file(spec)
    raise ParseError(f"no such algebra preset or file: {spec!r}")


def parse_window(s: str):
    """Parse p1..p2,q1..q2,r1..r2 into three inclusive ranges."""
    parts = s.split(",")
    if len(parts) != 3:
        raise ParseError(f"window needs three ranges, got {s!r}")
    out = []
    for part in parts:
        lohi = part.split("..")
        if len(lohi) != 2:
            raise ParseError(f"bad range {part!r} (want lo..hi)")
        try:
            lo, hi = int(lohi[0]), int(lohi[1])
        except ValueError:
            raise ParseError(f"bad range {part!r} (want integers)") from None
        if lo > hi:
            raise ParseError(f"empty range {part!r}")
        out.append((lo, hi))
    return tuple(out)


def parse_bindings(chunks) -> dict:
    """name=rational pairs from repeated flags or comma-joined lists."""
    out = {}
    for chunk in chunks or ():
        for item in chunk.split(","):
            item = item.strip()
            if not item:
                continue
            name, sep, val = item.partition("=")
            if not sep or not name.strip():
                raise ParseError(f"bad binding {item!r} (want name=value)")
            try:
                out[name.strip()] = Fraction(val.strip())
            except (ValueError, ZeroDivisionError):
                raise ParseError(f"bad rational in binding {item!r}") from None
    return out


def _resolve_budget(flag_value):
    if flag_value is not None:
        return flag_value
    env = os.environ.get(ENV_BUDGET)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ParseError(f"{ENV_BUDGET} must be an integer, got {env!r}") from None
    return DEFAULT_STEP_BUDGET


DEFAULT_WINDOW = ((-2, 3), (-2, 3), (-2, 3))


def _run_command(head, parts, alg, engine, env):
    """Shared core for CLI subcommands and script lines.

    Returns (result object or None, exit code).
    """
    def one_expr(s):
        return parse_expr_text(s, alg, env)

    def norm(s):
        return engine.normalize(one_expr(s))

    if head == "nf":
        if len(parts) != 1:
            raise ParseError("nf takes one expression")
        return engine.normalize(one_expr(parts[0])), 0
    if head == "rp":
        if len(parts) != 3:
            raise ParseError("rp takes: expr ; m ; expr")
        try:
            m = int(parts[1].strip())
        except ValueError:
            raise ParseError(f"bad product index {parts[1].strip()!r}") from None
        return engine.residue_product(norm(parts[0]), m, norm(parts[2])), 0
    if head == "ope":
        if len(parts) != 2:
            raise ParseError("ope takes: expr ; expr")
        return render_ope(engine, norm(parts[0]), norm(parts[1])), 0
    if head in ("wick-left", "wick-right"):
        if len(parts) != 3:
            raise ParseError(f"{head} takes: expr ; expr ; expr")
        fn = wick_left if head == "wick-left" else wick_right
        return fn(engine, norm(parts[0]), norm(parts[1]), norm(parts[2])), 0
    if head == "check-borcherds":
        if len(parts) not in (3, 4):
            raise ParseError("check-borcherds takes: expr ; expr ; expr [; window]")
        window = parse_window(parts[3].strip()) if len(parts) == 4 else DEFAULT_WINDOW
        rep = check_borcherds(engine, norm(parts[0]), norm(parts[1]), norm(parts[2]), window)
        return rep, 0 if rep.ok else 1
    if head == "check-algebra":
        if len(parts) > 1:
            raise ParseError("check-algebra takes at most a cutoff")
        cutoff = 4
        if parts and parts[0].strip():
            try:
                cutoff = int(parts[0].strip())
            except ValueError:
                raise ParseError(f"bad cutoff {parts[0].strip()!r}") from None
        rep = check_algebra_consistency(alg, cutoff=cutoff)
        return rep, 0 if rep.ok else 1
    if head == "oracle-verify":
        if len(parts) not in (3, 4):
            raise ParseError("oracle-verify takes: expr ; bindings ; level [; hw]")
        e = one_expr(parts[0])
        bindings = parse_bindings([parts[1]])
        try:
            level = int(parts[2].strip())
        except ValueError:
            raise ParseError(f"bad level {parts[2].strip()!r}") from None
        hw = parse_bindings([parts[3]]) if len(parts) == 4 else None
        module = build_module(alg, bindings, level, hw=hw)
        rep = verify_against_symbolic(module, engine.normalize(e), e)
        return rep, 0 if rep.ok else 1
    raise ParseError(f"unknown command {head!r}")


def run_script(text: str, fmt: str, budget: int = None, algebra: Algebra = None):
    """Execute a query script; returns (exit code, rendered output)."""
    if budget is None:
        budget = _resolve_budget(None)
    alg = algebra
    engine = Engine(alg, budget) if alg is not None else None
    env = {}
    worst = 0
    chunks = []
    json_items = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if head == "algebra":
                if alg is not None:
                    raise ParseError("a script drives a single algebra")
                alg = load_algebra(rest)
                engine = Engine(alg, budget)
                continue
            if alg is None:
                raise ParseError("no algebra loaded (start with: algebra <file or preset>)")
            if head == "let":
                name, sep, body = rest.partition("=")
                name = name.strip()
                if not sep or not name.isidentifier():
                    raise ParseError("let needs: let NAME = expression")
                if (
                    name in RESERVED_NAMES
                    or name in alg.ring.params
                    or any(g.name == name for g in alg.generators)
                    or name in env
                ):
                    raise ParseError(f"let name {name!r} shadows an existing name")
                env[name] = parse_expr_text(body.strip(), alg, env)
                continue
            parts = rest.split(";") if rest else []
            obj, code = _run_command(head, parts, alg, engine, env)
        except ParseError as exc:
            raise ParseError(f"script line {lineno}: {exc}") from exc
        worst = max(worst, code)
        if fmt == "json":
            if isinstance(obj, NormalForm):
                payload = _nf_json(obj)
            elif isinstance(obj, SingularSeries):
                payload = _series_json(obj)
            else:
                payload = _report_json(obj)
            json_items.append({"command": line, "result": payload})
        else:
            chunks.append(f"> {line}\n{render_result(obj, fmt)}")
    output = _dumps(json_items) if fmt == "json" else "\n\n".join(chunks)
    return worst, output


# ---------------------------------------------------------------------------
# argparse driver


def _build_parser():
    # SUPPRESS keeps a subparser's unset flags from clobbering values the
    # root parser already consumed (flags are accepted on either side).
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--algebra",
        default=argparse.SUPPRESS,
        help="algebra file or preset (virasoro, su2, free_boson)",
    )
    common.add_argument(
        "--format",
        choices=("text", "json", "latex"),
        default=argparse.SUPPRESS,
        dest="fmt",
    )
    common.add_argument("--step-budget", type=int, default=argparse.SUPPRESS)

    ap = argparse.ArgumentParser(
        prog="opealg",
        description="Singular operator product expansions, residue products, "
        "and normal forms for chiral fields.",
        parents=[common],
    )
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("nf", parents=[common], help="normal form of an expression")
    p.add_argument("expr")

    p = sub.add_parser("rp", parents=[common], help="m-th residue product")
    p.add_argument("expr1")
    p.add_argument("m", type=int)
    p.add_argument("expr2")

    p = sub.add_parser("ope", parents=[common], help="singular OPE of two expressions")
    p.add_argument("expr1")
    p.add_argument("expr2")

    for name in ("wick-left", "wick-right"):
        p = sub.add_parser(name, parents=[common], help=f"{name} expansion a(z):bc:(w) / :ab:(z)c(w)")
        p.add_argument("a")
        p.add_argument("b")
        p.add_argument("c")

    p = sub.add_parser("check-borcherds", parents=[common], help="check the residue identity on a window")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("c")
    p.add_argument("--window", default="-2..3,-2..3,-2..3", help="p1..p2,q1..q2,r1..r2")

    p = sub.add_parser("check-algebra", parents=[common], help="validate the declared table")
    p.add_argument("--cutoff", type=int, default=4)

    p = sub.add_parser("oracle-verify", parents=[common], help="compare a normal form against exact modes")
    p.add_argument("expr")
    p.add_argument("--bindings", action="append", help="name=rational[,name=rational]")
    p.add_argument("--level", type=int, default=4, help="module level cutoff")
    p.add_argument("--hw", action="append", help="highest-weight eigenvalues (Verma); omit for vacuum")

    p = sub.add_parser("oracle-dump", parents=[common], help="JSON snapshot of a truncated module")
    p.add_argument("--bindings", action="append")
    p.add_argument("--level", type=int, default=4)
    p.add_argument("--hw", action="append")

    p = sub.add_parser("run", parents=[common], help="run a query script")
    p.add_argument("script")
    return ap


def _dispatch(args) -> int:
    fmt = getattr(args, "fmt", None) or "text"
    budget = _resolve_budget(getattr(args, "step_budget", None))
    algebra_spec = getattr(args, "algebra", None)

    if args.cmd == "run":
        with open(args.script) as fh:
            text = fh.read()
        alg = load_algebra(algebra_spec) if algebra_spec else None
        code, output = run_script(text, fmt, budget, algebra=alg)
        if output:
            print(output)
        return code

    if not algebra_spec:
        raise ParseError("an algebra is required (use --algebra FILE|PRESET)")
    alg = load_algebra(algebra_spec)
    engine = Engine(alg, budget)
    env = {}

    if args.cmd == "nf":
        obj, code = _run_command("nf", [args.expr], alg, engine, env)
    elif args.cmd == "rp":
        obj, code = _run_command("rp", [args.expr1, str(args.m), args.expr2], alg, engine, env)
    elif args.cmd == "ope":
        obj, code = _run_command("ope", [args.expr1, args.expr2], alg, engine, env)
    elif args.cmd in ("wick-left", "wick-right"):
        obj, code = _run_command(args.cmd, [args.a, args.b, args.c], alg, engine, env)
    elif args.cmd == "check-borcherds":
        obj, code = _run_command(
            "check-borcherds", [args.a, args.b, args.c, args.window], alg, engine, env
        )
    elif args.cmd == "check-algebra":
        obj, code = _run_command("check-algebra", [str(args.cutoff)], alg, engine, env)
    elif args.cmd == "oracle-verify":
        module = build_module(
            alg, parse_bindings(args.bindings), args.level, hw=_hw_or_none(args.hw)
        )
        e = parse_expr_text(args.expr, alg, env)
        obj = verify_against_symbolic(module, engine.normalize(e), e)
        code = 0 if obj.ok else 1
    elif args.cmd == "oracle-dump":
        module = build_module(
            alg, parse_bindings(args.bindings), args.level, hw=_hw_or_none(args.hw)
        )
        obj, code = module.dump(), 0
    else:
        raise ParseError(f"unknown command {args.cmd!r}")
    print(render_result(obj, fmt))
    return code


def _hw_or_none(chunks):
    if not chunks:
        return None
    return parse_bindings(chunks)


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits on usage errors (and on --help); keep the integer
        # contract so embedders never see the exception
        return int(exc.code or 0)
    try:
        return _dispatch(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StepBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OpeAlgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
