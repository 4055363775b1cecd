"""Surface syntax: tokenizer, scalar and field expression grammar, algebra
declaration files, and the renderers that must round-trip with the parser."""

import pytest

from opealg import (
    ParseError,
    parse_algebra_text,
    parse_expr_text,
    preset_free_boson,
    preset_su2,
    preset_virasoro,
    render_algebra_text,
    render_expr_text,
)
from opealg.cli import parse_algebra_file, parse_scalar_text, tokenize


vir = preset_virasoro()
su2 = preset_su2()


def rt(text, alg=vir):
    """render(parse(text)); parsing the result again must be stable."""
    e = parse_expr_text(text, alg)
    out = render_expr_text(e)
    again = render_expr_text(parse_expr_text(out, alg))
    assert again == out
    return out


# ---------------------------------------------------------------------------
# tokenizer


def test_tokenize_names_ints_puncts():
    toks = tokenize("T_(“-2”)".replace("“", "").replace("”", ""))
    kinds = [(t.kind, t.text) for t in toks if t.kind != "eof"]
    assert ("name", "T") in kinds
    assert ("int", "2") in kinds


def test_tokenize_comments_and_positions():
    toks = tokenize("T # trailing words\n  d")
    named = [t for t in toks if t.kind == "name"]
    assert [t.text for t in named] == ["T", "d"]
    assert named[0].line == 1 and named[0].col == 1
    assert named[1].line == 2 and named[1].col == 3


def test_tokenize_rejects_stray_character():
    with pytest.raises(ParseError, match="line 1"):
        tokenize("T @ T")


# ---------------------------------------------------------------------------
# scalar grammar


def test_scalar_literals_and_params():
    R = vir.ring
    assert parse_scalar_text("3", vir) == R.const(3)
    assert parse_scalar_text("c", vir) == R.param("c")
    assert parse_scalar_text("-c", vir) == -R.param("c")
    assert parse_scalar_text("i", vir) == R.i


def test_scalar_arithmetic_and_precedence():
    R = vir.ring
    c = R.param("c")
    assert parse_scalar_text("c/2", vir) == c / 2
    assert parse_scalar_text("1 + c/2", vir) == R.one + c / 2
    assert parse_scalar_text("(c + 8)/2", vir) == (c + 8) / 2
    assert parse_scalar_text("2*c + 1", vir) == 2 * c + 1
    assert parse_scalar_text("c^2 - 4", vir) == c * c - 4
    assert parse_scalar_text("3*(c - 1)", vir) == 3 * (c - 1)


def test_scalar_rejects_field_names():
    with pytest.raises(ParseError):
        parse_scalar_text("T + 1", vir)


# ---------------------------------------------------------------------------
# field expression grammar


def test_parse_generator_and_identity():
    assert render_expr_text(parse_expr_text("T", vir)) == "T"
    assert render_expr_text(parse_expr_text("I", vir)) == "I"


def test_parse_derivatives():
    assert rt("d T") == "d T"
    assert rt("d^(2) T") == "d^(2) T"
    # nested first-order derivatives stay a tree; the engine merges them
    assert rt("d d T") == "d d T"


def test_parse_words_fold_right():
    e = parse_expr_text(":T T T:", vir)
    # right-nested normal ordering: :T (T T)::
    from opealg.expr import Prod

    assert isinstance(e, Prod) and e.m == -1
    assert isinstance(e.right, Prod) and e.right.m == -1


def test_parse_residue_product_suffix():
    assert rt("T_(1) T") == "T_(1) T"
    assert rt("T_(-3) T") == "T_(-3) T"
    e = parse_expr_text("T_(2) T_(1) T", vir)
    # right associative suffix chain
    from opealg.expr import Prod

    assert isinstance(e, Prod) and e.m == 2
    assert isinstance(e.right, Prod) and e.right.m == 1


def test_parse_coefficients():
    assert rt("2*T") == "2*T"
    assert rt("(c/2)*I") == "1/2*c*I"
    # like terms stay separate: parse/render never normalize
    assert rt("c*T - T") == "c*T - T"
    assert rt("(c + 2)*T") == "(c + 2)*T"
    assert rt("-T") == "-T"


def test_parse_sum_over_adjoint_index():
    out = rt("sum(b){ :J^b J^b: }", su2)
    assert out == ":J^1 J^1: + :J^2 J^2: + :J^3 J^3:"


def test_parse_sum_requires_current_algebra():
    with pytest.raises(ParseError, match="sum"):
        parse_expr_text("sum(b){ T }", vir)


def test_parse_caret_generators():
    assert rt("J^1", su2) == "J^1"
    assert rt(":J^1 d J^2:", su2) == ":J^1 d J^2:"


def test_parse_unknown_generator_has_position():
    with pytest.raises(ParseError, match=r"unknown generator 'X' at line 1, col 5"):
        parse_expr_text(":T  X:", vir)


def test_parse_param_in_field_position():
    with pytest.raises(ParseError, match="parameter"):
        parse_expr_text("T + c", vir)


def test_parse_trailing_garbage():
    with pytest.raises(ParseError):
        parse_expr_text("T T", vir)


def test_parse_mixed_sum_expression():
    out = rt("2*:T d T: - d^(3) T + T_(1) T")
    e = parse_expr_text(out, vir)
    assert render_expr_text(e) == out


# ---------------------------------------------------------------------------
# algebra files


VIRASORO_SRC = """\
# stress tensor over central charge c
param c
field T weight 2
ope T T { 3: (c/2)*I ; 1: 2*T ; 0: d T }
"""


def test_parse_algebra_text_matches_preset():
    alg = parse_algebra_text(VIRASORO_SRC, name="virasoro")
    assert alg.same_content(preset_virasoro())


def test_parse_algebra_lie_preset():
    alg = parse_algebra_text("lie su2 level k\n", name="su2")
    assert alg.same_content(preset_su2())
    assert alg.lie is not None


def test_algebra_files_in_repo_match_presets():
    import pathlib

    root = pathlib.Path(__file__).resolve().parents[1] / "algebras"
    assert parse_algebra_file(root / "virasoro.alg").same_content(preset_virasoro())
    assert parse_algebra_file(root / "su2.alg").same_content(preset_su2())
    assert parse_algebra_file(root / "free_boson.alg").same_content(preset_free_boson())


def test_algebra_round_trip_through_renderer():
    for alg in (preset_virasoro(), preset_su2(), preset_free_boson()):
        text = render_algebra_text(alg)
        back = parse_algebra_text(text, name=alg.name)
        assert back.same_content(alg)
        assert render_algebra_text(back) == text


def test_algebra_undeclared_generator_span():
    src = "param c\nfield T weight 2\nope T X { 1: T }\n"
    with pytest.raises(ParseError, match=r"line 3, col 7"):
        parse_algebra_text(src)


def test_algebra_unknown_name_inside_entry_span():
    src = "param c\nfield T weight 2\nope T T { 1: 2*X }\n"
    with pytest.raises(ParseError, match=r"unknown generator 'X' at line 3, col 16"):
        parse_algebra_text(src)


def test_algebra_duplicate_entry_rejected():
    src = "field A weight 1\nope A A { 1: I ; 1: I }\n"
    with pytest.raises(ParseError, match="duplicate"):
        parse_algebra_text(src)


def test_algebra_wrong_entry_weight_cites_pole():
    src = "field A weight 1\nope A A { 1: A }\n"
    with pytest.raises(ParseError, match="weight"):
        parse_algebra_text(src)


def test_algebra_negative_pole_rejected():
    src = "field A weight 1\nope A A { -1: A }\n"
    with pytest.raises(ParseError):
        parse_algebra_text(src)


def test_algebra_duplicate_field_rejected():
    src = "field A weight 1\nfield A weight 2\n"
    with pytest.raises(ParseError, match="duplicate"):
        parse_algebra_text(src)


def test_algebra_field_shadowing_param_rejected():
    src = "param c\nfield c weight 1\n"
    with pytest.raises(ParseError):
        parse_algebra_text(src)


def test_algebra_lie_is_exclusive():
    src = "field A weight 1\nlie su2 level k\n"
    with pytest.raises(ParseError):
        parse_algebra_text(src)


def test_algebra_keyword_names_rejected():
    with pytest.raises(ParseError):
        parse_algebra_text("field ope weight 1\n")
    with pytest.raises(ParseError):
        parse_algebra_text("param field\n")


def test_algebra_reserved_names_rejected():
    for bad in ("d", "I", "i", "sum"):
        with pytest.raises(ParseError):
            parse_algebra_text(f"field {bad} weight 1\n")


# ---------------------------------------------------------------------------
# renderer round-trips on a battery of expressions


CASES_VIR = [
    "T",
    "d T",
    "d^(4) T",
    ":T T:",
    ":T d T:",
    ":T T T:",
    "T_(3) T",
    "T_(-2) T",
    "2*T + 3*d T",
    "(c + 2)*T",
    "-:d T T:",
    "T_(1) :T T: - 4*T",
]

CASES_SU2 = [
    "J^1",
    ":J^1 J^2:",
    "sum(a){ :J^a J^a: }",
    "i*J^3",
    "J^1_(0) J^2",
]


def test_expression_round_trips_virasoro():
    for case in CASES_VIR:
        rt(case, vir)


def test_expression_round_trips_su2():
    for case in CASES_SU2:
        rt(case, su2)
