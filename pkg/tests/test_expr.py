"""Expression trees, standard monomials, and NormalForm arithmetic."""

import pytest

from opealg import (
    NormalForm,
    deriv,
    expr_weight,
    gen,
    ident,
    lincomb,
    nop,
    preset_su2,
    preset_virasoro,
    prod,
    scale,
)
from opealg.errors import OpeAlgError
from opealg.expr import (
    factor_key,
    is_standard,
    mono_sort_key,
    mono_str,
    mono_to_expr,
    mono_weight,
)


vir = preset_virasoro()
su2 = preset_su2()
T = gen("T")


def nf(alg, pairs):
    """Build a NormalForm from (coefficient, monomial) pairs."""
    return NormalForm(alg, [(m, s) for s, m in pairs])


# ---------------------------------------------------------------------------
# expression builders


def test_deriv_order_zero_collapses():
    assert deriv(0, T) == T


def test_deriv_of_deriv_merges_with_divided_power_factor():
    # d^(1) d^(1) = 2 d^(2)
    e = deriv(1, deriv(1, T))
    w = expr_weight(vir, e)
    assert w == 4


def test_deriv_negative_order_rejected():
    with pytest.raises(OpeAlgError):
        deriv(-1, T)


def test_prod_index_must_be_int():
    with pytest.raises(OpeAlgError):
        prod(T, "1", T)


def test_nop_is_minus_one_product():
    e = nop(T, T)
    assert e.m == -1
    assert e.left == T and e.right == T


def test_lincomb_and_scale():
    R = vir.ring
    e = lincomb([(R.const(2), T), (R.const(3), T)])
    assert expr_weight(vir, e) == 2
    s = scale(R.param("c"), T)
    assert expr_weight(vir, s) == 2


# ---------------------------------------------------------------------------
# weights


def test_expr_weight_generators_and_identity():
    assert expr_weight(vir, T) == 2
    assert expr_weight(vir, ident()) == 0
    assert expr_weight(su2, gen("J^1")) == 1


def test_expr_weight_derivative_adds_order():
    assert expr_weight(vir, deriv(3, T)) == 5


def test_expr_weight_product_rule():
    # wt(A_(m)B) = wt(A) + wt(B) - m - 1
    assert expr_weight(vir, nop(T, T)) == 4
    assert expr_weight(vir, prod(T, 1, T)) == 2
    assert expr_weight(vir, prod(T, 3, T)) == 0
    assert expr_weight(vir, prod(T, -3, T)) == 6


def test_expr_weight_inhomogeneous_sum_is_none():
    R = vir.ring
    e = lincomb([(R.one, T), (R.one, deriv(1, T))])
    assert expr_weight(vir, e) is None


def test_expr_weight_zero_sum_is_none():
    assert expr_weight(vir, lincomb([])) is None


# ---------------------------------------------------------------------------
# standard monomials


def test_factor_key_orders_generators_then_descending_derivatives():
    # (g, j) factors sort by generator index, then higher j first
    assert factor_key((0, 2)) < factor_key((0, 1))
    assert factor_key((0, 0)) < factor_key((1, 5))


def test_is_standard():
    assert is_standard(())
    assert is_standard(((0, 0),))
    assert is_standard(((0, 1), (0, 0)))
    assert not is_standard(((0, 0), (0, 1)))
    assert is_standard(((0, 0), (1, 0)))
    assert not is_standard(((1, 0), (0, 0)))


def test_mono_weight():
    g = vir.gen_index("T")
    assert mono_weight(vir, ()) == 0
    assert mono_weight(vir, ((g, 0),)) == 2
    assert mono_weight(vir, ((g, 1), (g, 0))) == 5


def test_mono_sort_key_orders_by_weight_then_length():
    g = vir.gen_index("T")
    keys = [
        mono_sort_key(vir, ()),
        mono_sort_key(vir, ((g, 0),)),
        mono_sort_key(vir, ((g, 2),)),
        mono_sort_key(vir, ((g, 0), (g, 0))),
    ]
    assert keys == sorted(keys)


def test_mono_str():
    g = vir.gen_index("T")
    assert mono_str(vir, ()) == "I"
    assert mono_str(vir, ((g, 0),)) == "T"
    assert mono_str(vir, ((g, 1),)) == "d T"
    assert mono_str(vir, ((g, 3), (g, 0))) == ":d^(3) T T:"


def test_mono_to_expr_round_trip_weight():
    g = vir.gen_index("T")
    mono = ((g, 2), (g, 0), (g, 0))
    e = mono_to_expr(vir, mono)
    assert expr_weight(vir, e) == mono_weight(vir, mono)


# ---------------------------------------------------------------------------
# NormalForm arithmetic


def test_normal_form_add_collects_terms():
    g = vir.gen_index("T")
    R = vir.ring
    a = nf(vir, [(R.const(2), ((g, 0),))])
    b = nf(vir, [(R.const(3), ((g, 0),))])
    assert a + b == nf(vir, [(R.const(5), ((g, 0),))])


def test_normal_form_cancellation_to_zero():
    g = vir.gen_index("T")
    R = vir.ring
    a = nf(vir, [(R.one, ((g, 0),))])
    assert (a - a).is_zero
    assert a - a == NormalForm.zero(vir)


def test_normal_form_scalar_multiply():
    g = vir.gen_index("T")
    R = vir.ring
    a = nf(vir, [(R.one, ((g, 0),)), (R.const(2), ((g, 1),))])
    s = a * R.param("c")
    assert s == nf(vir, [(R.param("c"), ((g, 0),)), (R.param("c") * 2, ((g, 1),))])
    assert -a == a * R.const(-1)


def test_normal_form_drops_zero_coefficients():
    g = vir.gen_index("T")
    R = vir.ring
    a = nf(vir, [(R.zero, ((g, 0),))])
    assert a.is_zero
    assert list(a.terms) == []


def test_normal_form_keys_are_the_given_monomials():
    g = vir.gen_index("T")
    a = nf(vir, [(vir.ring.one, ((g, 1), (g, 0)))])
    assert set(a.terms) == {((g, 1), (g, 0))}
    assert all(is_standard(m) for m in a.terms)


def test_normal_form_rejects_mixed_algebras():
    a = NormalForm.zero(vir)
    b = NormalForm.zero(su2)
    with pytest.raises(OpeAlgError):
        a + b


def test_normal_form_weight():
    g = vir.gen_index("T")
    R = vir.ring
    a = nf(vir, [(R.one, ((g, 0),))])
    assert a.weight() == 2
    assert a.max_weight() == 2
    mixed = nf(vir, [(R.one, ((g, 0),)), (R.one, ((g, 1),))])
    assert mixed.weight() is None
    assert mixed.max_weight() == 3
    assert NormalForm.zero(vir).weight() is None


def test_normal_form_str():
    g = vir.gen_index("T")
    R = vir.ring
    assert str(NormalForm.zero(vir)) == "0"
    assert str(nf(vir, [(R.one, ((g, 0),))])) == "T"
    assert str(nf(vir, [(-R.one, ((g, 1),))])) == "-d T"
    two_terms = nf(vir, [(R.const(4), ((g, 0), (g, 0))), (R.one, ((g, 2),))])
    assert str(two_terms) == "d^(2) T + 4*:T T:"


def test_normal_form_str_parenthesizes_sum_coefficients():
    g = vir.gen_index("T")
    R = vir.ring
    s = nf(vir, [(R.param("c") + 2, ((g, 0),))])
    assert str(s) == "(c + 2)*T"


def test_normal_form_sorted_terms_are_canonical():
    g = vir.gen_index("T")
    R = vir.ring
    a = nf(vir, [(R.one, ((g, 2),)), (R.one, ((g, 0), (g, 0)))])
    b = nf(vir, [(R.one, ((g, 0), (g, 0))), (R.one, ((g, 2),))])
    assert a.key() == b.key()
    assert [m for _, m in a.sorted_terms()] == [m for _, m in b.sorted_terms()]


def test_normal_form_to_expr_weight_preserved():
    g = vir.gen_index("T")
    R = vir.ring
    a = nf(vir, [(R.one, ((g, 1), (g, 0)))])
    assert expr_weight(vir, a.to_expr()) == 5
