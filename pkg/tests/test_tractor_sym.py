from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from detourlab import tractor_sym as ts
from detourlab.tractor_sym import OperatorPoly, OperatorWord, d_, delta_, J_

F = Fraction


def test_words_alternate_and_square_to_zero():
    assert OperatorWord.parse("dd") is None
    assert OperatorWord.parse("δδ") is None
    w = OperatorWord.parse("dδd")
    assert (w.length, w.first, w.last) == (3, "d", "d")
    assert w.degree_shift == 1
    assert w * OperatorWord.parse("δ") == OperatorWord.parse("dδdδ")
    assert w * OperatorWord.parse("d") is None
    assert str(OperatorWord()) == "1"


def test_bad_words_rejected():
    with pytest.raises(ValueError):
        OperatorWord(2, "x")
    with pytest.raises(ValueError):
        OperatorWord(0, "d")


def test_d_squared_and_delta_squared_vanish():
    assert (d_ * d_).is_zero()
    assert (delta_ * delta_).is_zero()
    assert not (d_ * delta_).is_zero()


words = st.sampled_from(["", "d", "δ", "dδ", "δd", "dδd", "δdδ", "dδdδ"])
terms = st.tuples(words, st.integers(0, 2), st.fractions(max_denominator=7).filter(lambda x: x != 0))


@st.composite
def polys(draw):
    out = OperatorPoly()
    for w, m, c in draw(st.lists(terms, max_size=4)):
        out = out + OperatorPoly.word(w, c, m) if w else out + OperatorPoly.const(c) * J_ ** m
    return out


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), polys())
def test_ring_axioms(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert (a + b) * c == a * c + b * c
    assert a + b == b + a
    assert (a - a).is_zero()


@settings(max_examples=30, deadline=None)
@given(polys(), polys())
def test_J_is_central(a, b):
    assert a * J_ == J_ * a
    assert (a * J_) * b == a * (J_ * b)


def test_text_form_is_stable_and_sorted():
    poly = delta_ * d_ + J_ * F(2, 3) * delta_ * d_ + J_ ** 2 + d_ * delta_
    text = "1 * J^2 * 1 + 1 * J^0 * dδ + 1 * J^0 * δd + 2/3 * J^1 * δd"
    assert str(poly) == text
    assert str(OperatorPoly(dict(reversed(list(poly.terms.items()))))) == text
    assert str(OperatorPoly()) == "0"


def test_validity_window():
    ts.check_validity(4, 1)
    ts.check_validity(6, 2)
    with pytest.raises(ValueError):
        ts.check_validity(4, 2)
    with pytest.raises(ValueError):
        ts.check_validity(6, 0)


@pytest.mark.parametrize("n, k", [(4, 1), (6, 1), (6, 2), (8, 3), (10, 2)])
def test_first_iterate_by_hand(n, k):
    # one application of -fl plus the shift, expanded by hand
    it = ts.iterate_LL(n, k, 1)
    assert it.Y == delta_ * F(-(n - 2 * k - 2))
    assert it.Z == (d_ * delta_ * F(n - 2 * k - 2) + delta_ * d_ * F(n - 2 * k)) * F(1, k)
    assert it.W.is_zero()
    assert it.X == delta_ * d_ * delta_ + J_ * F(n - 2 * k + 2, n) * delta_


def test_zeroth_iterate_is_M():
    m = ts.iterate_LL(8, 2, 0)
    assert m.Z == OperatorPoly.const(F(2))
    assert m.X == delta_


@pytest.mark.parametrize("n, k, p", [(6, 1, 1), (6, 1, 4), (8, 2, 3), (12, 3, 5), (4, 1, 3)])
def test_formula_holds(n, k, p):
    v = ts.verify_formula(n, k, p)
    assert v.equal
    assert all(s == "0" for s in v.to_dict()["difference"].values())


def test_formula_detects_a_wrong_shift(monkeypatch):
    real = ts.step_scalar
    monkeypatch.setattr(ts, "step_scalar", lambda n, k, q: real(n, k, q) + F(1, 7))
    assert not ts.verify_formula(6, 1, 2).equal


def test_formula_detects_a_wrong_rule(monkeypatch):
    real = ts.apply_neg_fl

    def broken(expr):
        out = real(expr)
        return ts.SlotExpression(out.n, out.k, out.Y, out.Z, out.W, out.X + J_ * delta_, out.p)

    monkeypatch.setattr(ts, "apply_neg_fl", broken)
    assert not ts.verify_formula(8, 2, 2).equal


def test_p_cap():
    with pytest.raises(ValueError):
        ts.iterate_LL(6, 1, 5, cap=4)


def test_low_dimensional_operators():
    f = ts.extract_operator_formulas(4, 1)
    assert f.Q == d_ * delta_ + J_
    assert f.L == delta_ * d_
    assert f.G == delta_ * d_ * delta_ + J_ * delta_
    f = ts.extract_operator_formulas(6, 1)
    assert f.L == delta_ * d_ * delta_ * d_ + J_ * F(2, 3) * delta_ * d_
    assert all(f.checks.values())


def test_critical_weight_pair():
    for n, k in ts.admissible((4, 6, 8)):
        p = (n - 2 * k) // 2
        it = ts.iterate_LL(n, k, p)
        Z, X = ts.LLk_pair(n, k)
        assert it.Y.is_zero() and it.Z == Z and it.X == X


def test_middle_degree_has_no_L():
    polys = ts.operator_polys(8, 4)
    assert polys["L"].is_zero()
    assert polys["Q"] == OperatorPoly.const(1)
    assert polys["G"] == delta_


def test_admissible_pairs():
    pairs = list(ts.admissible((4, 6)))
    assert pairs == [(4, 1), (6, 1), (6, 2), (6, 3)]


def test_inhomogeneous_poly_cannot_be_instantiated():
    from detourlab.hodge import build_random

    cx = build_random(4, seed=1)
    with pytest.raises(ValueError):
        (d_ + delta_).instantiate(cx, 1, 1)
