"""Form expressions, the gamma sample and modularity at small precision."""

from __future__ import annotations

import pytest

from drinfeld.drinfeld import DrinfeldData
from drinfeld.forms import (
    H, Eis, G, GammaMatrix, evaluate_form, forms_of, gamma_sample, group_act, jfactor, parse_form,
)
from drinfeld.lattice import SumParams
from drinfeld.localfield import FieldDesc, agreement
from drinfeld.verify import PointSpec

F = FieldDesc(3, 1, 2, 2, prec=80, need_root=True)


def test_grading():
    q, r = 3, 2
    assert G(1).weight(q, r) == 2 and G(2).weight(q, r) == 8
    assert H.weight(q, r) == 4 and H.type(q, r) == 1
    f = G(1) ** 2 * H
    assert f.weight(q, r) == 8 and f.type(q, r) == 1
    with pytest.raises(ValueError):
        (G(1) + G(2)).check_grading(q, r)
    (G(1) ** 4 + G(2)).check_grading(q, r)


@pytest.mark.parametrize("text", ["g(1)^4 + Eis(8)", "h*g(2)", "(g(1)+Eis(2))^3", "2*h"])
def test_parse_form_roundtrip(text):
    f = parse_form(text)
    assert str(parse_form(str(f))) == str(f)


@pytest.mark.parametrize("bad", ["g(", "h^", "Eis 2", "g(1) +", "x"])
def test_parse_form_errors(bad):
    with pytest.raises(SyntaxError):
        parse_form(bad)


@pytest.mark.parametrize("r", [2, 3])
def test_gamma_sample(r):
    gs = gamma_sample(F, r, seed=3)
    assert len(gs) >= 6
    for g in gs:
        prod = g @ g.inverse()
        ident = GammaMatrix.identity(F, r)
        assert all(agreement(x, y) == float("inf") for rx, ry in zip(prod.a, ident.a) for x, y in zip(rx, ry))


def test_gamma_rejects_non_units():
    two = [[F.theta(1), F.zero()], [F.zero(), F.one()]]
    with pytest.raises(ValueError):
        GammaMatrix(F, two)


def test_evaluate_form_products():
    pt = PointSpec.parse("z1=rootT(1,2)+g*T^-1").build(F)
    d = DrinfeldData(pt, SumParams(D=6))
    fm = forms_of(d)
    v = evaluate_form(d, G(1) ** 2 * H + Eis(2) * G(1) * H)
    want = d.g_i(1) ** 2 * fm.h + d.eis(2) * d.g_i(1) * fm.h
    assert v.weight == 8 and v.type == 1
    assert agreement(v.value, want) >= 60


def test_j_invariant_is_modular_invariant():
    pt = PointSpec.parse("z1=rootT(1,2)+g*T^-1").build(F)
    d = DrinfeldData(pt, SumParams(D=6))
    J = forms_of(d).j_invariant(1)
    for g in gamma_sample(F, 2)[1:4]:
        d2 = DrinfeldData(group_act(g, pt), SumParams(D=6))
        assert agreement(forms_of(d2).j_invariant(1), J) >= 50
        # g_1 has weight q-1 and type 0
        lhs = d2.g_i(1)
        rhs = jfactor(g, pt) ** 2 * d.g_i(1)
        assert agreement(lhs, rhs) >= 50
