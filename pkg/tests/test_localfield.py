"""Residue fields, truncated Puiseux arithmetic, roots, parsing and the Carlitz period."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drinfeld._gf import get_gf
from drinfeld.localfield import (
    FieldDesc, FieldError, INF, agreement, lf_carlitz_period, lf_parse, lf_root, neg_theta_root, to_str,
)

FIELDS = [(2, 1, 3, 1), (3, 1, 1, 2), (3, 1, 2, 2), (5, 1, 1, 4), (2, 2, 1, 3)]


def _field(key, prec=40) -> FieldDesc:
    p, s, m, e = key
    return FieldDesc(p, s, m, e, prec=prec)


@st.composite
def elements(draw, F: FieldDesc, nonzero: bool = False, exact: bool = False):
    n = draw(st.integers(1, 12))
    c = draw(st.lists(st.integers(0, F.gf.Q - 1), min_size=n, max_size=n))
    if nonzero or c[0] == 0:
        c[0] = draw(st.integers(1, F.gf.Q - 1))
    n0 = draw(st.integers(-6, 6))
    prec = INF if exact else n0 + draw(st.integers(n, F.prec))
    return F.elem(n0, c, prec)


def _eq(a, b) -> bool:
    return agreement(a, b) >= min(x.relprec for x in (a, b) if not x.is_zero) if not (a - b).is_zero else True


# -- residue fields ---------------------------------------------------------------

@pytest.mark.parametrize("p,n", [(2, 1), (2, 3), (3, 1), (3, 2), (3, 4), (5, 2), (7, 1)])
def test_gf_tables_are_a_field(p, n):
    gf = get_gf(p, n)
    Q = gf.Q
    rng = np.random.default_rng(p * 10 + n)
    a, b, c = (rng.integers(0, Q, 200) for _ in range(3))
    assert (gf.add[a, gf.add[b, c]] == gf.add[gf.add[a, b], c]).all()
    assert (gf.mul[a, gf.add[b, c]] == gf.add[gf.mul[a, b], gf.mul[a, c]]).all()
    assert (gf.add[a, gf.neg[a]] == 0).all()
    nz = np.arange(1, Q)
    assert (gf.mul[nz, gf.inv[nz]] == 1).all()
    # the multiplicative group is cyclic of order Q-1 and generated by exp[1]
    assert sorted(gf.exp.tolist()) == list(range(1, Q))
    # Frobenius is additive and multiplicative
    assert (gf.frob[gf.add[a, b]] == gf.add[gf.frob[a], gf.frob[b]]).all()
    assert (gf.frob[gf.mul[a, b]] == gf.mul[gf.frob[a], gf.frob[b]]).all()


def test_prime_field_codes_are_residues():
    gf = get_gf(5, 1)
    for a in range(5):
        for b in range(5):
            assert gf.add[a, b] == (a + b) % 5
            assert gf.mul[a, b] == (a * b) % 5


def test_subfield_is_fixed_by_q_power():
    gf = get_gf(3, 4)
    sub = gf.subfield(2)
    assert len(sub) == 9
    assert all(gf.power(c, 9) == c for c in sub)


# -- Puiseux arithmetic -------------------------------------------------------

@pytest.mark.parametrize("key", FIELDS)
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_ring_laws(key, data):
    F = _field(key)
    a, b, c = (data.draw(elements(F)) for _ in range(3))
    assert _eq((a + b) + c, a + (b + c))
    assert _eq(a * (b + c), a * b + a * c)
    assert _eq(a * b, b * a)
    assert (a - a).is_zero


@pytest.mark.parametrize("key", FIELDS)
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_inverse(key, data):
    F = _field(key)
    a = data.draw(elements(F, nonzero=True))
    one = a * a.inv()
    assert agreement(one, F.one()) >= a.relprec


def test_geometric_series_inverse():
    F = FieldDesc(3, 1, 1, 1, prec=30)
    x = (F.one() - F.u_pow(1)).inv()
    assert x.n0 == 0 and (x.c[:30] == 1).all() and x.prec == 30


@pytest.mark.parametrize("key", FIELDS)
@settings(max_examples=30, deadline=None)
@given(data=st.data())
def test_frobenius_is_the_q_power(key, data):
    F = _field(key)
    a, b = data.draw(elements(F)), data.draw(elements(F))
    assert _eq(a.frob(1), a ** F.q)
    assert _eq((a + b).frob(1), a.frob(1) + b.frob(1))
    assert _eq((a * b).frob(1), a.frob(1) * b.frob(1))
    assert _eq(a.frob(1).frob(1), a.frob(2))


def test_frobenius_fixes_residue_constants_after_m_steps():
    F = FieldDesc(3, 1, 2, 2, prec=20)
    for c in range(1, F.gf.Q):
        x = F.const(c)
        assert np.array_equal(x.frob(F.m).c, x.c)


def test_precision_tracking():
    F = FieldDesc(3, 1, 1, 2, prec=20)
    a = F.elem(0, [1, 1], prec=5)
    b = F.elem(2, [1], prec=INF)
    assert (a + b).prec == 5
    assert (a * b).prec == 7
    assert a.inv().prec == 5


# -- roots --------------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 4])
def test_nth_root(n):
    F = FieldDesc(3, 1, 2, 4, prec=60)
    x = F.one() + F.u_pow(3) + F.u_pow(4, F.res(1))
    y = lf_root(x, n)
    assert agreement(y**n, x) >= 50


def test_neg_theta_root():
    F = FieldDesc(3, 1, 2, 2, prec=40)
    w = neg_theta_root(F, 2)
    assert agreement(w**2, -F.theta(1)) >= 40
    assert w.valuation == Fraction(-1, 2)


def test_root_requires_residue_root():
    F = FieldDesc(3, 1, 1, 2, prec=20)
    with pytest.raises(FieldError):
        F.require_root()


# -- literal grammar ------------------------------------------------------------

@pytest.mark.parametrize("text", [
    "T", "T^-1", "g^3*T^(3/2) + 1", "rootT(1,2) + g*T^-1 + g^3", "T^2 + O(T^-5)", "-T + 2",
])
def test_parse_print_roundtrip(text):
    F = FieldDesc(3, 1, 2, 2, prec=40)
    x = lf_parse(text, F)
    y = lf_parse(to_str(x), F)
    assert to_str(x) == to_str(y)
    assert x.prec == y.prec


@pytest.mark.parametrize("bad", ["T^(1/3)", "z1=", "rootT(1", "T +", "foo"])
def test_parse_errors(bad):
    F = FieldDesc(3, 1, 2, 2, prec=40)
    with pytest.raises(SyntaxError):
        lf_parse(bad, F)


# -- Carlitz period -------------------------------------------------------------

def test_carlitz_period_valuation_q3():
    F = FieldDesc(3, 1, 2, 2, prec=60, need_root=True)
    assert lf_carlitz_period(F).valuation == Fraction(-3, 2)


def test_carlitz_period_power_has_prime_field_coefficients():
    F = FieldDesc(3, 1, 2, 2, prec=60, need_root=True)
    x = lf_carlitz_period(F) ** (F.q - 1)
    assert set(int(c) for c in x.c) <= set(F.fq)
    # and lies in K_infinity: only integral powers of theta
    assert all(c == 0 for i, c in enumerate(x.c) if (x.n0 + i) % F.e)


def test_carlitz_period_doubling_prefix():
    lo = lf_carlitz_period(FieldDesc(3, 1, 2, 2, prec=60, need_root=True))
    hi = lf_carlitz_period(FieldDesc(3, 1, 2, 2, prec=120, need_root=True))
    assert lo.n0 == hi.n0
    assert agreement(lo, hi) >= lo.relprec
