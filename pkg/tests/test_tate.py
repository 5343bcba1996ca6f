"""Tate-algebra series, pole sums and the Anderson-Thakur function."""

from __future__ import annotations

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from drinfeld.localfield import FieldDesc, agreement, lf_carlitz_period
from drinfeld.tate import Omega, PoleSum, TSeries, ts_agreement

F = FieldDesc(3, 1, 2, 2, prec=80, need_root=True)
T = 5


def _tseries(coeffs):
    return TSeries(F, [F.elem(n0, c) if c else F.zero() for n0, c in coeffs])


def _t_minus_theta() -> TSeries:
    return TSeries(F, [-F.theta(1), F.one()] + [F.zero()] * (T - 1))


def test_omega_functional_equation():
    w = Omega(F).expand(T)
    assert ts_agreement(w.twist(1), _t_minus_theta() * w) >= F.prec - 8


def test_omega_inverse():
    om = Omega(F)
    prod = om.expand(T) * om.inv_expand(T)
    one = TSeries.constant(F.one(), T)
    assert ts_agreement(prod, one) >= F.prec - 8


def test_omega_residue_is_minus_carlitz_period():
    om = Omega(F)
    assert agreement(-om.residue_theta(), lf_carlitz_period(F)) >= F.prec - 8


def test_pole_expansion():
    r = F.theta(1) + F.one()
    ps = PoleSum.pole(F, 1, r)
    ex = ps.expand(T)
    thq = F.theta(F.q)
    for k in range(T + 1):
        # 1/(theta^q - t) = sum_k t^k theta^(-q(k+1))
        assert agreement(ex[k], r / thq ** (k + 1)) == float("inf")


def test_pole_sum_twist_commutes_with_expansion():
    ps = PoleSum(F, [F.theta(2)], {0: F.one(), 2: F.theta(-1)})
    assert ts_agreement(ps.twist(1).expand(T), ps.expand(T).twist(1)) >= F.prec - 8


def test_pole_sum_partial_fractions_multiply():
    a = PoleSum(F, [F.one()], {0: F.theta(1)})
    b = PoleSum(F, [], {1: F.theta(-2), 2: F.one()})
    assert ts_agreement((a * b).expand(T), a.expand(T) * b.expand(T)) >= F.prec - 16


def test_eval_theta_matches_partial_fraction():
    ps = PoleSum(F, [F.one(), F.theta(-1)], {1: F.one()})
    th = F.theta(1)
    want = F.one() + F.theta(-1) * th + (F.theta(F.q) - th).inv()
    assert agreement(ps.eval_theta(), want) >= F.prec - 8


codes = st.integers(0, F.gf.Q - 1)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(-4, 4), st.lists(codes, min_size=1, max_size=4)), min_size=1, max_size=2),
       st.lists(st.tuples(st.integers(-4, 4), st.lists(codes, min_size=1, max_size=4)), min_size=1, max_size=2))
def test_gauss_norm_is_multiplicative(fa, fb):
    # polynomials of degree <= 1 padded to order T keep the product exact
    pad = [(0, [])] * (T + 1)
    a = _tseries((fa + pad)[: T + 1])
    b = _tseries((fb + pad)[: T + 1])
    na, nb = a.gauss_norm(), b.gauss_norm()
    assume(na is not None and nb is not None)
    assert (a * b).gauss_norm() == na + nb


def test_twist_is_a_ring_morphism():
    w = Omega(F).expand(T)
    c = PoleSum(F, [F.theta(1)], {1: F.one()}).expand(T)
    assert ts_agreement((w * c).twist(2), w.twist(2) * c.twist(2)) >= F.prec - 16
    assert ts_agreement((w + c).twist(1), w.twist(1) + c.twist(1)) >= F.prec - 16
    with pytest.raises(ValueError):
        w.twist(-1)
