"""Report plumbing, sessions and algebraic recognition on known values."""

from __future__ import annotations

import pytest

from drinfeld.localfield import FieldDesc, PrecisionError, lf_carlitz_period, lf_parse
from drinfeld.verify import (
    CheckReport, PointSpec, Session, VerifyConfig, compare, confirm_relation, eval_relation,
    recognize_algebraic, required_residue_degree, run_suites, summarize,
)


def _F(prec: int) -> FieldDesc:
    return FieldDesc(3, 1, 2, 2, prec=prec)


def test_point_spec():
    sp = PointSpec.parse("z1=rootT(2,3), z2=rootT(1,3)")
    assert sp.r == 3 and sp.text() == "z1=rootT(2,3), z2=rootT(1,3)"
    with pytest.raises(SyntaxError):
        PointSpec.parse("rootT(1,2)")
    with pytest.raises(SyntaxError):
        PointSpec.parse("z2=T", r=3)


def test_required_residue_degree():
    assert required_residue_degree(3, 1, 1, 2) == 2
    assert required_residue_degree(3, 1, 2, 2) == 2


def test_compare_and_report():
    F = _F(40)
    a = lf_parse("T + T^-3 + O(T^-10)", F)
    rep = compare("x", "pt", a, a, 10)
    assert rep.passed and rep.matched == 22
    d = rep.as_dict()
    assert list(d) == ["identity", "point", "lhs", "rhs", "matched", "target", "passed", "seconds", "note"]
    exact = compare("y", "pt", F.one(), F.one(), 5).as_dict()
    assert exact["matched"] == "exact"
    assert summarize([rep, CheckReport("z", "pt", "", "", 0, 1, False)])["failed"] == ["z"]


def test_unknown_suite():
    S = Session(VerifyConfig(N=40, D=4), PointSpec.parse("z1=rootT(1,2)"))
    with pytest.raises(KeyError):
        run_suites(S, ["nope"])


def test_session_calibration():
    S = Session(VerifyConfig(N=60, D=6), PointSpec.parse("z1=rootT(1,2)"))
    assert S.W >= 60 + 2 * S.cfg.guard
    assert S.target() == 52 and S.target(3) == 36
    m1 = Session(VerifyConfig(m=1, N=40, D=4), PointSpec.parse("z1=rootT(1,2)"))
    assert m1.cfg.m == 2 and m1.notes


def test_recognize_quadratic():
    # (x - theta^-1)^2 = theta, i.e. theta^2 x^2 + theta x + 1 - theta^3 = 0 over F_3
    lo, hi = _F(200), _F(400)
    x, x2 = (lf_parse("rootT(1,2) + T^-1", F) for F in (lo, hi))
    rec = recognize_algebraic(x, 4, 6, confirm=confirm_relation(x2, 380))
    assert rec.coeffs is not None
    assert rec.degree == 2 and rec.height == 3
    assert eval_relation(rec, x2)[0] == float("inf") or eval_relation(rec, x2)[0] >= 380


def test_recognize_rational():
    F = _F(200)
    x = (F.theta(1) + F.one()) / F.theta(2)
    rec = recognize_algebraic(x, 3, 4)
    assert rec.degree == 1 and rec.height == 2


def test_recognition_bounds_respected():
    F = _F(300)
    # minimal polynomial of degree 2 but with height 9, above the bound
    x = lf_parse("rootT(1,2) + T^-4", F)
    rec = recognize_algebraic(x, 2, 3)
    assert rec.coeffs is None and "height" in rec.note


def test_recognition_underdetermined_at_low_precision():
    F = FieldDesc(3, 1, 2, 2, prec=24, need_root=True)
    with pytest.raises(PrecisionError):
        recognize_algebraic(lf_carlitz_period(F), 6, 10)


def test_confirmation_rejects_false_candidates():
    lo, hi = _F(200), _F(400)
    x = lf_parse("rootT(1,2) + T^-1", lo)
    other = lf_parse("rootT(1,2) + T^-1 + T^-90", hi)
    rec = recognize_algebraic(x, 2, 3, confirm=confirm_relation(other, 380))
    assert rec.coeffs is None
    assert "failed at higher precision" in rec.note
