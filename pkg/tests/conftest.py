"""Shared sessions and suite reports, computed once per test run."""

from __future__ import annotations

from functools import lru_cache

import pytest

from drinfeld.verify import CheckReport, PointSpec, Session, VerifyConfig, run_suites

# one CM and one generic Puiseux point per rank
POINTS = {
    2: ("z1=rootT(1,2)", "z1=rootT(1,2)+g*T^-1+g^3"),
    3: ("z1=rootT(2,3), z2=rootT(1,3)", "z1=rootT(2,3)+g*T^(-1/3), z2=rootT(1,3)+g^2"),
}
E_OF_RANK = {2: 2, 3: 6}


@lru_cache(maxsize=None)
def session(r: int, which: int) -> Session:
    cfg = VerifyConfig(e=E_OF_RANK[r])
    return Session(cfg, PointSpec.parse(POINTS[r][which]))


@lru_cache(maxsize=None)
def reports(r: int, which: int, suite: str) -> tuple[CheckReport, ...]:
    return tuple(run_suites(session(r, which), [suite]))


@pytest.fixture(scope="session")
def rank2_cm() -> Session:
    return session(2, 0)


@pytest.fixture(scope="session")
def rank3_cm() -> Session:
    return session(3, 0)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(mod.line(n, *results[n]))
