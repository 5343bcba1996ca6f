"""Series kernels: both backends against a naive convolution oracle."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drinfeld import _kernels_py, kernels
from drinfeld._gf import get_gf

BACKENDS = [_kernels_py]
try:
    from drinfeld import _ckernels
    BACKENDS.append(_ckernels)
except ImportError:  # pragma: no cover
    pass

FIELDS = [(2, 1), (3, 1), (3, 2), (5, 1), (2, 4)]


def naive_mul(gf, a, b, L):
    out = [0] * L
    for i, x in enumerate(a[:L]):
        for j, y in enumerate(b[: L - i]):
            out[i + j] = int(gf.add[out[i + j], gf.mul[x, y]])
    return out


@st.composite
def series(draw, Q: int, unit: bool = False):
    n = draw(st.integers(1, 60))
    c = draw(st.lists(st.integers(0, Q - 1), min_size=n, max_size=n))
    if unit and c[0] == 0:
        c[0] = 1
    return np.array(c, dtype=np.int32)


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.NAME)
@pytest.mark.parametrize("pn", FIELDS)
@settings(max_examples=30, deadline=None)
@given(data=st.data())
def test_ser_mul_matches_naive(mod, pn, data):
    gf = get_gf(*pn)
    a, b = data.draw(series(gf.Q)), data.draw(series(gf.Q))
    L = data.draw(st.integers(1, 80))
    want = naive_mul(gf, a.tolist(), b.tolist(), min(L, len(a) + len(b) - 1))
    assert mod.ser_mul(gf, a, b, L).tolist() == want


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.NAME)
@pytest.mark.parametrize("pn", FIELDS)
@settings(max_examples=30, deadline=None)
@given(data=st.data())
def test_ser_inv_is_inverse(mod, pn, data):
    gf = get_gf(*pn)
    a = data.draw(series(gf.Q, unit=True))
    L = data.draw(st.integers(1, 80))
    inv = mod.ser_inv(gf, a, L)
    assert naive_mul(gf, a.tolist(), inv.tolist(), L) == [1] + [0] * (L - 1)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernels not built")
def test_backends_agree_on_long_series():
    rng = np.random.default_rng(1)
    for p, n, L in [(3, 1, 1500), (3, 2, 300), (2, 3, 400)]:
        gf = get_gf(p, n)
        a = rng.integers(0, gf.Q, L).astype(np.int32)
        b = rng.integers(0, gf.Q, L).astype(np.int32)
        a[0] = 1
        outs = [(m.ser_mul(gf, a, b, L).tolist(), m.ser_inv(gf, a, L).tolist()) for m in BACKENDS]
        assert outs[0] == outs[1]


def test_dispatcher():
    names = kernels.available()
    assert "python" in names
    assert kernels.active() == names[0]
    try:
        kernels.use("python")
        assert kernels.active() == "python"
        with pytest.raises(ValueError):
            kernels.use("fortran")
    finally:
        kernels.use(names[0])
