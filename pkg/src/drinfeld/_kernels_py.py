"""Pure numpy implementation of the series and lattice kernels.

Series are int32 arrays of residue-field codes, index 0 being the
lowest power of the uniformizer. All functions mirror the compiled
module in ``_ckernels.pyx`` and return identical results.
"""

from __future__ import annotations

import numpy as np

BIG = 1 << 60
NAME = "python"


def _pack_mul(gf, a: np.ndarray, b: np.ndarray, L: int) -> np.ndarray:
    p, n = gf.p, gf.n
    if n == 1:
        c = np.convolve(a.astype(np.int64), b.astype(np.int64))[:L] % p
        return c.astype(np.int32)
    w = 2 * n - 1
    A = np.zeros((len(a), w), dtype=np.int64)
    A[:, :n] = gf.digits[a]
    B = np.zeros((len(b), w), dtype=np.int64)
    B[:, :n] = gf.digits[b]
    c = np.convolve(A.ravel(), B.ravel())
    need = L * w
    if len(c) < need:
        c = np.concatenate([c, np.zeros(need - len(c), dtype=np.int64)])
    C = c[:need].reshape(L, w) % p
    red = (C @ gf.reduce_rows) % p
    return (red @ gf.weights).astype(np.int32)


def ser_mul(gf, a: np.ndarray, b: np.ndarray, L: int) -> np.ndarray:
    """First L coefficients of a*b."""
    L = min(L, len(a) + len(b) - 1)
    if L <= 0 or len(a) == 0 or len(b) == 0:
        return np.zeros(0, dtype=np.int32)
    return _pack_mul(gf, a[:L], b[:L], L)


def ser_inv(gf, a: np.ndarray, L: int) -> np.ndarray:
    """First L coefficients of 1/a, a[0] != 0 (Newton iteration)."""
    if L <= 0:
        return np.zeros(0, dtype=np.int32)
    b = np.array([gf.inv[a[0]]], dtype=np.int32)
    k = 1
    while k < L:
        k2 = min(2 * k, L)
        e = ser_mul(gf, a[:k2], b, k2)
        if len(e) < k2:
            e = np.concatenate([e, np.zeros(k2 - len(e), dtype=np.int32)])
        e[0] = 0
        corr = ser_mul(gf, b, e, k2)
        nb = np.zeros(k2, dtype=np.int32)
        nb[: len(b)] = b
        nb[: len(corr)] = gf.add[nb[: len(corr)], gf.neg[corr]]
        b, k = nb, k2
    return b


def ser_pow(gf, a: np.ndarray, k: int, L: int, mul=None) -> np.ndarray:
    mul = mul or ser_mul
    res = np.array([1], dtype=np.int32)
    base = a[:L]
    while k:
        if k & 1:
            res = mul(gf, res, base, L)
        k >>= 1
        if k:
            base = mul(gf, base, base, L)
    return res


def _split(p: int, k: int) -> tuple[int, int, bool]:
    """Return (t, k', direct) with k = p^t k'; direct means k+1 = p^t."""
    t, kk = 0, k + 1
    while kk % p == 0:
        kk //= p
        t += 1
    if kk == 1:
        return t, 1, True
    t, kk = 0, k
    while kk % p == 0:
        kk //= p
        t += 1
    return t, kk, False


def lattice_valuations(gf, basis, base, basis_prec, offset, offset_prec, vecs):
    """Valuation and absolute precision of a.z for each coefficient vector."""
    nv, nb = vecs.shape
    Lb = basis.shape[1]
    az = _combine(gf, basis, offset, vecs)
    nz = az != 0
    has = nz.any(axis=1)
    first = np.where(has, nz.argmax(axis=1), 0)
    prec = np.full(nv, offset_prec if offset is not None else BIG, dtype=np.int64)
    for b in range(nb):
        prec = np.where(vecs[:, b] != 0, np.minimum(prec, basis_prec[b]), prec)
    vals = np.where(has, base + first, BIG).astype(np.int64)
    vals = np.where(vals < prec, vals, BIG)
    del Lb
    return vals, prec


def _combine(gf, basis, offset, vecs):
    nv = vecs.shape[0]
    Lb = basis.shape[1]
    az = np.zeros((nv, Lb), dtype=np.int32) if offset is None else np.tile(offset, (nv, 1))
    for b in range(vecs.shape[1]):
        col = vecs[:, b]
        if not col.any():
            continue
        az = gf.add[az, gf.mul[col[:, None], basis[b][None, :]]]
    return az


def lattice_accumulate(gf, e, basis, base, basis_prec, offset, offset_prec, vecs,
                       vals, precs, wpoly, welo, chan_k, chan_w, chan_lo, chan_hi):
    """Accumulate weighted powers sum_a w_c(a) (a.z)^(-k_c) into windows [lo_c, hi_c)."""
    return _accumulate(gf, e, _combine(gf, basis, offset, vecs), base, vecs, vals, precs,
                       wpoly, welo, chan_k, chan_w, chan_lo, chan_hi, ser_mul, ser_inv)


def _accumulate(gf, e, az, base, vecs, vals, precs, wpoly, welo, chan_k, chan_w, chan_lo, chan_hi,
                mul, inv):
    """Driver shared by both backends; ``mul`` and ``inv`` are the series kernels."""
    p = gf.p
    nc = len(chan_k)
    width = int(max(1, (chan_hi - chan_lo).max())) if nc else 1
    acc = np.zeros((nc, width), dtype=np.int32)
    cprec = np.full(nc, BIG, dtype=np.int64)
    dw = wpoly.shape[2] if wpoly.ndim == 3 else 0
    split = [_split(p, int(k)) for k in chan_k]
    for i in range(vecs.shape[0]):
        v = int(vals[i])
        if v >= BIG:
            raise ZeroDivisionError("lattice vector vanishes at working precision")
        A = int(precs[i])
        rel_az = A - v if A < BIG else BIG
        s0 = v - base
        unit = az[i, s0: s0 + min(rel_az, az.shape[1] - s0)]
        # per-channel requirement on the unit inverse
        smax = []
        need_y = 0
        for c in range(nc):
            wc = int(chan_w[c])
            if wc < 0:
                sm = 0
            else:
                nzi = np.nonzero(wpoly[i, wc])[0]
                if len(nzi) == 0:
                    smax.append(None)
                    continue
                sm = int(welo[wc]) + int(nzi[-1])
            smax.append(sm)
            k = int(chan_k[c])
            need = int(chan_hi[c]) + e * sm + k * v
            if need <= 0:
                continue
            t, _, _ = split[c]
            need_y = max(need_y, -(-need // p**t))
        if need_y == 0:
            continue
        Ry = min(need_y, rel_az)
        y = inv(gf, unit, Ry)
        terms: dict[int, tuple[np.ndarray, int]] = {}
        for c in range(nc):
            sm = smax[c]
            if sm is None:
                continue
            k = int(chan_k[c])
            t, kk, direct = split[c]
            if k not in terms:
                pt = p**t
                if direct:
                    fy = _frob_expand(gf, y, t)
                    R = min(pt * Ry, rel_az)
                    T = mul(gf, fy, unit, R)
                else:
                    yk = ser_pow(gf, y, kk, Ry, mul)
                    T = _frob_expand(gf, yk, t)
                    R = pt * Ry
                terms[k] = (T, R)
            T, R = terms[k]
            tv = -k * v
            lo, hi = int(chan_lo[c]), int(chan_hi[c])
            wc = int(chan_w[c])
            if wc < 0:
                shifts = [(0, 1)]
            else:
                shifts = [(int(welo[wc]) + j, int(wpoly[i, wc, j])) for j in range(dw) if wpoly[i, wc, j]]
            cprec[c] = min(cprec[c], tv - e * sm + R)
            for s, coef in shifts:
                start = tv - e * s
                n_use = min(len(T), hi - start)
                if n_use <= 0:
                    continue
                seg = T[:n_use]
                if coef != 1:
                    seg = gf.mul[coef, seg]
                off = start - lo
                if off < 0:
                    raise ValueError("accumulation window starts above a term")
                acc[c, off: off + n_use] = gf.add[acc[c, off: off + n_use], seg]
    return acc, cprec


def _frob_expand(gf, a: np.ndarray, t: int) -> np.ndarray:
    """Coefficients of a^(p^t) in the same uniformizer (index scaled by p^t)."""
    if t == 0:
        return a
    pt = gf.p**t
    out = np.zeros((len(a) - 1) * pt + 1 if len(a) else 0, dtype=np.int32)
    out[::pt] = gf.frob_table(t)[a]
    return out
