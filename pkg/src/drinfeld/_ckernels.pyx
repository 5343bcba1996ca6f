# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled series and lattice kernels.

Same interface and results as ``_kernels_py``: series are int32 arrays of
residue-field codes, lowest power first, and arithmetic goes through the
add/mul/inverse tables of the residue field.
"""

import numpy as np
cimport numpy as cnp

from . import _kernels_py

cnp.import_array()

BIG = _kernels_py.BIG
NAME = "compiled"

ctypedef cnp.int32_t code_t


cdef inline code_t _fma(const code_t[:, ::1] add, const code_t[:, ::1] mul,
                        code_t acc, code_t x, code_t y) nogil:
    if x == 0 or y == 0:
        return acc
    return add[acc, mul[x, y]]


def ser_mul(gf, a, b, Py_ssize_t L):
    """First L coefficients of a*b."""
    L = min(L, len(a) + len(b) - 1)
    if L <= 0 or len(a) == 0 or len(b) == 0:
        return np.zeros(0, dtype=np.int32)
    cdef const code_t[::1] av = np.ascontiguousarray(a[:L], dtype=np.int32)
    cdef const code_t[::1] bv = np.ascontiguousarray(b[:L], dtype=np.int32)
    if gf.n == 1:
        return _mul_prime(av, bv, L, gf.p)
    cdef const code_t[:, ::1] add = gf.add
    cdef const code_t[:, ::1] mul = gf.mul
    out = np.zeros(L, dtype=np.int32)
    cdef code_t[::1] ov = out
    cdef Py_ssize_t na = av.shape[0], nb = bv.shape[0], i, j, jmax
    cdef code_t x
    with nogil:
        for i in range(na):
            x = av[i]
            if x == 0:
                continue
            jmax = min(nb, L - i)
            for j in range(jmax):
                if bv[j] != 0:
                    ov[i + j] = add[ov[i + j], mul[x, bv[j]]]
    return out


cdef object _mul_prime(const code_t[::1] av, const code_t[::1] bv, Py_ssize_t L, long p):
    # over F_p the codes are the residues, so plain integer convolution works
    acc = np.zeros(L, dtype=np.int64)
    cdef cnp.int64_t[::1] cv = acc
    cdef Py_ssize_t na = av.shape[0], nb = bv.shape[0], i, j, jmax
    cdef cnp.int64_t x
    with nogil:
        for i in range(na):
            x = av[i]
            if x == 0:
                continue
            jmax = min(nb, L - i)
            for j in range(jmax):
                cv[i + j] += x * bv[j]
    return (acc % p).astype(np.int32)


def ser_inv(gf, a, Py_ssize_t L):
    """First L coefficients of 1/a, a[0] != 0."""
    if L <= 0:
        return np.zeros(0, dtype=np.int32)
    if gf.n == 1:
        return _inv_prime(np.ascontiguousarray(a, dtype=np.int32), L, gf.p, gf.inv[a[0]])
    cdef const code_t[:, ::1] add = gf.add
    cdef const code_t[:, ::1] mul = gf.mul
    cdef const code_t[::1] neg = gf.neg
    cdef const code_t[::1] av = np.ascontiguousarray(a, dtype=np.int32)
    out = np.zeros(L, dtype=np.int32)
    cdef code_t[::1] ov = out
    cdef code_t inv0 = gf.inv[av[0]]
    cdef Py_ssize_t na = av.shape[0], k, i
    cdef code_t acc
    with nogil:
        ov[0] = inv0
        for k in range(1, L):
            acc = 0
            for i in range(1, min(k, na - 1) + 1):
                acc = _fma(add, mul, acc, av[i], ov[k - i])
            ov[k] = mul[neg[acc], inv0] if acc != 0 else 0
    return out


cdef object _inv_prime(const code_t[::1] av, Py_ssize_t L, cnp.int64_t p, cnp.int64_t inv0):
    out = np.zeros(L, dtype=np.int64)
    cdef cnp.int64_t[::1] ov = out
    cdef Py_ssize_t na = av.shape[0], k, i, imax
    cdef cnp.int64_t acc
    with nogil:
        ov[0] = inv0
        for k in range(1, L):
            acc = 0
            imax = min(k, na - 1)
            for i in range(1, imax + 1):
                acc += av[i] * ov[k - i]
            ov[k] = ((p - acc % p) * inv0) % p
    return out.astype(np.int32)


def _combine(gf, basis, offset, vecs):
    cdef const code_t[:, ::1] add = gf.add
    cdef const code_t[:, ::1] mul = gf.mul
    cdef const code_t[:, ::1] bv = np.ascontiguousarray(basis, dtype=np.int32)
    cdef const code_t[:, ::1] vv = np.ascontiguousarray(vecs, dtype=np.int32)
    cdef Py_ssize_t nv = vv.shape[0], nb = vv.shape[1], Lb = bv.shape[1], i, b, j
    if offset is None:
        az = np.zeros((nv, Lb), dtype=np.int32)
    else:
        az = np.ascontiguousarray(np.tile(offset, (nv, 1)), dtype=np.int32)
    cdef code_t[:, ::1] zv = az
    cdef code_t c
    with nogil:
        for i in range(nv):
            for b in range(nb):
                c = vv[i, b]
                if c == 0:
                    continue
                for j in range(Lb):
                    if bv[b, j] != 0:
                        zv[i, j] = add[zv[i, j], mul[c, bv[b, j]]]
    return az


def lattice_valuations(gf, basis, base, basis_prec, offset, offset_prec, vecs):
    """Valuation and absolute precision of a.z for each coefficient vector."""
    az = _combine(gf, basis, offset, vecs)
    cdef const code_t[:, ::1] zv = az
    cdef const code_t[:, ::1] vv = np.ascontiguousarray(vecs, dtype=np.int32)
    cdef const cnp.int64_t[::1] bp = np.ascontiguousarray(basis_prec, dtype=np.int64)
    cdef Py_ssize_t nv = zv.shape[0], Lb = zv.shape[1], nb = vv.shape[1], i, j, b
    vals = np.empty(nv, dtype=np.int64)
    prec = np.empty(nv, dtype=np.int64)
    cdef cnp.int64_t[::1] vo = vals
    cdef cnp.int64_t[::1] po = prec
    cdef cnp.int64_t big = BIG, p0 = offset_prec if offset is not None else BIG, pr, v
    cdef cnp.int64_t b0 = base
    with nogil:
        for i in range(nv):
            pr = p0
            for b in range(nb):
                if vv[i, b] != 0 and bp[b] < pr:
                    pr = bp[b]
            v = big
            for j in range(Lb):
                if zv[i, j] != 0:
                    v = b0 + j
                    break
            if v >= pr:
                v = big
            vo[i] = v
            po[i] = pr
    return vals, prec


def lattice_accumulate(gf, e, basis, base, basis_prec, offset, offset_prec, vecs,
                       vals, precs, wpoly, welo, chan_k, chan_w, chan_lo, chan_hi):
    """Accumulate weighted powers sum_a w_c(a) (a.z)^(-k_c) into windows [lo_c, hi_c)."""
    return _kernels_py._accumulate(gf, e, _combine(gf, basis, offset, vecs), base, vecs, vals, precs,
                                   wpoly, welo, chan_k, chan_w, chan_lo, chan_hi, ser_mul, ser_inv)
