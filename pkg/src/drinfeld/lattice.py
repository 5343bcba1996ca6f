"""Lattice sums over A z_1 + ... + A z_r.

Every sum runs over the finite F_q-space

    V_D = { a.z : deg a_i <= D }.

Rather than enumerating its q^(r(D+1)) elements, the sums are read off
the additive polynomial e_V(x) = x prod_{v in V, v != 0} (1 - x/v),
built one basis vector lambda at a time through

    e_{V + F_q lambda}(x) = e_V(x) - e_V(x)^q / e_V(lambda)^(q-1).

This is an exact identity of finite sums, so the values equal the
brute-force sums over V_D; ``brute_sums`` keeps the enumeration route
as an oracle. First derivatives in z_1..z_{r-1} are carried by
dual numbers.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from . import kernels
from .localfield import INF, FieldDesc, LFElem, PrecisionError
from .tate import TSeries


class IndependenceError(PrecisionError):
    """The point's coordinates look A-linearly dependent at working precision."""


# -- dual numbers ----------------------------------------------------------

class Jet:
    """a + sum_j d_j eps_j with eps_i eps_j = 0."""

    __slots__ = ("a", "d")

    def __init__(self, a: LFElem, d: Sequence[LFElem]):
        self.a = a
        self.d = tuple(d)

    @classmethod
    def const(cls, a: LFElem, n: int) -> "Jet":
        z = a.F.zero()
        return cls(a, [z] * n)

    def __add__(self, o: "Jet") -> "Jet":
        return Jet(self.a + o.a, [x + y for x, y in zip(self.d, o.d)])

    def __sub__(self, o: "Jet") -> "Jet":
        return Jet(self.a - o.a, [x - y for x, y in zip(self.d, o.d)])

    def __neg__(self) -> "Jet":
        return Jet(-self.a, [-x for x in self.d])

    def __mul__(self, o) -> "Jet":
        if isinstance(o, LFElem):
            return Jet(self.a * o, [x * o for x in self.d])
        return Jet(self.a * o.a, [_mul0(self.a, y) + _mul0(x, o.a) for x, y in zip(self.d, o.d)])

    def inv(self) -> "Jet":
        ia = self.a.inv()
        ia2 = ia * ia
        return Jet(ia, [-_mul0(x, ia2) for x in self.d])

    def frob(self, i: int = 1) -> "Jet":
        z = self.a.F.zero()
        return Jet(self.a.frob(i), [z] * len(self.d))

    def scale(self, code: int) -> "Jet":
        return Jet(self.a.scale(code), [x.scale(code) for x in self.d])

    def __pow__(self, n: int) -> "Jet":
        if n < 0:
            return self.inv() ** (-n)
        out = Jet.const(self.a.F.one(), len(self.d))
        for _ in range(n):
            out = out * self
        return out


def _mul0(x: LFElem, y: LFElem) -> LFElem:
    if x.is_zero and x.exact:
        return x
    if y.is_zero and y.exact:
        return y
    return x * y


# -- points and parameters -------------------------------------------------

@dataclass
class SumParams:
    D: int = 8
    G: int | None = None
    D_check: int = 1
    workers: int = 1
    shell_report: list = field(default_factory=list)

    def __post_init__(self):
        if self.D < 1:
            raise ValueError("lattice bound D must be >= 1")
        if self.D_check < 0:
            raise ValueError("D_check must be >= 0")


@dataclass
class OmegaPoint:
    z: list[LFElem]
    label: str = "z"
    im_estimate: Fraction | None = None

    def __post_init__(self):
        if len(self.z) < 2:
            raise ValueError("rank must be at least 2")
        F = self.z[0].F
        for x in self.z:
            if x.F.key != F.key:
                raise ValueError("coordinates live in different fields")
        last = self.z[-1]
        if not (last.exact and last.n0 == 0 and len(last.c) == 1 and int(last.c[0]) == 1):
            raise ValueError("the last coordinate must be exactly 1")

    @property
    def F(self) -> FieldDesc:
        return self.z[0].F

    @property
    def r(self) -> int:
        return len(self.z)

    def describe(self) -> dict:
        return {"label": self.label, "r": self.r, "z": [repr(x) for x in self.z]}


# -- enumeration -----------------------------------------------------------

def fq_codes(F: FieldDesc) -> np.ndarray:
    return np.array(F.fq, dtype=np.int32)


def monic_vectors(F: FieldDesc, r: int) -> list[tuple[int, ...]]:
    """Nonzero mu in F_q^r whose last nonzero entry is 1 (as codes)."""
    out = []
    for mu in itertools.product(F.fq, repeat=r):
        nz = [x for x in mu if x]
        if nz and nz[-1] == 1:
            out.append(tuple(mu))
    return out


def enum_vectors(F: FieldDesc, r: int, D: int, chunk: int = 1 << 14) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (shell degree, block) with each nonzero a in A^r, deg a_i <= D, once.

    A block has shape (n, r, D+1): residue codes of the coefficient of
    theta^d in a_i. Shell d holds the vectors of maximal degree exactly d.
    """
    fq = fq_codes(F)
    q = len(fq)
    for d in range(D + 1):
        nb = r * (d + 1)
        total = q**nb
        start = 1 if d == 0 else 0
        for lo in range(start, total, chunk):
            idx = np.arange(lo, min(total, lo + chunk), dtype=np.int64)
            digits = np.empty((len(idx), r, d + 1), dtype=np.int64)
            rem = idx.copy()
            for k in range(d + 1):
                for i in range(r):
                    digits[:, i, k] = rem % q
                    rem //= q
            keep = (digits[:, :, d] != 0).any(axis=1) if d > 0 else np.ones(len(idx), bool)
            block = np.zeros((int(keep.sum()), r, D + 1), dtype=np.int32)
            block[:, :, : d + 1] = fq[digits[keep]]
            if len(block):
                yield d, block


def count_vectors(q: int, r: int, D: int) -> int:
    return q ** ((D + 1) * r) - 1


# -- basis reduction -------------------------------------------------------

def _leading_relation(F: FieldDesc, b: list[LFElem]):
    """An F_q-relation among leading coefficients of same-class vectors."""
    e = F.e
    groups: dict[int, list[int]] = {}
    for i, x in enumerate(b):
        groups.setdefault(x.n0 % e, []).append(i)
    fq = list(F.fq)
    for idx in groups.values():
        if len(idx) < 2:
            continue
        leads = [b[i].leading() for i in idx]
        for cs in itertools.product(fq, repeat=len(idx)):
            if not any(cs):
                continue
            acc = 0
            for c, l in zip(cs, leads):
                if c:
                    acc = int(F.gf.add[acc, F.gf.mul[c, l]])
            if acc == 0:
                terms = [(i, c) for i, c in zip(idx, cs) if c]
                i0 = min(terms, key=lambda t: b[t[0]].n0)[0]
                return i0, [(i, c, (b[i].n0 - b[i0].n0) // e) for i, c in terms]
    return None


def reduce_basis(z: Sequence[LFElem]) -> tuple[list[LFElem], list[list[LFElem]]]:
    """An orthogonal basis b = U z of A z_1 + ... + A z_r, U in GL_r(A).

    Orthogonal means |sum a_k b_k| = max |a_k b_k|, which holds exactly
    when the leading coefficients within each valuation class mod 1 are
    F_q-independent. The result is sorted by increasing absolute value.
    """
    F = z[0].F
    r = len(z)
    b = list(z)
    U = [[F.one() if i == j else F.zero() for j in range(r)] for i in range(r)]
    for x in b:
        if x.is_zero:
            raise IndependenceError("a coordinate vanishes at working precision")
    while True:
        rel = _leading_relation(F, b)
        if rel is None:
            break
        i0, terms = rel
        nb, nU = F.zero(), [F.zero()] * r
        for i, c, k in terms:
            th = F.theta(k).scale(c)
            nb = nb + b[i] * th
            nU = [x + y * th for x, y in zip(nU, U[i])]
        if nb.is_zero:
            raise IndependenceError("the coordinates are A-linearly dependent at working precision")
        b[i0], U[i0] = nb, nU
    order = sorted(range(r), key=lambda i: (-b[i].n0, i))
    return [b[i] for i in order], [U[i] for i in order]


def _fq_inverse(F: FieldDesc, M: list[list[int]]) -> list[list[int]]:
    """Inverse of a matrix of residue codes by Gauss-Jordan elimination."""
    gf = F.gf
    n = len(M)
    A = [list(row) + [1 if i == j else 0 for j in range(n)] for i, row in enumerate(M)]
    for col in range(n):
        piv = next((i for i in range(col, n) if A[i][col]), None)
        if piv is None:
            raise IndependenceError("change-of-basis matrix is singular modulo theta")
        A[col], A[piv] = A[piv], A[col]
        inv = int(gf.inv[A[col][col]])
        A[col] = [int(gf.mul[inv, x]) for x in A[col]]
        for i in range(n):
            if i != col and A[i][col]:
                f = A[i][col]
                A[i] = [int(gf.add[x, gf.neg[gf.mul[f, y]]]) for x, y in zip(A[i], A[col])]
    return [row[n:] for row in A]


def _fq_vecmat(F: FieldDesc, v: Sequence[int], M: list[list[int]]) -> list[int]:
    gf = F.gf
    out = []
    for k in range(len(M[0])):
        acc = 0
        for i, x in enumerate(v):
            if x and M[i][k]:
                acc = int(gf.add[acc, gf.mul[x, M[i][k]]])
        out.append(acc)
    return out


def _poly_coeffs(F: FieldDesc, x: LFElem, T: int) -> list[int]:
    """Residue codes of an exact polynomial in theta, degrees 0..T."""
    out = [0] * (T + 1)
    for d in range(T + 1):
        out[d] = x.coeff(-F.e * d)
    return out


# -- the additive-polynomial engine ----------------------------------------

class _Build:
    """e_V tracked on a list of points together with its first coefficients.

    Works over ``Jet`` or plain ``LFElem`` values. Each added vector is
    pushed through all earlier corrections, which evaluates e_V at it.
    """

    def __init__(self, F: FieldDesc, nalpha: int, points: list, ndual: int | None):
        self.F = F
        self.q = F.q
        self.vals = list(points)
        self.hist: list = []
        one, z = F.one(), F.zero()
        if ndual is None:
            self.alpha = [one] + [z] * nalpha
        else:
            self.alpha = [Jet(one, [z] * ndual)] + [Jet(z, [z] * ndual) for _ in range(nalpha)]

    def evaluate(self, y):
        for c in self.hist:
            y = y - y.frob(1) * c
        return y

    def add(self, lam) -> None:
        y = self.evaluate(lam)
        a = y.a if isinstance(y, Jet) else y
        if a.is_zero:
            raise IndependenceError("a lattice vector vanishes at working precision")
        c = y.inv() ** (self.q - 1)
        self.hist.append(c)
        self.vals = [v - v.frob(1) * c for v in self.vals]
        for i in range(len(self.alpha) - 1, 0, -1):
            self.alpha[i] = self.alpha[i] - self.alpha[i - 1].frob(1) * c


def _eis_from_alpha(F: FieldDesc, alpha: list, kmax: int) -> dict[int, object]:
    """Eis_k for (q-1) | k <= kmax from x/e_V(x) = 1 - sum_k Eis_k x^k."""
    q = F.q
    M = kmax // (q - 1)
    degs = [(q**i - 1) // (q - 1) for i in range(len(alpha))]
    c = [alpha[0]]
    for m in range(1, M + 1):
        acc = None
        for i in range(1, len(alpha)):
            if degs[i] > m:
                break
            term = alpha[i] * c[m - degs[i]]
            acc = term if acc is None else acc + term
        c.append(-acc if acc is not None else alpha[0] - alpha[0])
    return {m * (q - 1): -c[m] for m in range(M + 1)}


class LatticeSums:
    """All lattice-sum channels at one point, to shell D.

    Values are reported with precision min(arithmetic precision,
    valuation of the outermost shell's contribution).
    """

    def __init__(self, point: OmegaPoint, params: SumParams | None = None,
                 derivatives: bool = True, nalpha: int | None = None):
        self.point = point
        self.params = params or SumParams()
        self.F = F = point.F
        self.r = r = point.r
        self.nd = (r - 1) if derivatives else 0
        self.nalpha = nalpha if nalpha is not None else r + 1
        self._check_guard()
        self.mus = monic_vectors(F, r)
        self.basis, self.U = reduce_basis(point.z)
        self._U0inv = _fq_inverse(F, [[u.coeff(0) for u in row] for row in self.U])
        D = self.params.D
        offsets = [self._offset(mu) for mu in self.mus]
        b = _Build(F, self.nalpha, offsets, self.nd)
        snaps = []
        for d in range(D + 1):
            for j in range(r):
                b.add(self._lam(d, j))
            snaps.append((list(b.alpha), list(b.vals)))
        self._snaps = snaps
        self._tate_cache: dict[tuple[int, int], LFElem] = {}
        self._eis_cache: dict[int, dict] = {}
        self.params.shell_report = self.shell_report()

    def _lam(self, d: int, k: int) -> Jet:
        """theta^d b_k with d b_k / d z_j = U_kj."""
        th = self.F.theta(d)
        return Jet(th * self.basis[k], [th * self.U[k][j] for j in range(self.nd)])

    def _offset(self, mu: tuple[int, ...]) -> Jet:
        """theta^-1 mu.z moved by a lattice vector to theta^-1 c.b.

        With mu = c U + theta w the difference is w.b, which lies in the
        lattice, so every channel summed over the full lattice is unchanged
        while the evaluation avoids cancellation.
        """
        F = self.F
        tinv = F.theta(-1)
        c = _fq_vecmat(F, mu, self._U0inv)
        acc = F.zero()
        dual = [F.zero()] * self.nd
        for k, ck in enumerate(c):
            if not ck:
                continue
            acc = acc + (self.basis[k] * tinv).scale(ck)
            for j in range(self.nd):
                dual[j] = dual[j] + (self.U[k][j] * tinv).scale(ck)
        return Jet(acc, dual)

    def _check_guard(self) -> None:
        G = self.params.G
        Dc = self.params.D_check
        vmax = min_abs_valuation(self.point, Dc)
        self.max_valuation = vmax
        if G is not None and vmax > G:
            raise IndependenceError(
                f"|a.z| = q^-{vmax} below the guard q^-{G} for some deg <= {Dc} vector")

    # -- tails -----------------------------------------------------------
    def _with_tail(self, new: LFElem, old: LFElem) -> LFElem:
        diff = new - old
        tail = diff.prec if diff.is_zero else diff.n0
        return new.truncate(tail)

    def shell_report(self) -> list[dict]:
        """Valuation (u-digits) of each shell's contribution to Eis_{q-1}."""
        out = []
        prev = None
        for d, (alpha, _) in enumerate(self._snaps):
            a1 = alpha[1].a
            if prev is not None:
                diff = a1 - prev
                out.append({"shell": d, "valuation": diff.prec if diff.is_zero else diff.n0,
                            "zero_to_precision": diff.is_zero})
            prev = a1
        return out

    def tail_ok(self) -> bool:
        vals = [s["valuation"] for s in self.shell_report()]
        return all(b >= a for a, b in zip(vals[1:], vals[2:]))

    # -- scalar channels -------------------------------------------------
    def _eis_all(self, idx: int, kmax: int) -> dict:
        key = (idx, kmax)
        if key not in self._eis_cache:
            self._eis_cache[key] = _eis_from_alpha(self.F, self._snaps[idx][0], kmax)
        return self._eis_cache[key]

    def _eis_jet(self, k: int, idx: int) -> Jet | None:
        F = self.F
        if k % (F.q - 1):
            return None
        if k > F.q ** self.nalpha - 1:
            raise ValueError(f"weight {k} exceeds the tracked range; raise nalpha")
        return self._eis_all(idx, k)[k]

    def eisenstein(self, k: int) -> LFElem:
        """sum_{a != 0} (a.z)^(-k) over V_D, with Eis_0 = -1."""
        F = self.F
        if k < 0:
            raise ValueError("weight must be >= 0")
        if k == 0:
            return -F.one()
        if k % (F.q - 1):
            ref = self.eisenstein(F.q - 1)
            return F.zero(ref.prec)
        new = self._eis_jet(k, -1).a
        old = self._eis_jet(k, -2).a
        return self._with_tail(new, old)

    def eisenstein_partial(self, j: int, k: int) -> LFElem:
        """d/dz_j of Eis_k (j is 1-based), i.e. -k sum a_j (a.z)^(-k-1)."""
        self._check_j(j)
        F = self.F
        if k % (F.q - 1) or k == 0:
            return F.zero(self.eisenstein(F.q - 1).prec)
        new = self._eis_jet(k, -1).d[j - 1]
        old = self._eis_jet(k, -2).d[j - 1]
        return self._with_tail(new, old)

    def _mu_index(self, mu: Sequence[int]) -> tuple[int, int]:
        """Index of the monic representative and the scalar c with mu = c mu0."""
        F = self.F
        mu = tuple(int(x) for x in mu)
        nz = [x for x in mu if x]
        if not nz or len(mu) != self.r:
            raise ValueError("mu must be a nonzero vector of length r")
        c = nz[-1]
        cinv = int(F.gf.inv[c])
        mono = tuple(int(F.gf.mul[cinv, x]) for x in mu)
        return self.mus.index(mono), c

    def eisenstein_mu(self, mu: Sequence[int]) -> LFElem:
        """E_mu = sum_{b} 1/(theta^-1 mu.z + b.z) = 1/e_V(theta^-1 mu.z)."""
        i, c = self._mu_index(mu)
        new = self._snaps[-1][1][i].a.inv()
        old = self._snaps[-2][1][i].a.inv()
        return self._with_tail(new, old).scale(int(self.F.gf.inv[c]))

    def eisenstein_mu_partial(self, mu: Sequence[int], j: int) -> LFElem:
        self._check_j(j)
        i, c = self._mu_index(mu)
        vals = []
        for idx in (-1, -2):
            y = self._snaps[idx][1][i]
            vals.append(y.inv().d[j - 1])
        return self._with_tail(*vals).scale(int(self.F.gf.inv[c]))

    def _check_j(self, j: int) -> None:
        if not 1 <= j <= self.nd:
            raise ValueError(f"derivative index must lie in 1..{self.nd}")

    # -- Tate channels ---------------------------------------------------
    def _tate_red(self, k: int, d: int) -> LFElem:
        """sum over V_D of [a'_k]_d / (a'.b) in reduced coordinates (k 0-based)."""
        key = (k, d)
        if key not in self._tate_cache:
            self._tate_cache.update(self._tate_batch([key]))
        return self._tate_cache[key]

    def prefetch_tate(self, T: int) -> None:
        keys = [(k, d) for k in range(self.r) for d in range(T + 1) if (k, d) not in self._tate_cache]
        if not keys:
            return
        if self.params.workers > 1:
            with ThreadPoolExecutor(self.params.workers) as ex:
                for res in ex.map(lambda key: self._tate_batch([key]), keys):
                    self._tate_cache.update(res)
        else:
            self._tate_cache.update(self._tate_batch(keys))

    def _tate_batch(self, keys) -> dict:
        out = {}
        for k, d in keys:
            if d > self.params.D - 1:
                raise ValueError(f"t-degree {d} needs D >= {d + 1}")
            out[(k, d)] = self._tate_one(k, d)
        return out

    def _tate_one(self, k: int, d: int) -> LFElem:
        """-1/e_W(theta^d b_k) with W = V_D minus the (d, k) axis."""
        F, r, D = self.F, self.r, self.params.D
        b = _Build(F, 0, [F.theta(d) * self.basis[k]], None)
        res = []
        for dd in range(D + 1):
            for kk in range(r):
                if (dd, kk) != (d, k):
                    b.add(F.theta(dd) * self.basis[kk])
            res.append(-(b.vals[0].inv()))
        return self._with_tail(res[-1], res[-2])

    def tate_coeff(self, j: int, d: int) -> LFElem:
        """sum_a [a_j]_d / (a.z) in the original coordinates (j 1-based)."""
        return self.eisenstein_tate(j, 1, d)[d]

    def eisenstein_tate(self, j: int, k: int, T: int) -> TSeries:
        """sum_a a_j(t)/(a.z)^k to t-order T; k must be a power of p.

        With a = a' U the weight is a_j(t) = sum_k a'_k(t) U_kj(t).
        """
        F = self.F
        t, kk = 0, k
        while kk % F.p == 0:
            kk //= F.p
            t += 1
        if kk != 1:
            raise ValueError("Tate sums are supported for k a power of p; use brute_sums otherwise")
        self.prefetch_tate(T)
        acc = None
        for m in range(self.r):
            u = self.U[m][j - 1]
            if u.is_zero:
                continue
            red = TSeries(F, [self._tate_red(m, d).frobp(t) for d in range(T + 1)])
            poly = TSeries(F, [F.const(c) for c in _poly_coeffs(F, u, T)])
            term = red * poly
            acc = term if acc is None else acc + term
        return acc


def min_abs_valuation(point: OmegaPoint, D: int) -> int:
    """max over nonzero deg <= D vectors of v(a.z) in u-digits (brute force)."""
    F, r = point.F, point.r
    basis_el = [F.theta(d) * point.z[j] for d in range(D + 1) for j in range(r)]
    base, basis, bprec = _align(F, basis_el)
    worst = -(1 << 62)
    for _, block in enum_vectors(F, r, D):
        vecs = block[:, :, : D + 1].transpose(0, 2, 1).reshape(len(block), -1)
        vals, _ = kernels.lattice_valuations(F.gf, basis, base, bprec, None, kernels.BIG, vecs)
        if (vals >= kernels.BIG).any():
            raise IndependenceError("a lattice vector vanishes at working precision")
        worst = max(worst, int(vals.max()))
    return worst


def _align(F: FieldDesc, els: list[LFElem], extra: int = 0):
    """Stack elements as rows over a common exponent range."""
    lo = min(x.n0 for x in els if not x.is_zero)
    precs = np.array([int(x.prec) if x.prec != INF else kernels.BIG for x in els], dtype=np.int64)
    hi = max(x.n0 + len(x.c) for x in els)
    fin = [int(x.prec) for x in els if x.prec != INF]
    if fin:
        hi = max(hi, min(fin))
    hi = max(hi, lo + F.prec + extra)
    rows = np.zeros((len(els), hi - lo), dtype=np.int32)
    for i, x in enumerate(els):
        s = x.n0 - lo
        n = min(len(x.c), hi - x.n0)
        if n > 0:
            rows[i, s: s + n] = x.c[:n]
    return lo, rows, precs


def brute_sums(point: OmegaPoint, D: int, channels: Sequence[tuple[int, object]],
               mu: Sequence[int] | None = None, hi: int | None = None,
               workers: int = 1, shuffle: int | None = None) -> list[LFElem]:
    """Direct enumeration of weighted sums over V_D (test oracle and benchmark).

    Each channel is (k, weight) and sums w(a) (a.z + off)^(-k), where
    off = theta^-1 mu.z when ``mu`` is given (then a = 0 is included).
    weight is None (unit), ("coef", j, d) for the F_q-coefficient
    [a_j]_d, or ("poly", j) for a_j(theta) (plus mu_j theta^-1 with an
    offset). Indices j are 1-based. ``shuffle`` (a seed) permutes the
    summation order, for determinism checks.
    """
    F, r = point.F, point.r
    e = F.e
    basis_el = [F.theta(d) * point.z[j] for d in range(D + 1) for j in range(r)]
    off_el = None
    if mu is not None:
        off_el = F.zero()
        for j, c in enumerate(mu):
            if c:
                off_el = off_el + (point.z[j] * F.theta(-1)).scale(int(c))
    rows_src = basis_el + ([off_el] if off_el is not None else [])
    base, rows, precs = _align(F, rows_src, extra=F.e * (D + 2))
    if off_el is not None:
        basis, bprec = rows[:-1], precs[:-1]
        offset, oprec = rows[-1], int(precs[-1])
    else:
        basis, bprec, offset, oprec = rows, precs, None, kernels.BIG
    if hi is None:
        hi = F.prec

    blocks = [blk for _, blk in enum_vectors(F, r, D)]
    if mu is not None:
        blocks.append(np.zeros((1, r, D + 1), dtype=np.int32))
    if shuffle is not None:
        rng = np.random.default_rng(shuffle)
        blocks = [blocks[i][rng.permutation(len(blocks[i]))] for i in rng.permutation(len(blocks))]

    nw = len(channels)
    welo = np.zeros(nw, dtype=np.int64)
    for w, (_, wt) in enumerate(channels):
        if wt is not None and wt[0] == "poly" and mu is not None:
            welo[w] = -1
    dw = D + 2

    def weights(block):
        W = np.zeros((len(block), nw, dw), dtype=np.int32)
        for w, (_, wt) in enumerate(channels):
            if wt is None:
                continue
            if wt[0] == "coef":
                W[:, w, 0] = block[:, wt[1] - 1, wt[2]]
            else:
                j = wt[1] - 1
                if mu is not None:
                    W[:, w, 0] = int(mu[j])
                    W[:, w, 1:] = block[:, j, :]
                else:
                    W[:, w, : D + 1] = block[:, j, :]
        return W

    # window: the most negative term valuation
    allv = []
    for blk in blocks:
        vecs = blk.transpose(0, 2, 1).reshape(len(blk), -1)
        v, _ = kernels.lattice_valuations(F.gf, basis, base, bprec, offset, oprec, vecs)
        if (v >= kernels.BIG).any():
            raise IndependenceError("a lattice vector vanishes at working precision")
        allv.append(int(v.max()))
    vmax = max(allv)
    ks = np.array([k for k, _ in channels], dtype=np.int64)
    lo_all = int((-ks * vmax).min()) - e * (D + 2)
    lo_all = min(lo_all, hi - 1)
    chan_lo = np.full(nw, lo_all, dtype=np.int64)
    chan_hi = np.full(nw, hi, dtype=np.int64)
    chan_w = np.array([-1 if wt is None else w for w, (_, wt) in enumerate(channels)], dtype=np.int64)

    def job(blk):
        vecs = blk.transpose(0, 2, 1).reshape(len(blk), -1).astype(np.int32)
        v, pr = kernels.lattice_valuations(F.gf, basis, base, bprec, offset, oprec, vecs)
        return kernels.lattice_accumulate(F.gf, e, basis, base, bprec, offset, oprec, vecs, v, pr,
                                          weights(blk), welo, ks, chan_w, chan_lo, chan_hi)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(job, blocks))
    else:
        parts = [job(b) for b in blocks]
    # deterministic fold in block order
    acc = np.zeros_like(parts[0][0])
    cprec = np.full(nw, kernels.BIG, dtype=np.int64)
    for a, cp in parts:
        acc = F.gf.add[acc, a]
        cprec = np.minimum(cprec, cp)
    out = []
    for c in range(nw):
        pr = min(int(cprec[c]), hi)
        out.append(F.elem(lo_all, acc[c], pr))
    return out
