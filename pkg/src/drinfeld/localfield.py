"""Truncated Puiseux series over F_{q^m} in u = theta^(-1/e).

The valuation is normalized by v(theta) = -1, so v(u) = 1/e. An element
stores the exponent ``n0`` of its first nonzero coefficient (in units of
u), the coefficient codes, and an absolute precision ``prec``: the value
is known modulo u^prec. ``prec = INF`` marks an exact element.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from functools import lru_cache
from math import gcd

import numpy as np

from . import kernels
from ._gf import GF, get_gf

INF = math.inf


class FieldError(ValueError):
    """The working field cannot host a requested quantity."""


class PrecisionError(ArithmeticError):
    """An operation needs information lost to truncation."""


class RootFieldError(FieldError):
    """A root does not exist in the current field; reports the needed (e, m)."""

    def __init__(self, msg: str, e: int, m: int):
        super().__init__(f"{msg} (requires e={e}, m={m})")
        self.required_e = e
        self.required_m = m


class FieldDesc:
    """The field F_{q^m}((u)) with u^e = 1/theta, q = p^s.

    ``prec`` is the working relative precision: inverses of exact
    elements and all inexact results are carried to this many u-digits.
    """

    def __init__(self, p: int, s: int = 1, m: int = 1, e: int = 1, prec: int = 120,
                 need_root: bool = False):
        if s < 1 or m < 1 or e < 1:
            raise FieldError("s, m and e must be positive")
        if prec < 4:
            raise FieldError("precision must be at least 4")
        self.p, self.s, self.m, self.e = p, s, m, e
        self.q = p**s
        try:
            self.gf: GF = get_gf(p, s * m)
        except ValueError as exc:
            raise FieldError(str(exc)) from None
        self.prec = int(prec)
        self.exact_limit = max(4096, 8 * self.prec)
        self.fq = self.gf.subfield(s)
        if need_root:
            self.require_root()

    # -- identity -------------------------------------------------------
    @property
    def key(self) -> tuple[int, int, int, int]:
        return (self.p, self.s, self.m, self.e)

    def with_prec(self, prec: int) -> "FieldDesc":
        return FieldDesc(self.p, self.s, self.m, self.e, prec)

    def describe(self) -> dict:
        return {
            "p": self.p, "s": self.s, "q": self.q, "m": self.m, "e": self.e,
            "residue_modulus": self.gf.describe_modulus(), "prec": self.prec,
        }

    def __repr__(self) -> str:
        return f"FieldDesc(q={self.q}, m={self.m}, e={self.e}, prec={self.prec})"

    # -- requirements ---------------------------------------------------
    def supports_root(self) -> bool:
        q = self.q
        if self.e % (q - 1):
            return False
        return bool(self.gf.roots(int(self.gf.neg[1]), q - 1))

    def require_root(self) -> None:
        q = self.q
        if self.e % (q - 1):
            raise FieldError(f"(-theta)^(1/{q - 1}) needs {q - 1} | e, got e={self.e}")
        if not self.gf.roots(int(self.gf.neg[1]), q - 1):
            raise FieldError(f"x^{q - 1} = -1 has no solution in F_{q}^{self.m}; increase m")

    # -- constructors ---------------------------------------------------
    def elem(self, n0: int, coeffs, prec=INF) -> "LFElem":
        return LFElem(self, n0, np.asarray(coeffs, dtype=np.int32), prec)

    def zero(self, prec=INF) -> "LFElem":
        return LFElem(self, 0, np.zeros(0, dtype=np.int32), prec)

    def one(self) -> "LFElem":
        return self.const(1)

    def const(self, code: int) -> "LFElem":
        return LFElem(self, 0, np.array([code], dtype=np.int32))

    def from_int(self, k: int) -> "LFElem":
        return self.const(k % self.p)

    def u_pow(self, n: int, code: int = 1) -> "LFElem":
        return LFElem(self, n, np.array([code], dtype=np.int32))

    def theta(self, exp: Fraction | int = 1) -> "LFElem":
        """theta^exp, exact; exp must lie in (1/e)Z."""
        x = Fraction(exp) * self.e
        if x.denominator != 1:
            raise FieldError(f"theta^{exp} needs e divisible by {Fraction(exp).denominator}")
        return self.u_pow(-int(x))

    def poly_theta(self, coeffs) -> "LFElem":
        """sum coeffs[d] theta^d for residue codes coeffs (exact)."""
        out = self.zero()
        for d, c in enumerate(coeffs):
            if c:
                out = out + self.u_pow(-d * self.e, int(c))
        return out

    def res(self, k: int) -> int:
        """Code of g^k."""
        return int(self.gf.exp[k % (self.gf.Q - 1)])


class LFElem:
    __slots__ = ("F", "n0", "c", "prec")

    def __init__(self, F: FieldDesc, n0: int, c: np.ndarray, prec=INF):
        self.F = F
        if prec != INF:
            prec = int(prec)
            keep = max(0, prec - n0)
            if len(c) > keep:
                c = c[:keep]
        nz = np.flatnonzero(c)
        if len(nz) == 0:
            self.n0 = int(prec) if prec != INF else 0
            self.c = np.zeros(0, dtype=np.int32)
        else:
            a, b = int(nz[0]), int(nz[-1]) + 1
            self.n0 = int(n0) + a
            self.c = np.ascontiguousarray(c[a:b], dtype=np.int32)
        if prec == INF and len(self.c) > F.exact_limit:
            prec = self.n0 + F.prec
            self.c = self.c[: F.prec]
        self.prec = prec

    # -- inspection -----------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return len(self.c) == 0

    @property
    def exact(self) -> bool:
        return self.prec == INF

    @property
    def relprec(self):
        return self.prec - self.n0

    @property
    def valuation(self) -> Fraction:
        if self.is_zero:
            raise PrecisionError("valuation of an element that is zero to its precision")
        return Fraction(self.n0, self.F.e)

    def lf_abs(self) -> Fraction:
        """log_q |a| = -v(a)."""
        return -self.valuation

    def coeff(self, n: int) -> int:
        if n >= self.prec:
            raise PrecisionError(f"coefficient of u^{n} is beyond precision {self.prec}")
        i = n - self.n0
        return int(self.c[i]) if 0 <= i < len(self.c) else 0

    def leading(self) -> int:
        if self.is_zero:
            raise PrecisionError("leading coefficient of zero")
        return int(self.c[0])

    def _check(self, other: "LFElem") -> None:
        if self.F.key != other.F.key:
            raise FieldError("elements live in different fields")

    def _coerce(self, other) -> "LFElem":
        if isinstance(other, LFElem):
            self._check(other)
            return other
        if isinstance(other, (int, np.integer)):
            return self.F.from_int(int(other))
        return NotImplemented

    # -- ring operations ------------------------------------------------
    def __add__(self, other) -> "LFElem":
        b = self._coerce(other)
        if b is NotImplemented:
            return NotImplemented
        a = self
        prec = min(a.prec, b.prec)
        if a.is_zero:
            return LFElem(a.F, b.n0, b.c, prec)
        if b.is_zero:
            return LFElem(a.F, a.n0, a.c, prec)
        lo = min(a.n0, b.n0)
        hi = max(a.n0 + len(a.c), b.n0 + len(b.c))
        if prec == INF:
            if hi - lo > a.F.exact_limit:
                prec = lo + a.F.prec
        else:
            # an exact summand of low valuation must not inflate the length
            prec = min(prec, lo + a.F.prec)
        if prec != INF:
            hi = min(hi, prec)
        if hi <= lo:
            return a.F.zero(prec)
        out = np.zeros(hi - lo, dtype=np.int32)
        for x in (a, b):
            s = x.n0 - lo
            n = min(len(x.c), hi - x.n0)
            if n > 0:
                out[s:s + n] = a.F.gf.add[out[s:s + n], x.c[:n]]
        return LFElem(a.F, lo, out, prec)

    __radd__ = __add__

    def __neg__(self) -> "LFElem":
        return LFElem(self.F, self.n0, self.F.gf.neg[self.c], self.prec)

    def __sub__(self, other) -> "LFElem":
        b = self._coerce(other)
        if b is NotImplemented:
            return NotImplemented
        return self + (-b)

    def __rsub__(self, other) -> "LFElem":
        return (-self) + other

    def __mul__(self, other) -> "LFElem":
        b = self._coerce(other)
        if b is NotImplemented:
            return NotImplemented
        a, F = self, self.F
        if a.is_zero or b.is_zero:
            va = a.prec if a.is_zero else a.n0
            vb = b.prec if b.is_zero else b.n0
            prec = min(a.prec + vb, b.prec + va)
            return F.zero(prec)
        v = a.n0 + b.n0
        rel = min(a.relprec, b.relprec)
        if rel == INF:
            L = len(a.c) + len(b.c) - 1
            prec = INF
        else:
            rel = min(int(rel), F.prec)
            L = min(len(a.c) + len(b.c) - 1, rel)
            prec = v + rel
        if len(a.c) == 1 and len(b.c) == 1:
            c = np.array([F.gf.mul[a.c[0], b.c[0]]], dtype=np.int32)
        else:
            c = kernels.ser_mul(F.gf, a.c, b.c, L)
        return LFElem(F, v, c, prec)

    __rmul__ = __mul__

    def scale(self, code: int) -> "LFElem":
        """Multiply by the residue constant with the given code."""
        if code == 0:
            return self.F.zero(self.prec)
        return LFElem(self.F, self.n0, self.F.gf.mul[code, self.c], self.prec)

    def shift(self, k: int) -> "LFElem":
        """Multiply by u^k."""
        return LFElem(self.F, self.n0 + k, self.c, self.prec + k)

    def inv(self) -> "LFElem":
        if self.is_zero:
            raise ZeroDivisionError("inverting an element that is zero to its precision")
        F = self.F
        if self.exact and len(self.c) == 1:
            return LFElem(F, -self.n0, np.array([F.gf.inv[self.c[0]]], dtype=np.int32))
        rel = F.prec if self.relprec == INF else min(int(self.relprec), F.prec)
        c = kernels.ser_inv(F.gf, self.c, rel)
        return LFElem(F, -self.n0, c, -self.n0 + rel)

    def __truediv__(self, other) -> "LFElem":
        b = self._coerce(other)
        if b is NotImplemented:
            return NotImplemented
        return self * b.inv()

    def __rtruediv__(self, other) -> "LFElem":
        return self.inv() * other

    def frobp(self, k: int) -> "LFElem":
        """a^(p^k)."""
        if k == 0:
            return self
        F = self.F
        pk = F.p**k
        tab = F.gf.frob_table(k)
        n0 = self.n0 * pk
        if self.is_zero:
            return F.zero(self.prec * pk if self.prec != INF else INF)
        if self.exact:
            length = (len(self.c) - 1) * pk + 1
            if length > F.exact_limit:
                rel, prec = F.prec, n0 + F.prec
            else:
                rel, prec = length, INF
        else:
            rel = min(int(self.relprec) * pk, F.prec)
            prec = n0 + rel
        nsrc = min(len(self.c), -(-rel // pk))
        out = np.zeros((nsrc - 1) * pk + 1, dtype=np.int32)
        out[::pk] = tab[self.c[:nsrc]]
        return LFElem(F, n0, out, prec)

    def frob(self, i: int = 1) -> "LFElem":
        """a^(q^i)."""
        return self.frobp(self.F.s * i)

    def __pow__(self, n: int) -> "LFElem":
        n = int(n)
        if n < 0:
            return self.inv() ** (-n)
        if n == 0:
            return self.F.one()
        p, t = self.F.p, 0
        while n % p == 0:
            n //= p
            t += 1
        res, base = None, self
        while n:
            if n & 1:
                res = base if res is None else res * base
            n >>= 1
            if n:
                base = base * base
        return res.frobp(t)

    def truncate(self, prec) -> "LFElem":
        """Forget everything at or beyond u^prec."""
        return LFElem(self.F, self.n0, self.c, min(self.prec, prec))

    def truncate_rel(self, rel: int) -> "LFElem":
        if self.is_zero:
            return self
        return self.truncate(self.n0 + rel)

    def map_field(self, F2: FieldDesc, codemap: np.ndarray) -> "LFElem":
        """Base change into F2 (e2 multiple of e, residue map given)."""
        k = F2.e // self.F.e
        out = np.zeros((len(self.c) - 1) * k + 1 if len(self.c) else 0, dtype=np.int32)
        if len(self.c):
            out[::k] = codemap[self.c]
        prec = self.prec * k if self.prec != INF else INF
        return LFElem(F2, self.n0 * k, out, prec)

    def __repr__(self) -> str:
        return to_str(self)


def agreement(a: LFElem, b: LFElem) -> int | float:
    """Relative u-digit agreement v(a-b) - min(v(a), v(b)) in units of u."""
    d = a - b
    vd = d.prec if d.is_zero else d.n0
    vals = [x.n0 for x in (a, b) if not x.is_zero]
    if not vals:
        return vd
    return vd - min(vals)


# -- roots ---------------------------------------------------------------

def _root_extension_m(F: FieldDesc, c: int, n: int) -> int:
    gf = F.gf
    lc = int(gf.log[c])
    N = gf.n
    for j in range(1, 64):
        Q2 = F.p ** (N * j)
        lift = lc * ((Q2 - 1) // (gf.Q - 1))
        if lift % gcd(n, Q2 - 1) == 0:
            return F.m * j
    raise FieldError("no residue extension found for root")


def lf_root(a: LFElem, n: int) -> LFElem:
    """The n-th root of a chosen by the fixed residue ordering."""
    if n < 1:
        raise ValueError("root index must be >= 1")
    if a.is_zero:
        raise PrecisionError("root of an element that is zero to its precision")
    F = a.F
    p = F.p
    t, nn = 0, n
    while nn % p == 0:
        nn //= p
        t += 1
    x = a
    if t:
        pt = p**t
        idx = np.flatnonzero(x.c) + x.n0
        bad = idx[idx % pt != 0]
        if len(bad):
            raise RootFieldError(f"exponents of a are not divisible by {pt}", F.e * pt, F.m)
        prec = x.prec // pt if x.prec != INF else INF
        tab = F.gf.frob_table((-t) % F.gf.n)
        n0 = x.n0 // pt
        span = (len(x.c) - 1) // pt + 1
        out = np.zeros(span, dtype=np.int32)
        out[:] = tab[x.c[::pt]]
        x = LFElem(F, n0, out, prec)
    if nn == 1:
        return x
    if x.n0 % nn:
        g = gcd(x.n0, nn)
        raise RootFieldError(f"valuation {x.valuation} is not divisible by {nn}", F.e * (nn // g), F.m)
    c0 = x.leading()
    roots = F.gf.roots(c0, nn)
    if not roots:
        raise RootFieldError(f"leading coefficient has no {nn}-th root in the residue field",
                             F.e, _root_extension_m(F, c0, nn))
    r0 = roots[0]
    if x.exact and len(x.c) == 1:
        return F.u_pow(x.n0 // nn, r0)
    w = LFElem(F, 0, F.gf.mul[F.gf.inv[c0], x.c], x.relprec)
    rel = F.prec if w.prec == INF else min(int(w.prec), F.prec)
    w = w.truncate(rel)
    y = F.one()
    ninv = F.from_int(pow(nn, -1, p))
    steps = max(1, math.ceil(math.log2(max(rel, 2)))) + 1
    for _ in range(steps):
        y = y - (y**nn - w) * (y ** (nn - 1)).inv() * ninv
        y = y.truncate(rel)
    return y.scale(r0).shift(x.n0 // nn)


def neg_theta_root(F: FieldDesc, d: int) -> LFElem:
    """(-theta)^(1/d) by the fixed residue ordering."""
    return lf_root(-F.theta(1), d)


@lru_cache(maxsize=32)
def _carlitz_cached(key, prec) -> LFElem:
    F = FieldDesc(*key, prec=prec)
    F.require_root()
    q, e = F.q, F.e
    root = neg_theta_root(F, q - 1)
    prod = F.one()
    i = 1
    while e * (q**i - 1) < prec + e:
        prod = prod * (F.one() - F.theta(1 - q**i))
        i += 1
    return F.theta(1) * root * prod.inv()


def lf_carlitz_period(F: FieldDesc) -> LFElem:
    """theta (-theta)^(1/(q-1)) prod_{i>=1} (1 - theta^(1-q^i))^(-1)."""
    F.require_root()
    val = _carlitz_cached(F.key, F.prec)
    return LFElem(F, val.n0, val.c, val.prec)


# -- literal grammar -----------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+)|(rootT|negTroot|T|g|O)|(.))")


class _Parser:
    def __init__(self, text: str, F: FieldDesc):
        self.toks = []
        for m in _TOKEN.finditer(text):
            num, name, sym = m.groups()
            if num is not None:
                self.toks.append(("num", int(num)))
            elif name is not None:
                self.toks.append(("name", name))
            elif sym is not None and not sym.isspace():
                self.toks.append(("sym", sym))
        self.i = 0
        self.F = F

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, kind=None, val=None):
        tok = self.peek()
        if tok[0] is None or (kind and tok[0] != kind) or (val is not None and tok[1] != val):
            raise SyntaxError(f"unexpected token {tok[1]!r} at position {self.i}")
        self.i += 1
        return tok[1]

    def parse(self) -> LFElem:
        out = self.expr()
        if self.peek()[0] is not None:
            raise SyntaxError(f"trailing input at token {self.peek()[1]!r}")
        return out

    def expr(self) -> LFElem:
        sign = 1
        if self.peek() == ("sym", "-"):
            self.take()
            sign = -1
        acc = self.term()
        acc = -acc if sign < 0 else acc
        while self.peek() in (("sym", "+"), ("sym", "-")):
            op = self.take()
            t = self.term()
            acc = acc + t if op == "+" else acc - t
        return acc

    def term(self) -> LFElem:
        acc = self.power()
        while self.peek() == ("sym", "*"):
            self.take()
            acc = acc * self.power()
        return acc

    def power(self) -> LFElem:
        base = self.atom()
        if self.peek() == ("sym", "^"):
            self.take()
            base = base ** self.integer()
        return base

    def integer(self) -> int:
        sign = 1
        if self.peek() == ("sym", "-"):
            self.take()
            sign = -1
        if self.peek() == ("sym", "("):
            self.take()
            v = self.integer()
            self.take("sym", ")")
            return sign * v
        return sign * self.take("num")

    def exponent(self) -> Fraction:
        if self.peek() == ("sym", "("):
            self.take()
            sign = 1
            if self.peek() == ("sym", "-"):
                self.take()
                sign = -1
            num = self.take("num")
            den = 1
            if self.peek() == ("sym", "/"):
                self.take()
                den = self.take("num")
            self.take("sym", ")")
            return Fraction(sign * num, den)
        sign = 1
        if self.peek() == ("sym", "-"):
            self.take()
            sign = -1
        return Fraction(sign * self.take("num"))

    def atom(self) -> LFElem:
        F = self.F
        kind, val = self.peek()
        if kind == "num":
            self.take()
            return F.from_int(val)
        if kind == "sym" and val == "(":
            self.take()
            x = self.expr()
            self.take("sym", ")")
            return x
        if kind == "name":
            self.take()
            if val == "g":
                k = 1
                if self.peek() == ("sym", "^"):
                    self.take()
                    k = self.integer()
                return F.const(F.res(k))
            if val == "T":
                ex = Fraction(1)
                if self.peek() == ("sym", "^"):
                    self.take()
                    ex = self.exponent()
                return F.theta(ex)
            if val == "rootT":
                self.take("sym", "(")
                a = self.integer()
                self.take("sym", ",")
                b = self.integer()
                self.take("sym", ")")
                return F.theta(Fraction(a, b))
            if val == "negTroot":
                self.take("sym", "(")
                d = self.integer()
                self.take("sym", ")")
                return neg_theta_root(F, d)
            if val == "O":
                self.take("sym", "(")
                self.take("name", "T")
                self.take("sym", "^")
                ex = self.exponent()
                self.take("sym", ")")
                x = -ex * F.e
                if x.denominator != 1:
                    raise SyntaxError("precision exponent not in (1/e)Z")
                return F.zero(int(x))
        raise SyntaxError(f"unexpected token {val!r}")


def lf_parse(text: str, F: FieldDesc) -> LFElem:
    """Parse a literal such as ``g^2*T^(3/2) + T^-1 + O(T^-40)``."""
    try:
        return _Parser(text, F).parse()
    except FieldError as exc:
        raise SyntaxError(str(exc)) from None


def _fmt_exp(ex: Fraction) -> str:
    if ex == 1:
        return "T"
    if ex.denominator == 1:
        return f"T^{ex.numerator}"
    return f"T^({ex.numerator}/{ex.denominator})"


def to_str(a: LFElem) -> str:
    """Printer for the literal grammar, leading (largest) term first."""
    F = a.F
    parts = []
    for i in np.flatnonzero(a.c):
        c = int(a.c[i])
        ex = Fraction(-(a.n0 + int(i)), F.e)
        coef = "1" if c == 1 else f"g^{int(F.gf.log[c])}"
        if ex == 0:
            parts.append(coef)
        elif c == 1:
            parts.append(_fmt_exp(ex))
        else:
            parts.append(f"{coef}*{_fmt_exp(ex)}")
    if a.prec != INF:
        parts.append(f"O({_fmt_exp(Fraction(-int(a.prec), F.e))})")
    return " + ".join(parts) if parts else "0"


def lf_normalize(text: str, F: FieldDesc) -> str:
    return to_str(lf_parse(text, F))
