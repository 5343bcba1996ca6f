"""Tate-algebra elements: truncated t-series and sums of simple poles.

A ``TSeries`` is a polynomial in t with ``LFElem`` coefficients, read
modulo t^(T+1). A ``PoleSum`` is an exact finite object

    poly(t) + sum_j res_j / (theta^(q^j) - t),

which can be twisted, evaluated at t = theta and expanded into a
``TSeries``. ``Omega`` keeps the Anderson-Thakur function in factored
form so that its residue at t = theta is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .localfield import (
    INF,
    FieldDesc,
    FieldError,
    LFElem,
    agreement,
    lf_carlitz_period,
    neg_theta_root,
    to_str,
)


def _theta_qj(F: FieldDesc, j: int) -> LFElem:
    return F.u_pow(-F.e * F.q**j)


class TSeries:
    """sum_{k<=T} c_k t^k with independent coefficient precisions."""

    __slots__ = ("F", "coeffs")

    def __init__(self, F: FieldDesc, coeffs: Iterable[LFElem]):
        self.F = F
        self.coeffs = list(coeffs)
        if not self.coeffs:
            raise ValueError("TSeries needs at least the t^0 coefficient")

    @property
    def T(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def constant(cls, c: LFElem, T: int) -> "TSeries":
        F = c.F
        return cls(F, [c] + [F.zero() for _ in range(T)])

    @classmethod
    def zero(cls, F: FieldDesc, T: int) -> "TSeries":
        return cls(F, [F.zero() for _ in range(T + 1)])

    def __getitem__(self, k: int) -> LFElem:
        return self.coeffs[k]

    def truncate(self, T: int) -> "TSeries":
        return TSeries(self.F, self.coeffs[: T + 1])

    def __add__(self, other: "TSeries") -> "TSeries":
        T = min(self.T, other.T)
        return TSeries(self.F, [self.coeffs[k] + other.coeffs[k] for k in range(T + 1)])

    def __neg__(self) -> "TSeries":
        return TSeries(self.F, [-c for c in self.coeffs])

    def __sub__(self, other: "TSeries") -> "TSeries":
        return self + (-other)

    def __mul__(self, other) -> "TSeries":
        if isinstance(other, TSeries):
            T = min(self.T, other.T)
            out = []
            for k in range(T + 1):
                acc = self.F.zero()
                for i in range(k + 1):
                    a, b = self.coeffs[i], other.coeffs[k - i]
                    if not (a.is_zero and a.exact) and not (b.is_zero and b.exact):
                        acc = acc + a * b
                out.append(acc)
            return TSeries(self.F, out)
        return TSeries(self.F, [c * other for c in self.coeffs])

    __rmul__ = __mul__

    def twist(self, i: int) -> "TSeries":
        """Coefficient-wise q^i power."""
        if i < 0:
            raise ValueError("twist index must be >= 0")
        return TSeries(self.F, [c.frob(i) for c in self.coeffs])

    def gauss_norm(self) -> Fraction | None:
        """log_q of the Gauss norm; None for a series that is zero to precision."""
        vals = [c.lf_abs() for c in self.coeffs if not c.is_zero]
        return max(vals) if vals else None

    def __repr__(self) -> str:
        parts = []
        for k, c in enumerate(self.coeffs):
            mono = "" if k == 0 else ("*t" if k == 1 else f"*t^{k}")
            parts.append(f"({to_str(c)}){mono}")
        return " + ".join(parts) + f" + O(t^{self.T + 1})"


def ts_agreement(a: TSeries, b: TSeries) -> int | float:
    """Smallest coefficient-wise relative agreement up to the common order."""
    T = min(a.T, b.T)
    return min(agreement(a.coeffs[k], b.coeffs[k]) for k in range(T + 1))


@dataclass
class PoleSum:
    """poly(t) + sum_j poles[j] / (theta^(q^j) - t)."""

    F: FieldDesc
    poly: list[LFElem] = field(default_factory=list)
    poles: dict[int, LFElem] = field(default_factory=dict)

    @classmethod
    def pole(cls, F: FieldDesc, j: int, res: LFElem) -> "PoleSum":
        return cls(F, [], {j: res})

    def copy(self) -> "PoleSum":
        return PoleSum(self.F, list(self.poly), dict(self.poles))

    def __add__(self, other: "PoleSum") -> "PoleSum":
        n = max(len(self.poly), len(other.poly))
        z = self.F.zero()
        poly = [(self.poly[i] if i < len(self.poly) else z) + (other.poly[i] if i < len(other.poly) else z)
                for i in range(n)]
        poles = dict(self.poles)
        for j, r in other.poles.items():
            poles[j] = poles[j] + r if j in poles else r
        return PoleSum(self.F, poly, poles)

    def __neg__(self) -> "PoleSum":
        return PoleSum(self.F, [-c for c in self.poly], {j: -r for j, r in self.poles.items()})

    def __sub__(self, other: "PoleSum") -> "PoleSum":
        return self + (-other)

    def scale(self, c: LFElem) -> "PoleSum":
        return PoleSum(self.F, [x * c for x in self.poly], {j: r * c for j, r in self.poles.items()})

    def mul_poly(self, P: list[LFElem]) -> "PoleSum":
        """Multiply by the polynomial sum P[k] t^k, keeping simple poles."""
        F = self.F
        poly = _poly_mul(F, self.poly, P)
        poles: dict[int, LFElem] = {}
        for j, r in self.poles.items():
            c = _theta_qj(F, j)
            # P(t) = P(c) + (t - c) Q(t), so P/(c - t) = P(c)/(c - t) - Q(t)
            Q, Pc = _synthetic_div(F, P, c)
            poles[j] = r * Pc
            poly = _poly_add(F, poly, [-(r * x) for x in Q])
        return PoleSum(F, poly, poles)

    def __mul__(self, other: "PoleSum") -> "PoleSum":
        """Product when the two pole sets are disjoint."""
        if set(self.poles) & set(other.poles):
            raise ValueError("PoleSum product with a shared pole would not stay simple")
        F = self.F
        out = PoleSum(F, _poly_mul(F, self.poly, other.poly), {})
        out = out + PoleSum(F, [], dict(self.poles)).mul_poly(other.poly)
        out = out + PoleSum(F, [], dict(other.poles)).mul_poly(self.poly)
        for i, ra in self.poles.items():
            ci = _theta_qj(F, i)
            for j, rb in other.poles.items():
                cj = _theta_qj(F, j)
                k = ra * rb / (cj - ci)
                out = out + PoleSum(F, [], {i: k, j: -k})
        return out

    def twist(self, k: int) -> "PoleSum":
        if k < 0:
            raise ValueError("twist index must be >= 0")
        return PoleSum(self.F, [c.frob(k) for c in self.poly],
                       {j + k: r.frob(k) for j, r in self.poles.items()})

    def eval_theta(self) -> LFElem:
        if 0 in self.poles:
            raise ValueError("t = theta is a pole")
        F = self.F
        th = F.theta(1)
        acc = F.zero()
        for c in reversed(self.poly):
            acc = acc * th + c
        for j, r in sorted(self.poles.items()):
            acc = acc + r / (_theta_qj(F, j) - th)
        return acc

    def residue_theta(self) -> LFElem:
        """Res_{t=theta}; 1/(theta - t) has residue -1."""
        r = self.poles.get(0)
        return -r if r is not None else self.F.zero()

    def expand(self, T: int) -> TSeries:
        F = self.F
        coeffs = [self.poly[k] if k < len(self.poly) else F.zero() for k in range(T + 1)]
        for j, r in self.poles.items():
            step = F.e * F.q**j
            for k in range(T + 1):
                coeffs[k] = coeffs[k] + r.shift(step * (k + 1))
        return TSeries(F, coeffs)

    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.poly) and all(r.is_zero for r in self.poles.values())

    def min_prec(self):
        """Smallest absolute precision among all stored coefficients."""
        ps = [c.prec for c in self.poly] + [r.prec for r in self.poles.values()]
        return min(ps) if ps else INF

    def __repr__(self) -> str:
        poly = " + ".join(f"({to_str(c)})*t^{k}" for k, c in enumerate(self.poly)) or "0"
        poles = ", ".join(f"{j}:{to_str(r)}" for j, r in sorted(self.poles.items()))
        return f"{poly} | {poles}"


def _poly_add(F, a: list[LFElem], b: list[LFElem]) -> list[LFElem]:
    n = max(len(a), len(b))
    z = F.zero()
    return [(a[i] if i < len(a) else z) + (b[i] if i < len(b) else z) for i in range(n)]


def _poly_mul(F, a: list[LFElem], b: list[LFElem]) -> list[LFElem]:
    if not a or not b:
        return []
    out = [F.zero() for _ in range(len(a) + len(b) - 1)]
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def _synthetic_div(F, P: list[LFElem], c: LFElem) -> tuple[list[LFElem], LFElem]:
    """Return (Q, P(c)) with P(t) = P(c) + (t - c) Q(t)."""
    if not P:
        return [], F.zero()
    n = len(P) - 1
    Q = [F.zero() for _ in range(max(n, 0))]
    acc = P[n]
    for k in range(n - 1, -1, -1):
        Q[k] = acc
        acc = acc * c + P[k]
    return Q, acc


class Omega:
    """(-theta)^(1/(q-1)) prod_{i>=0} (1 - t/theta^(q^i))^(-1), kept factored."""

    def __init__(self, F: FieldDesc):
        F.require_root()
        self.F = F
        self.prefactor = neg_theta_root(F, F.q - 1)

    def _factors(self, bound: int) -> list[int]:
        """Factor indices i whose t-coefficient theta^(-q^i) lies above ``bound``."""
        F = self.F
        out, i = [], 0
        while F.e * F.q**i < bound:
            out.append(i)
            i += 1
        return out

    def expand(self, T: int) -> TSeries:
        F = self.F
        bound = F.prec + F.e * (T + 2)
        out = TSeries.constant(self.prefactor, T)
        for i in self._factors(bound):
            step = F.e * F.q**i
            geo = TSeries(F, [F.u_pow(step * k) for k in range(T + 1)])
            out = out * geo
        return out

    def inv_expand(self, T: int) -> TSeries:
        """1/omega, a product of linear factors."""
        F = self.F
        bound = F.prec + F.e * (T + 2)
        out = TSeries.constant(self.prefactor.inv(), T)
        for i in self._factors(bound):
            lin = TSeries(F, [F.one(), -F.u_pow(F.e * F.q**i)] + [F.zero()] * max(0, T - 1))
            out = out * lin.truncate(T)
        return out

    def residue_theta(self) -> LFElem:
        """Res_{t=theta} omega: pull out the i = 0 factor theta/(theta - t)."""
        F = self.F
        th = F.theta(1)
        rest = F.one()
        for i in self._factors(F.prec + 2 * F.e)[1:]:
            rest = rest * (F.one() - th * F.u_pow(F.e * F.q**i))
        return -(self.prefactor * th * rest.inv())

    def check_period(self) -> int | float:
        """Digits of agreement between -Res omega and the Carlitz period."""
        return agreement(-self.residue_theta(), lf_carlitz_period(self.F))


def omega(F: FieldDesc, T: int) -> TSeries:
    return Omega(F).expand(T)


__all__ = ["TSeries", "PoleSum", "Omega", "omega", "ts_agreement", "FieldError"]
