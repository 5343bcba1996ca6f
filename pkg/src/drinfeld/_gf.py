"""Finite fields F_{p^n} as lookup tables over integer codes.

An element sum c_i x^i (0 <= c_i < p) is stored as the code sum c_i p^i.
The modulus is a fixed primitive polynomial, so x generates the
multiplicative group and log/exp tables are available.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np

# Conway polynomials, low coefficient first (monic term implied).
_CONWAY = {
    (2, 1): (1,), (2, 2): (1, 1), (2, 3): (1, 1, 0), (2, 4): (1, 1, 0, 0),
    (2, 5): (1, 0, 1, 0, 0), (2, 6): (1, 1, 0, 1, 1, 0),
    (3, 1): (1,), (3, 2): (2, 2), (3, 3): (1, 2, 0), (3, 4): (2, 0, 0, 2),
    (3, 5): (1, 2, 0, 0, 0), (3, 6): (2, 2, 1, 0, 2, 0),
    (5, 1): (3,), (5, 2): (2, 4), (5, 3): (3, 3, 0), (5, 4): (2, 4, 4, 0),
    (7, 1): (4,), (7, 2): (3, 6), (7, 3): (4, 0, 6),
}

MAX_ORDER = 2187


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % d for d in range(2, int(p**0.5) + 1))


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _power_table(p: int, low: tuple[int, ...]) -> list[tuple[int, ...]] | None:
    """Successive powers x^0, x^1, ... modulo x^n + low(x); None if x is not primitive."""
    n = len(low)
    order = p**n - 1
    vec = [1] + [0] * (n - 1)
    seen = []
    for k in range(order):
        seen.append(tuple(vec))
        top = vec[-1]
        vec = [0] + vec[:-1]
        if top:
            vec = [(vec[i] - top * low[i]) % p for i in range(n)]
        if vec == [1] + [0] * (n - 1) and k + 1 < order:
            return None
    if vec != [1] + [0] * (n - 1):
        return None
    return seen


def _primitive_poly(p: int, n: int) -> tuple[tuple[int, ...], list[tuple[int, ...]]]:
    cand = _CONWAY.get((p, n))
    if cand is not None:
        pw = _power_table(p, cand)
        if pw is not None:
            return cand, pw
    for rev in product(range(p), repeat=n):
        low = tuple(reversed(rev))
        if low[0] == 0:
            continue
        pw = _power_table(p, low)
        if pw is not None:
            return low, pw
    raise ValueError(f"no primitive polynomial found for p={p}, n={n}")


class GF:
    """Table-driven F_{p^n}. Codes are ints in [0, Q)."""

    def __init__(self, p: int, n: int):
        if not _is_prime(p):
            raise ValueError(f"p={p} is not prime")
        if n < 1:
            raise ValueError("extension degree must be >= 1")
        Q = p**n
        if Q > MAX_ORDER:
            raise ValueError(f"residue field of order {Q} exceeds table limit {MAX_ORDER}")
        self.p, self.n, self.Q = p, n, Q
        low, powers = _primitive_poly(p, n)
        self.modulus = low
        weights = np.array([p**i for i in range(n)], dtype=np.int64)
        self.digits = np.array(
            [[(c // p**i) % p for i in range(n)] for c in range(Q)], dtype=np.int32
        )
        exp = np.array([int(np.dot(v, weights)) for v in powers], dtype=np.int32)
        log = np.full(Q, -1, dtype=np.int64)
        log[exp] = np.arange(Q - 1)
        self.exp, self.log = exp, log

        d = self.digits.astype(np.int64)
        self.add = ((d[:, None, :] + d[None, :, :]) % p @ weights).astype(np.int32)
        self.neg = ((-d) % p @ weights).astype(np.int32)
        la = log[:, None] + log[None, :]
        mul = exp[la % (Q - 1)]
        mul[0, :] = 0
        mul[:, 0] = 0
        self.mul = mul.astype(np.int32)
        inv = np.zeros(Q, dtype=np.int32)
        inv[1:] = exp[(-log[1:]) % (Q - 1)]
        self.inv = inv
        frob = np.zeros(Q, dtype=np.int32)
        frob[1:] = exp[(log[1:] * p) % (Q - 1)]
        self.frob = frob
        # x^d mod modulus for d < 2n-1, used for packed convolution
        red = np.zeros((2 * n - 1, n), dtype=np.int64)
        for k in range(2 * n - 1):
            red[k] = self.digits[exp[k % (Q - 1)]]
        self.reduce_rows = red
        self.weights = weights
        # enumeration order used by the root rule: g^0, g^1, ..., then 0
        self.order_key = np.where(log >= 0, log, Q - 1)
        self._frob_pow: dict[int, np.ndarray] = {0: np.arange(Q, dtype=np.int32)}

    @property
    def gen(self) -> int:
        return int(self.exp[1 % (self.Q - 1)])

    def frob_table(self, k: int) -> np.ndarray:
        """Table for c -> c^(p^k)."""
        k %= self.n
        tab = self._frob_pow.get(k)
        if tab is None:
            tab = np.zeros(self.Q, dtype=np.int32)
            tab[1:] = self.exp[(self.log[1:] * pow(self.p, k, self.Q - 1)) % (self.Q - 1)]
            self._frob_pow[k] = tab
        return tab

    def power(self, c: int, k: int) -> int:
        if c == 0:
            if k <= 0:
                raise ZeroDivisionError("0 to a non-positive power")
            return 0
        return int(self.exp[(int(self.log[c]) * k) % (self.Q - 1)])

    def roots(self, c: int, k: int) -> list[int]:
        """All k-th roots of c, sorted by the fixed enumeration order."""
        if c == 0:
            return [0]
        Q1 = self.Q - 1
        lc = int(self.log[c])
        out = [int(self.exp[t]) for t in range(Q1) if (t * k - lc) % Q1 == 0]
        return sorted(out, key=lambda x: int(self.order_key[x]))

    def subfield(self, s: int) -> list[int]:
        """Codes of F_{p^s}, listed as 0, 1, then the rest by discrete log."""
        if self.n % s:
            raise ValueError("not a subfield")
        ps = self.p**s
        els = [c for c in range(self.Q) if self.power(c, ps) == c]
        rest = sorted((c for c in els if c not in (0, 1)), key=lambda x: int(self.log[x]))
        return [0, 1] + rest if ps > 2 else [0, 1]

    def embed_into(self, other: "GF") -> np.ndarray:
        """Code map self -> other sending x to the least root of the modulus."""
        if other.p != self.p or other.n % self.n:
            raise ValueError("no embedding between these residue fields")
        coeffs = list(self.modulus) + [1]

        def ev(c: int) -> int:
            acc = 0
            for a in reversed(coeffs):
                acc = int(other.add[other.mul[acc, c], a])
            return acc

        cands = [c for c in range(1, other.Q) if ev(c) == 0]
        root = min(cands, key=lambda x: int(other.order_key[x]))
        out = np.zeros(self.Q, dtype=np.int32)
        for c in range(self.Q):
            acc = 0
            for dgt in reversed(self.digits[c].tolist()):
                acc = int(other.add[other.mul[acc, root], dgt])
            out[c] = acc
        return out

    def describe_modulus(self) -> str:
        terms = [f"x^{self.n}"]
        for i in range(self.n - 1, -1, -1):
            c = self.modulus[i]
            if c:
                terms.append(("" if c == 1 and i else str(c)) + ("" if i == 0 else ("x" if i == 1 else f"x^{i}")))
        return " + ".join(terms)


@lru_cache(maxsize=None)
def get_gf(p: int, n: int) -> GF:
    return GF(p, n)
