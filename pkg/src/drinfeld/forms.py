"""Drinfeld modular forms at a point: h_r, E^{[j]}, normalized generators,
the GL_r(A)-action, the operators D_{j,k} and the Serre derivation.

Base-case derivatives come from the lattice engine (term-wise derivatives
of Eisenstein and congruence sums), never from the closed forms they are
compared against.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from functools import cached_property
from math import gcd
from typing import Sequence

from .drinfeld import DrinfeldData, cofactor, det
from .lattice import Jet, OmegaPoint, SumParams
from .localfield import FieldDesc, FieldError, LFElem, PrecisionError, lf_carlitz_period, neg_theta_root, to_str


def _qsum(q: int, r: int) -> int:
    """q + q^2 + ... + q^(r-1)."""
    return sum(q**i for i in range(1, r))


def _pow(x: LFElem, n: int) -> LFElem:
    return x**n if n >= 0 else x.inv() ** (-n)


class Forms:
    """Modular-form values at the point of a ``DrinfeldData``."""

    def __init__(self, d: DrinfeldData):
        d.F.require_root()
        self.d = d
        self.F = d.F
        self.r = d.r
        self.q = d.F.q

    @cached_property
    def pi(self) -> LFElem:
        return lf_carlitz_period(self.F)

    def pi_pow(self, n: int) -> LFElem:
        return _pow(self.pi, n)

    # -- h_r ---------------------------------------------------------------
    @cached_property
    def _mu_values(self) -> list[tuple[tuple[int, ...], LFElem]]:
        s = self.d.sums
        out = []
        for mu in s.mus:
            v = s.eisenstein_mu(mu)
            if v.is_zero:
                raise PrecisionError(f"E_mu vanishes to precision for mu={mu}")
            out.append((mu, v))
        return out

    @cached_property
    def h(self) -> LFElem:
        """pi^((1-q^r)/(q-1)) (-theta)^(1/(q-1)) prod over monic mu of E_mu."""
        q, r = self.q, self.r
        acc = neg_theta_root(self.F, q - 1) * self.pi_pow(-((q**r - 1) // (q - 1)))
        for _, v in self._mu_values:
            acc = acc * v
        return acc

    def h_partial(self, j: int) -> LFElem:
        """d h_r / d z_j = h_r sum_mu dE_mu/E_mu."""
        s = self.d.sums
        acc = self.F.zero()
        for mu, v in self._mu_values:
            acc = acc + s.eisenstein_mu_partial(mu, j) / v
        return self.h * acc

    # -- E^{[j]} ------------------------------------------------------------
    def e_bracket(self, j: int) -> LFElem:
        """pi^(q+...+q^(r-1)) h_r L_{j1}, the residue at t = theta of the
        Tate-algebra formula (one more power of pi than sometimes quoted)."""
        self._check_j(j)
        return self.pi_pow(_qsum(self.q, self.r)) * self.h * self.d.L(j, 1)

    def e_bracket_def(self, j: int) -> LFElem:
        """d g_r / d z_j divided by g_r."""
        self._check_j(j)
        return self.d.g_partial(self.r, j) / self.d.g_i(self.r)

    def _check_j(self, j: int) -> None:
        if not 1 <= j <= self.r - 1:
            raise ValueError(f"derivative index must lie in 1..{self.r - 1}")

    # -- generators ----------------------------------------------------------
    def g_new(self, i: int) -> LFElem:
        return self.pi_pow(1 - self.q**i) * self.d.g_i(i)

    def hL(self, i: int, j: int) -> LFElem:
        """h_r L_ij."""
        return self.h * self.d.L(i, j)

    def hL_partial(self, i: int, j: int, l: int) -> LFElem:
        """d(h_r L_ij)/dz_l from the lattice derivative of h_r and the exact
        derivative of the period matrix."""
        return self.h_partial(l) * self.d.L(i, j) + self.h * self.d.L_partial(i, j, l)

    def bold_E(self, i: int, j: int) -> LFElem:
        """pi^(q+...+q^(r-1)-q^(j-1)) h_r L_ij."""
        return self.pi_pow(_qsum(self.q, self.r) - self.q ** (j - 1)) * self.hL(i, j)

    def j_invariant(self, i: int) -> LFElem:
        q, r = self.q, self.r
        if not 1 <= i <= r - 1:
            raise ValueError(f"index must lie in 1..{r - 1}")
        gg = q ** gcd(i, r) - 1
        num = self.d.g_i(i) ** ((q**r - 1) // gg)
        return num / self.d.g_i(r) ** ((q**i - 1) // gg)

    # -- closed forms of the theorems -----------------------------------------
    def gm2_h_rhs(self, j: int) -> LFElem:
        return -(self.h * self.e_bracket(j))

    def gm2_g_rhs(self, i: int, j: int) -> LFElem:
        return self.e_bracket(j) * self.d.g_i(i) + self.pi_pow(_qsum(self.q, self.r)) * self.hL(j, i + 1)

    def hfunc_rhs(self) -> LFElem:
        q, r = self.q, self.r
        v = self.pi_pow(q**r - 1) * self.h ** (q - 1)
        return v if (r - 1) % 2 == 0 else -v

    def det_relation(self) -> LFElem:
        """det(P_z) pi^(q+...+q^(r-1)) h_r, expected to be -1."""
        return self.d.period_det * self.pi_pow(_qsum(self.q, self.r)) * self.h

    def det_hR(self) -> LFElem:
        r = self.r
        M = [[self.hL(i, j + 1) for j in range(1, r)] for i in range(1, r)]
        return det(M, self.F.zero())

    def det_hR_rhs(self) -> LFElem:
        return self.pi_pow(-_qsum(self.q, self.r) * (self.r - 2)) * self.h

    # -- jets of atoms ------------------------------------------------------------
    def atom_jet(self, kind: str, arg: int = 0) -> Jet:
        d, nd = self.d, self.r - 1
        if kind == "Eis":
            return Jet(d.eis(arg), [d.eis_partial(j, arg) for j in range(1, nd + 1)])
        if kind == "g":
            return Jet(d.g_i(arg), [d.g_partial(arg, j) for j in range(1, nd + 1)])
        if kind == "h":
            return Jet(self.h, [self.h_partial(j) for j in range(1, nd + 1)])
        raise ValueError(f"unknown atom {kind!r}")


def forms_of(d: DrinfeldData) -> Forms:
    f = getattr(d, "_forms", None)
    if f is None:
        f = Forms(d)
        d._forms = f
    return f


# -- module-level operations ---------------------------------------------------

def h_function(d: DrinfeldData) -> LFElem:
    return forms_of(d).h


def e_bracket(d: DrinfeldData, j: int) -> LFElem:
    return forms_of(d).e_bracket(j)


def partials_g(d: DrinfeldData, i: int, j: int) -> LFElem:
    return d.g_partial(i, j)


def partials_h(d: DrinfeldData, j: int) -> LFElem:
    return forms_of(d).h_partial(j)


def new_generators(d: DrinfeldData) -> tuple[dict[int, LFElem], dict[tuple[int, int], LFElem]]:
    f = forms_of(d)
    r = d.r
    gn = {i: f.g_new(i) for i in range(1, r)}
    bE = {(i, j): f.bold_E(i, j) for i in range(1, r) for j in range(1, r + 1)}
    return gn, bE


def j_invariants(d: DrinfeldData, i: int) -> LFElem:
    return forms_of(d).j_invariant(i)


# -- GL_r(A) ---------------------------------------------------------------------

class GammaMatrix:
    """An element of GL_r(F_q[theta]) with exact ``LFElem`` entries."""

    def __init__(self, F: FieldDesc, entries: Sequence[Sequence[LFElem]], label: str = "gamma"):
        self.F = F
        self.a = [list(row) for row in entries]
        self.r = len(self.a)
        self.label = label
        if any(len(row) != self.r for row in self.a):
            raise ValueError("gamma must be square")
        for row in self.a:
            for x in row:
                if not x.exact or (not x.is_zero and x.n0 % F.e) or x.n0 > 0:
                    raise ValueError("gamma entries must be polynomials in theta")
        dt = self.det
        if dt.is_zero or dt.n0 != 0 or len(dt.c) != 1 or int(dt.c[0]) not in F.fq:
            raise ValueError("det(gamma) must lie in F_q^x")

    @classmethod
    def from_polys(cls, F: FieldDesc, polys: Sequence[Sequence[Sequence[int]]], label: str = "gamma"):
        """Entries given as coefficient lists (residue codes, constant term first)."""
        return cls(F, [[F.poly_theta(c) for c in row] for row in polys], label)

    @classmethod
    def identity(cls, F: FieldDesc, r: int) -> "GammaMatrix":
        return cls(F, [[F.one() if i == j else F.zero() for j in range(r)] for i in range(r)], "identity")

    @cached_property
    def det(self) -> LFElem:
        return det(self.a, self.F.zero())

    def cof(self, i: int, j: int) -> LFElem:
        """(i, j) cofactor c^gamma_ij, 1-based."""
        if self.r == 1:
            return self.F.one()
        return cofactor(self.a, i - 1, j - 1, self.F.zero())

    def __matmul__(self, other: "GammaMatrix") -> "GammaMatrix":
        r, F = self.r, self.F
        out = []
        for i in range(r):
            row = []
            for j in range(r):
                acc = F.zero()
                for k in range(r):
                    acc = acc + self.a[i][k] * other.a[k][j]
                row.append(acc)
            out.append(row)
        return GammaMatrix(F, out, f"{self.label}*{other.label}")

    def inverse(self) -> "GammaMatrix":
        dinv = self.det.inv()
        r = self.r
        return GammaMatrix(self.F, [[self.cof(j, i) * dinv for j in range(1, r + 1)]
                                    for i in range(1, r + 1)], f"{self.label}^-1")

    def max_degree(self) -> int:
        return max((-x.n0 // self.F.e if not x.is_zero else 0) for row in self.a for x in row)

    def describe(self) -> dict:
        return {"label": self.label, "entries": [[to_str(x) for x in row] for row in self.a]}


def _elementary(F: FieldDesc, r: int, a: int, b: int, c: LFElem, label: str) -> GammaMatrix:
    rows = [[F.one() if i == j else F.zero() for j in range(r)] for i in range(r)]
    rows[a][b] = c
    return GammaMatrix(F, rows, label)


def gamma_sample(F: FieldDesc, r: int, seed: int = 0) -> list[GammaMatrix]:
    """Identity, theta-transvections, a diagonal and a permutation matrix,
    and one pseudo-random product with entries of degree <= 2."""
    out = [GammaMatrix.identity(F, r)]
    th = F.theta(1)
    for a in range(r):
        for b in range(r):
            if a != b:
                out.append(_elementary(F, r, a, b, th, f"I+T*E{a + 1}{b + 1}"))
    gen = int(F.gf.exp[(F.gf.Q - 1) // (F.q - 1)]) if F.q > 2 else 1
    if F.q > 2:
        diag = GammaMatrix.identity(F, r).a
        diag[0][0] = F.const(gen)
        out.append(GammaMatrix(F, diag, "diag"))
    perm = [[F.zero()] * r for _ in range(r)]
    for i in range(r):
        perm[i][(1 - i) if i < 2 else i] = F.one()
    out.append(GammaMatrix(F, perm, "swap12"))
    rng = random.Random(seed)
    fq_nz = [c for c in F.fq if c]
    while True:
        g = GammaMatrix.identity(F, r)
        for _ in range(3):
            a, b = rng.sample(range(r), 2)
            c = F.const(rng.choice(fq_nz)) * F.theta(rng.randint(0, 1))
            g = g @ _elementary(F, r, a, b, c, "t")
        if g.max_degree() <= 2 and g.max_degree() >= 1:
            g.label = f"random(seed={seed})"
            return out + [g]


def jfactor(g: GammaMatrix, z: OmegaPoint) -> LFElem:
    r = g.r
    acc = g.F.zero()
    for k in range(r):
        if not g.a[r - 1][k].is_zero:
            acc = acc + g.a[r - 1][k] * z.z[k]
    if acc.is_zero:
        raise PrecisionError("j(gamma, z) vanishes to precision")
    return acc


def group_act(g: GammaMatrix, z: OmegaPoint) -> OmegaPoint:
    F, r = g.F, g.r
    jinv = jfactor(g, z).inv()
    w = []
    for i in range(r - 1):
        acc = F.zero()
        for k in range(r):
            if not g.a[i][k].is_zero:
                acc = acc + g.a[i][k] * z.z[k]
        w.append(acc * jinv)
    return OmegaPoint(w + [F.one()], label=f"{g.label}.{z.label}")


def frak_c(g: GammaMatrix, z: OmegaPoint) -> list[list[LFElem]]:
    """The (r-1)x(r-1) matrix c^gamma_jl - c^gamma_jr z_l."""
    r = g.r
    return [[g.cof(j, l) - g.cof(j, r) * z.z[l - 1] for l in range(1, r)] for j in range(1, r)]


def mat_inverse(M: list[list[LFElem]], zero: LFElem) -> list[list[LFElem]]:
    n = len(M)
    D = det(M, zero)
    Dinv = D.inv()
    if n == 1:
        return [[Dinv]]
    return [[cofactor(M, j, i, zero) * Dinv for j in range(n)] for i in range(n)]


# -- FormExpr ------------------------------------------------------------------

@dataclass(frozen=True)
class FormExpr:
    """Expression over Eis_k, g_i, h_r and integer constants."""

    op: str
    args: tuple = ()
    value: int = 0

    def weight(self, q: int, r: int) -> int:
        if self.op == "Eis":
            return self.value
        if self.op == "g":
            return q**self.value - 1
        if self.op == "h":
            return (q**r - 1) // (q - 1)
        if self.op == "const":
            return 0
        if self.op == "mul":
            return sum(a.weight(q, r) for a in self.args)
        if self.op == "pow":
            return self.args[0].weight(q, r) * self.value
        if self.op == "add":
            return self.args[0].weight(q, r)
        raise ValueError(self.op)

    def type(self, q: int, r: int) -> int:
        if self.op == "h":
            return 1 % (q - 1)
        if self.op in ("Eis", "g", "const"):
            return 0
        if self.op == "mul":
            return sum(a.type(q, r) for a in self.args) % (q - 1)
        if self.op == "pow":
            return self.args[0].type(q, r) * self.value % (q - 1)
        if self.op == "add":
            return self.args[0].type(q, r)
        raise ValueError(self.op)

    def check_grading(self, q: int, r: int) -> None:
        if self.op == "add":
            w = {(a.weight(q, r), a.type(q, r)) for a in self.args if not a._is_zero_const()}
            if len(w) > 1:
                raise ValueError("sum of forms with different weight or type")
        for a in self.args:
            a.check_grading(q, r)

    def _is_zero_const(self) -> bool:
        return self.op == "const" and self.value == 0

    def __str__(self) -> str:
        if self.op == "Eis":
            return f"Eis({self.value})"
        if self.op == "g":
            return f"g({self.value})"
        if self.op == "h":
            return "h"
        if self.op == "const":
            return str(self.value)
        if self.op == "mul":
            return "*".join(_paren(a) for a in self.args)
        if self.op == "pow":
            return f"{_paren(self.args[0])}^{self.value}"
        return " + ".join(str(a) for a in self.args)

    def __mul__(self, o: "FormExpr") -> "FormExpr":
        return FormExpr("mul", (self, o))

    def __add__(self, o: "FormExpr") -> "FormExpr":
        return FormExpr("add", (self, o))

    def __pow__(self, n: int) -> "FormExpr":
        return FormExpr("pow", (self,), n)


def _paren(a: FormExpr) -> str:
    return f"({a})" if a.op in ("add", "mul") else str(a)


def Eis(k: int) -> FormExpr:
    return FormExpr("Eis", (), k)


def G(i: int) -> FormExpr:
    return FormExpr("g", (), i)


H = FormExpr("h")


def Const(c: int) -> FormExpr:
    return FormExpr("const", (), c)


_FTOK = re.compile(r"\s*(?:(\d+)|(Eis|g|h)|(.))")


def parse_form(text: str) -> FormExpr:
    """Grammar: Eis(k), g(i), h, integers, '*', '^n', '+', parentheses."""
    toks = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _FTOK.match(text, pos)
        if not m or m.end() == pos:
            break
        pos = m.end()
        if m.group(1):
            toks.append(("int", int(m.group(1))))
        elif m.group(2):
            toks.append(("name", m.group(2)))
        elif m.group(3).strip():
            toks.append(("sym", m.group(3)))
    toks.append(("end", None))
    i = 0

    def take(kind, val=None):
        nonlocal i
        k, v = toks[i]
        if k != kind or (val is not None and v != val):
            raise SyntaxError(f"unexpected token {v!r} in form expression {text!r}")
        i += 1
        return v

    def expr():
        terms = [term()]
        while toks[i] == ("sym", "+"):
            take("sym", "+")
            terms.append(term())
        return terms[0] if len(terms) == 1 else FormExpr("add", tuple(terms))

    def term():
        fs = [factor()]
        while toks[i] == ("sym", "*"):
            take("sym", "*")
            fs.append(factor())
        return fs[0] if len(fs) == 1 else FormExpr("mul", tuple(fs))

    def factor():
        a = atom()
        if toks[i] == ("sym", "^"):
            take("sym", "^")
            a = FormExpr("pow", (a,), take("int"))
        return a

    def atom():
        k, v = toks[i]
        if k == "int":
            take("int")
            return Const(v)
        if k == "name":
            take("name")
            if v == "h":
                return H
            take("sym", "(")
            n = take("int")
            take("sym", ")")
            return Eis(n) if v == "Eis" else G(n)
        if (k, v) == ("sym", "("):
            take("sym", "(")
            e = expr()
            take("sym", ")")
            return e
        raise SyntaxError(f"unexpected token {v!r} in form expression {text!r}")

    out = expr()
    if toks[i][0] != "end":
        raise SyntaxError(f"trailing input in form expression {text!r}")
    return out


@dataclass
class FormValue:
    value: LFElem
    weight: int
    type: int
    note: str = ""


def form_jet(fm: Forms, f: FormExpr) -> Jet:
    """Value and z_1..z_{r-1} derivatives of a form expression."""
    F, nd = fm.F, fm.r - 1
    if f.op in ("Eis", "g"):
        return fm.atom_jet(f.op, f.value)
    if f.op == "h":
        return fm.atom_jet("h")
    if f.op == "const":
        return Jet.const(F.from_int(f.value), nd)
    if f.op == "mul":
        out = form_jet(fm, f.args[0])
        for a in f.args[1:]:
            out = out * form_jet(fm, a)
        return out
    if f.op == "pow":
        if f.value < 0:
            raise ValueError("negative powers are not modular forms")
        return form_jet(fm, f.args[0]) ** f.value
    if f.op == "add":
        out = form_jet(fm, f.args[0])
        for a in f.args[1:]:
            out = out + form_jet(fm, a)
        return out
    raise ValueError(f.op)


def evaluate_form(d: DrinfeldData, f: FormExpr) -> FormValue:
    fm = forms_of(d)
    f.check_grading(fm.q, fm.r)
    return FormValue(form_jet(fm, f).a, f.weight(fm.q, fm.r), f.type(fm.q, fm.r), str(f))


def op_D(d: DrinfeldData, j: int, f: FormExpr, k: int | None = None) -> FormValue:
    """D_{j,k} f = d_j f + k E^{[j]} f, with k the weight of f by default."""
    fm = forms_of(d)
    fm._check_j(j)
    f.check_grading(fm.q, fm.r)
    w, m = f.weight(fm.q, fm.r), f.type(fm.q, fm.r)
    k = w if k is None else k
    jet = form_jet(fm, f)
    val = jet.d[j - 1] + fm.e_bracket(j) * jet.a * fm.F.from_int(k)
    return FormValue(val, w + 1, (m + 1) % (fm.q - 1), f"D_{{{j},{k}}}({f})")


def serre_derivation(d: DrinfeldData, forms: Sequence[FormExpr]) -> FormValue:
    """det of (D_{l,k_i} f_i) over i, l = 1..r-1."""
    fm = forms_of(d)
    r = fm.r
    if len(forms) != r - 1:
        raise ValueError(f"the Serre derivation takes {r - 1} forms")
    M = [[op_D(d, l, f).value for l in range(1, r)] for f in forms]
    ws = [f.weight(fm.q, r) for f in forms]
    ms = [f.type(fm.q, r) for f in forms]
    return FormValue(det(M, fm.F.zero()), sum(ws) + r, (sum(ms) + 1) % (fm.q - 1),
                     "Serre(" + ", ".join(map(str, forms)) + ")")


def translate_point(z: OmegaPoint, j: int, delta: LFElem) -> OmegaPoint:
    w = list(z.z)
    w[j - 1] = w[j - 1] + delta
    return OmegaPoint(w, label=f"{z.label}+d{j}")


def new_data(z: OmegaPoint, params: SumParams) -> DrinfeldData:
    return DrinfeldData(z, SumParams(D=params.D, G=params.G, D_check=params.D_check,
                                     workers=params.workers))


__all__ = [
    "Forms", "forms_of", "h_function", "e_bracket", "partials_g", "partials_h",
    "new_generators", "j_invariants", "GammaMatrix", "gamma_sample", "jfactor",
    "group_act", "frak_c", "mat_inverse", "FormExpr", "Eis", "G", "H", "Const",
    "parse_form", "FormValue", "form_jet", "evaluate_form", "op_D", "serre_derivation",
    "translate_point", "new_data", "FieldError",
]
