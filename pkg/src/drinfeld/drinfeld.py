"""The Drinfeld module attached to a point of the period domain.

``DrinfeldData`` collects, for one point z, the Eisenstein values, the
coefficient forms g_1..g_r of phi_theta = theta + g_1 tau + ... + g_r tau^r,
the exponential and logarithm coefficients, the Anderson generating
functions s_1..s_r as pole sums, the period matrix with its cofactors,
and the coefficients c_{q^i-1} of Pellarin's series.
"""

from __future__ import annotations

import itertools
from functools import cached_property
from typing import Callable, Sequence

from .lattice import Jet, LatticeSums, OmegaPoint, SumParams
from .localfield import FieldDesc, LFElem, PrecisionError
from .tate import PoleSum

J_CAP = 40


# -- small dense linear algebra over any ring of LFElem-like values --------

def _perm_sign(perm: Sequence[int]) -> int:
    sign, seen = 1, [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, n = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            n += 1
        if n % 2 == 0:
            sign = -sign
    return sign


def det(M: Sequence[Sequence], zero=None):
    """Leibniz-formula determinant; exact-zero entries are skipped."""
    n = len(M)
    if n == 0:
        raise ValueError("empty matrix")
    acc = zero
    for perm in itertools.permutations(range(n)):
        term = None
        skip = False
        for i, j in enumerate(perm):
            x = M[i][j]
            if _is_exact_zero(x):
                skip = True
                break
            term = x if term is None else term * x
        if skip:
            continue
        if _perm_sign(perm) < 0:
            term = -term
        acc = term if acc is None else acc + term
    if acc is None:
        raise ValueError("determinant of a matrix of exact zeros needs a zero element")
    return acc


def minor(M: Sequence[Sequence], i: int, j: int) -> list[list]:
    return [[x for c, x in enumerate(row) if c != j] for r, row in enumerate(M) if r != i]


def cofactor(M: Sequence[Sequence], i: int, j: int, zero=None):
    """(i, j) cofactor with 0-based indices."""
    n = len(M)
    if n == 1:
        return zero if zero is not None else None
    d = det(minor(M, i, j), zero)
    return d if (i + j) % 2 == 0 else -d


def _is_exact_zero(x) -> bool:
    a = getattr(x, "a", x)
    return isinstance(a, LFElem) and a.is_zero and a.exact and all(
        getattr(d, "is_zero", True) and getattr(d, "exact", True) for d in getattr(x, "d", ()))


# -- the engine -------------------------------------------------------------

class DrinfeldData:
    """Per-point cache for phi^z.

    Indices of g, alpha, beta follow the usual conventions (alpha_0 =
    beta_0 = 1). Partial derivatives are with respect to z_1..z_{r-1}
    (1-based ``j``).
    """

    def __init__(self, point: OmegaPoint, params: SumParams | None = None,
                 sums: LatticeSums | None = None):
        self.point = point
        self.F: FieldDesc = point.F
        self.r = point.r
        self.params = params or SumParams()
        self.sums = sums or LatticeSums(point, self.params, derivatives=True, nalpha=self.r + 1)
        self._eis: dict[int, LFElem] = {}
        self._alpha: list[LFElem] = []
        self._J: int | None = None

    # -- Eisenstein values ----------------------------------------------
    def eis(self, k: int) -> LFElem:
        if k not in self._eis:
            self._eis[k] = self.sums.eisenstein(k)
        return self._eis[k]

    def eis_partial(self, j: int, k: int) -> LFElem:
        return self.sums.eisenstein_partial(j, k)

    def _theta_gap(self, i: int) -> LFElem:
        """theta^(q^i) - theta."""
        F = self.F
        return F.theta(F.q**i) - F.theta(1)

    # -- coefficient forms ----------------------------------------------
    def _g_recursion(self, upto: int, eis: Callable[[int], LFElem]) -> list[LFElem]:
        q = self.F.q
        g = [self.F.zero()]
        for i in range(1, upto + 1):
            acc = self._theta_gap(i) * eis(q**i - 1)
            for k in range(1, i):
                acc = acc + eis(q**k - 1) * g[i - k].frob(k)
            g.append(acc)
        return g

    @cached_property
    def _g_all(self) -> list[LFElem]:
        return self._g_recursion(self.r + 1, self.eis)

    @property
    def g(self) -> list[LFElem]:
        """[g_0 placeholder, g_1, ..., g_r]; g_0 is reported as zero."""
        return self._g_all[: self.r + 1]

    def g_i(self, i: int) -> LFElem:
        if not 1 <= i <= self.r:
            raise ValueError(f"coefficient index must lie in 1..{self.r}")
        return self._g_all[i]

    def rank_consistency(self) -> LFElem:
        """The recursion value at i = r + 1, zero for a rank-r lattice."""
        return self._g_all[self.r + 1]

    def g_partial(self, i: int, j: int) -> LFElem:
        """d g_i / d z_j from the differentiated recursion."""
        if not 1 <= i <= self.r:
            raise ValueError(f"coefficient index must lie in 1..{self.r}")
        q = self.F.q
        acc = self._theta_gap(i) * self.eis_partial(j, q**i - 1)
        for k in range(1, i):
            acc = acc + self.eis_partial(j, q**k - 1) * self._g_all[i - k].frob(k)
        return acc

    # -- exponential and logarithm --------------------------------------
    def _alpha_upto(self, n: int) -> list[LFElem]:
        F = self.F
        if n > J_CAP:
            raise PrecisionError(f"exponential cutoff exceeds the cap {J_CAP}")
        a = self._alpha or [F.one()]
        for i in range(len(a), n + 1):
            acc = self._g_all[i] if i <= self.r else F.zero()
            for mu in range(1, min(i - 1, self.r) + 1):
                acc = acc + self._g_all[mu] * a[i - mu].frob(mu)
            a.append(acc / self._theta_gap(i))
        self._alpha = a
        return a[: n + 1]

    def alpha(self, i: int) -> LFElem:
        return self._alpha_upto(i)[i]

    @property
    def J(self) -> int:
        """Smallest J with alpha_J z_i^(q^J) below working precision for all i."""
        if self._J is None:
            F = self.F
            W = F.prec
            for J in range(1, J_CAP + 1):
                aJ = self.alpha(J)
                ok = True
                for z in list(self.point.z) + list(self.sums.basis):
                    term = aJ * z.frob(J)
                    gap = (term.prec if term.is_zero else term.n0) - z.n0
                    if gap < W + F.e:
                        ok = False
                        break
                if ok:
                    self._J = J
                    break
            else:
                raise PrecisionError(f"exponential tail does not decay before J = {J_CAP}")
        return self._J

    def alphas(self) -> list[LFElem]:
        return self._alpha_upto(self.J)

    def beta(self, i: int) -> LFElem:
        """beta_i = -Eis_{q^i - 1}."""
        if i == 0:
            return self.F.one()
        if i > self.r + 1:
            raise ValueError(f"beta_{i} needs Eisenstein weights beyond the tracked range")
        return -self.eis(self.F.q**i - 1)

    def beta_formal(self, n: int) -> LFElem:
        """beta_n from formally inverting the exponential: sum_i alpha_i beta_{n-i}^(q^i) = 0."""
        a = self._alpha_upto(n)
        b = [self.F.one()]
        for k in range(1, n + 1):
            acc = self.F.zero()
            for i in range(1, k + 1):
                acc = acc + a[i] * b[k - i].frob(i)
            b.append(-acc)
        return b[n]

    def exp_eval(self, w: LFElem) -> LFElem:
        """exp_phi(w) = sum alpha_i w^(q^i), summed until the tail is below precision."""
        F = self.F
        if w.is_zero:
            return w
        acc = w
        ref = w.n0
        for i in range(1, J_CAP + 1):
            term = self.alpha(i) * w.frob(i)
            if not term.is_zero:
                ref = min(ref, term.n0)
            acc = acc + term
            nxt = term.prec if term.is_zero else term.n0
            if i >= self.J and nxt - ref >= F.prec + F.e:
                return acc
        raise PrecisionError("exponential series does not converge at this argument")

    # -- Anderson generating functions ----------------------------------
    def agf(self, i: int) -> PoleSum:
        """s_i = sum_j alpha_j z_i^(q^j) / (theta^(q^j) - t), i in 1..r."""
        if not 1 <= i <= self.r:
            raise ValueError(f"coordinate index must lie in 1..{self.r}")
        z = self.point.z[i - 1]
        a = self.alphas()
        return PoleSum(self.F, [], {j: a[j] * z.frob(j) for j in range(self.J + 1)})

    def _agf_basis(self, k: int) -> PoleSum:
        """Generating function of the k-th reduced basis vector (0-based)."""
        b = self.sums.basis[k]
        a = self.alphas()
        return PoleSum(self.F, [], {j: a[j] * b.frob(j) for j in range(self.J + 1)})

    # The period matrix is built on the reduced basis b = U z, where the
    # pole sums do not cancel, and carried back by P_z = U^-1 P_b.
    @cached_property
    def _U(self) -> list[list[LFElem]]:
        return self.sums.U

    @cached_property
    def _detU_inv(self) -> LFElem:
        return det(self._U, self.F.zero()).inv()

    @cached_property
    def _U_inv(self) -> list[list[LFElem]]:
        U, r, c = self._U, self.r, self._detU_inv
        if r == 1:
            return [[c]]
        return [[cofactor(U, j, i, self.F.zero()) * c for j in range(r)] for i in range(r)]

    @cached_property
    def _period_matrix_b(self) -> list[list[LFElem]]:
        rows = []
        for k in range(self.r):
            s = self._agf_basis(k)
            rows.append([-self.sums.basis[k]] + [s.twist(n).eval_theta() for n in range(1, self.r)])
        return rows

    @cached_property
    def period_matrix(self) -> list[list[LFElem]]:
        Pb, Ui, r = self._period_matrix_b, self._U_inv, self.r
        out = []
        for i in range(r):
            row = [-self.point.z[i]]
            for n in range(1, r):
                acc = self.F.zero()
                for k in range(r):
                    if not _is_exact_zero(Ui[i][k]):
                        acc = acc + Ui[i][k] * Pb[k][n]
                row.append(acc)
            out.append(row)
        return out

    def F_tau(self, k: int, i: int) -> LFElem:
        """Quasi-periodic value F_{tau^k}(z_i), k in 1..r-1."""
        if not 1 <= k <= self.r - 1:
            raise ValueError(f"quasi-period index must lie in 1..{self.r - 1}")
        return self.period_matrix[i - 1][k]

    def _from_basis(self, Mb: list[list]) -> list[list]:
        """cof(P_z) = det(U)^-1 U^T cof(P_b)."""
        U, c, r = self._U, self._detU_inv, self.r
        out = []
        for i in range(r):
            row = []
            for j in range(r):
                acc = None
                for k in range(r):
                    if _is_exact_zero(U[k][i]):
                        continue
                    term = Mb[k][j] * U[k][i]
                    acc = term if acc is None else acc + term
                row.append(acc * c)
            out.append(row)
        return out

    @cached_property
    def _cofactors(self) -> list[list[LFElem]]:
        if self.r == 1:
            return [[self.F.one()]]
        P = self._period_matrix_b
        z = self.F.zero()
        return self._from_basis([[cofactor(P, i, j, z) for j in range(self.r)] for i in range(self.r)])

    def L(self, i: int, j: int) -> LFElem:
        """(i, j) cofactor of the period matrix, 1-based."""
        return self._cofactors[i - 1][j - 1]

    @cached_property
    def _cofactor_jets(self) -> list[list[Jet]]:
        """Cofactors with their z_1..z_{r-1} derivatives.

        Twisted columns carry no derivative (Frobenius kills it), so only
        the first column -b_k varies, with derivative -U_kl.
        """
        F, r = self.F, self.r
        nd = r - 1
        zero = F.zero()
        M = []
        for k, row in enumerate(self._period_matrix_b):
            d0 = [-self._U[k][l] for l in range(nd)]
            M.append([Jet(row[0], d0)] + [Jet(x, [zero] * nd) for x in row[1:]])
        zj = Jet(zero, [zero] * nd)
        return self._from_basis([[cofactor(M, i, j, zj) for j in range(r)] for i in range(r)])

    def L_partial(self, i: int, j: int, l: int) -> LFElem:
        """d L_ij / d z_l (all indices 1-based)."""
        if not 1 <= l <= self.r - 1:
            raise ValueError(f"derivative index must lie in 1..{self.r - 1}")
        return self._cofactor_jets[i - 1][j - 1].d[l - 1]

    @cached_property
    def period_det(self) -> LFElem:
        P = self._period_matrix_b
        if self.r == 1:
            return P[0][0] * self._detU_inv
        acc = self.F.zero()
        for j in range(self.r):
            acc = acc + P[0][j] * cofactor(P, 0, j, self.F.zero())
        return acc * self._detU_inv

    # -- Pellarin coefficients ------------------------------------------
    def pellarin_c(self, i: int) -> PoleSum:
        """c_{q^i - 1} = sum_{j<=i} alpha_j beta_{i-j}^(q^j) / (theta^(q^j) - t)."""
        if i < 0:
            raise ValueError("index must be >= 0")
        a = self._alpha_upto(i)
        return PoleSum(self.F, [], {j: a[j] * self.beta(i - j).frob(j) for j in range(i + 1)})

    def describe(self) -> dict:
        return {"point": self.point.describe(), "J": self.J, "D": self.params.D}


__all__ = ["DrinfeldData", "det", "cofactor", "minor", "J_CAP"]
