"""Chebyshev machinery: scalar/matrix evaluation, exact conversion identities,
product-coefficient combinatorics, hard-edge scaling, and the polynomial
families attached to the Marchenko-Pastur law.

All combinatorial identities run in exact rational arithmetic; floats appear
only in evaluation.  T~ denotes the rescaled first-kind polynomial
T~_n(x) = 2 T_n(x/2), which has integer coefficients and satisfies
x^m = sum'_j binom(m, (m-j)/2) T~_j(x) with the j = 0 term halved.
"""

from __future__ import annotations

import dataclasses
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np


class ChebDomainError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class PolySeries:
    """Coefficient list (index = degree) in a named basis."""
    basis: str
    coefficients: tuple

    def __call__(self, x):
        acc = 0.0 * np.asarray(x, dtype=float) if not isinstance(x, Fraction) else Fraction(0)
        for c in reversed(self.coefficients):
            acc = acc * x + (float(c) if not isinstance(x, Fraction) else c)
        return acc

    def degree(self):
        return len(self.coefficients) - 1


# ---------------------------------------------------------------------------
# scalar evaluation
# ---------------------------------------------------------------------------

def cheb_eval(kind, n, x):
    """Numerically stable T_n(x) or U_n(x) (trig/hyperbolic closed forms)."""
    if n < 0:
        if kind == "U":
            return 0.0 if n == -1 else -cheb_eval("U", -n - 2, x)
        raise ChebDomainError("n must be >= 0")
    x = float(x)
    if x < -1.0:
        s = 1.0 if n % 2 == 0 else -1.0
        return s * cheb_eval(kind, n, -x)
    if x <= 1.0:
        th = math.acos(max(-1.0, min(1.0, x)))
        if kind == "T":
            return math.cos(n * th)
        sth = math.sin(th)
        if sth < 1e-150:
            return float(n + 1) if x > 0 else float((n + 1) * (-1) ** n)
        return math.sin((n + 1) * th) / sth
    # x > 1: hyperbolic branch; phi via the cancellation-free sqrt
    phi = math.log(x + math.sqrt((x - 1.0) * (x + 1.0)))
    try:
        if kind == "T":
            return math.cosh(n * phi)
        if phi < 1e-150:
            return float(n + 1)
        return math.sinh((n + 1) * phi) / math.sinh(phi)
    except OverflowError:
        return math.inf


def u_poly_half_coeffs(n):
    """Integer coefficients of U_n(x/2) (monic, degree n)."""
    a, b = [1], [0, 1]
    if n == 0:
        return a
    for _ in range(2, n + 1):
        nxt = [0] + b
        for i, c in enumerate(a):
            nxt[i] -= c
        a, b = b, nxt
    return b


# ---------------------------------------------------------------------------
# exact conversions between the power and T~ bases
# ---------------------------------------------------------------------------

def power_to_T(m):
    """x^m = sum_j coeff[j] * T~_j(x); returns {j: Fraction}."""
    if m < 0:
        raise ChebDomainError("m must be >= 0")
    out = {}
    for j in range(m % 2, m + 1, 2):
        c = Fraction(math.comb(m, (m - j) // 2))
        if j == 0:
            c /= 2
        out[j] = c
    return out


def T_to_power(n):
    """T~_n(x) = sum_k coeff[k] * x^k; returns {k: Fraction} (integers)."""
    if n < 0:
        raise ChebDomainError("n must be >= 0")
    if n == 0:
        return {0: Fraction(2)}
    out = {}
    for m in range(n // 2 + 1):
        out[n - 2 * m] = Fraction((-1) ** m * n * math.comb(n - m, m), n - m)
    return out


def orthogonality_check(n_max):
    """Exact check of the composed-conversion identity
    sum_m (-1)^m n/(n-m) binom(n-m, m) binom(n-2m, (n-2m-j)/2) = delta_{nj}
    for 1 <= n <= n_max and all admissible j.  Returns a report dict."""
    worst = None
    for n in range(1, n_max + 1):
        acc = {}
        tp = T_to_power(n)
        for k, ck in tp.items():
            for j, cj in power_to_T(k).items():
                acc[j] = acc.get(j, Fraction(0)) + ck * cj
        for j in range(0, n + 1):
            expect = Fraction(1) if j == n else Fraction(0)
            got = acc.get(j, Fraction(0))
            if got != expect:
                worst = (n, j, str(got))
                return {"passed": False, "n_max": n_max, "worst": worst}
    return {"passed": True, "n_max": n_max, "worst": None}


# ---------------------------------------------------------------------------
# matrix traces
# ---------------------------------------------------------------------------

def matrix_U_trace(X, n_list, method="recurrence"):
    """Tr U_n(X/2) for each n in n_list.

    'recurrence' iterates the three-term recurrence with two frontier
    matrices; 'eigen' evaluates sum_i U_n(lambda_i / 2) directly.  The two
    paths agree to relative 1e-8 and serve as each other's cross-check.
    """
    X = np.asarray(X)
    if np.max(np.abs(X - X.conj().T)) > 1e-8 * max(1.0, float(np.max(np.abs(X)))):
        raise ChebDomainError("matrix_U_trace requires a Hermitian matrix")
    n_list = list(n_list)
    n_max = max(n_list)
    if method == "eigen":
        lam = np.linalg.eigvalsh(X)
        return [float(sum(cheb_eval("U", n, l / 2.0) for l in lam)) for n in n_list]
    N = X.shape[0]
    want = set(n_list)
    out = {}
    prev = np.eye(N, dtype=X.dtype)
    cur = X.copy()
    if 0 in want:
        out[0] = float(N)
    if 1 in want:
        out[1] = float(np.real(np.trace(X)))
    for n in range(2, n_max + 1):
        prev, cur = cur, X @ cur - prev
        if n in want:
            out[n] = float(np.real(np.trace(cur)))
    return [out[n] for n in n_list]


# ---------------------------------------------------------------------------
# product coefficients  U_{m1} ... U_{mt} = sum_k c({m}; k) U_k
# ---------------------------------------------------------------------------

def product_coeffs(m_list):
    """Exact expansion coefficients from iterating
    U_k U_l = sum_{m=0}^{min(k,l)} U_{|l-k|+2m}.  Returns {k: int}."""
    if not m_list:
        return {0: 1}
    acc = {int(m_list[0]): 1}
    for m in m_list[1:]:
        m = int(m)
        nxt = {}
        for k, c in acc.items():
            lo, hi = abs(k - m), k + m
            for t in range(lo, hi + 1, 2):
                nxt[t] = nxt.get(t, 0) + c
        acc = nxt
    return acc


def product_coeff_identity(m_list):
    """Exact check of sum_k c({m};k)(k+1) = prod_j (m_j + 1)."""
    coeffs = product_coeffs(m_list)
    lhs = sum(c * (k + 1) for k, c in coeffs.items())
    rhs = math.prod(int(m) + 1 for m in m_list)
    return lhs == rhs, lhs, rhs


# ---------------------------------------------------------------------------
# hard-edge scaling and standard bounds
# ---------------------------------------------------------------------------

def hard_edge_limit(t, y):
    """lim U_{[tM]}(1 + y/(2M^2)) / (tM + 1) = sin(t sqrt(-y)) / (t sqrt(-y));
    the y > 0 branch continues as sinh."""
    if t <= 0:
        raise ChebDomainError("t must be positive")
    if y == 0:
        return 1.0
    if y < 0:
        z = t * math.sqrt(-y)
        return math.sin(z) / z
    z = t * math.sqrt(y)
    return math.sinh(z) / z


def u_bound(n, x):
    """Upper envelope min(2n, sqrt(2)/sqrt(-2x)) for |U_n(1+x)| on -1 <= x <= 0.

    With 1 + x = cos(theta), |U_n| <= 1/sin(theta) and
    sin(theta) = sqrt(-2x) sqrt(1 + x/2) >= sqrt(-x) on the stated range, so
    the sqrt(2) factor is required (at x = -1, |U_n(0)| = 1 > 1/sqrt(2)).
    """
    if not -1.0 <= x <= 0.0:
        raise ChebDomainError("bound valid on -1 <= x <= 0")
    cap = math.inf if x == 0 else math.sqrt(2.0) / math.sqrt(-2.0 * x)
    return min(2.0 * max(n, 1), cap)


def u_lower_growth_constant(n_values=None, x_values=None):
    """Empirical fit of C in U_n(1+x)/(n+1) >= exp(C n sqrt(x)) on [0, 0.1)."""
    if n_values is None:
        n_values = [20, 50, 100, 200]
    if x_values is None:
        x_values = [1e-4, 1e-3, 1e-2, 0.05, 0.09]
    best = math.inf
    for n in n_values:
        for x in x_values:
            val = cheb_eval("U", n, 1.0 + x) / (n + 1)
            if val <= 1.0 or math.isinf(val):
                continue
            best = min(best, math.log(val) / (n * math.sqrt(x)))
    return best


# ---------------------------------------------------------------------------
# Marchenko-Pastur moments and the attached polynomial families
# ---------------------------------------------------------------------------

def mp_moments(alpha, k_max):
    """Exact MP moments: mu_0 = 1, mu_k = sum_j binom(k,j) binom(k-1,j) alpha^j/(j+1)."""
    alpha = Fraction(alpha)
    out = [Fraction(1)]
    for k in range(1, k_max + 1):
        s = Fraction(0)
        for j in range(k):
            s += Fraction(math.comb(k, j) * math.comb(k - 1, j), j + 1) * alpha ** j
        out.append(s)
    return out


def mp_moment_quadrature(alpha, k, n_nodes=400):
    """Quadrature oracle for the k-th MP moment (substitution x = 1 + a - 2 sqrt(a) cos th
    removes the edge singularities)."""
    a = float(alpha)
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    th = 0.5 * math.pi * (nodes + 1.0)
    w = 0.5 * math.pi * weights
    x = 1.0 + a - 2.0 * math.sqrt(a) * np.cos(th)
    # dx = 2 sqrt(a) sin th dth ; sqrt((l+ - x)(x - l-)) = 2 sqrt(a) sin th
    dens = (2.0 * math.sqrt(a) * np.sin(th)) / (2.0 * math.pi * a * x)
    vals = x ** k * dens * 2.0 * math.sqrt(a) * np.sin(th)
    return float(np.sum(w * vals))


@lru_cache(maxsize=None)
def _cmp_row(m, alpha):
    mus = mp_moments(alpha, m)
    out = [mus[m]]
    conv = [Fraction(0)] * (m + 1)
    conv[0] = Fraction(1)
    for n in range(1, m + 1):
        nxt = [Fraction(0)] * (m + 1)
        for tot in range(m + 1):
            if conv[tot] == 0:
                continue
            for k in range(1, m - tot + 1):
                nxt[tot + k] += conv[tot] * mus[k]
        conv = nxt
        out.append(Fraction(m, n) * conv[m])
    return tuple(out)


def cmp_coeff(m, n, alpha):
    """C_MP(m, n): mu_m at n = 0, (m/n) sum over compositions for 1 <= n <= m,
    zero for n > m.  Exact rationals."""
    if n > m:
        return Fraction(0)
    return _cmp_row(m, Fraction(alpha))[n]


def p_poly(n, alpha):
    """Monic P_n from triangular inversion of x^m = sum_n C_MP(m,n) P_n(x)."""
    alpha = Fraction(alpha)
    polys = []
    for m in range(n + 1):
        coeffs = [Fraction(0)] * (n + 1)
        coeffs[m] = Fraction(1)
        row = _cmp_row(m, alpha)
        for k in range(m):
            c = row[k]
            for i in range(n + 1):
                coeffs[i] -= c * polys[k].coefficients[i]
        polys.append(PolySeries("P_family", tuple(coeffs)))
    return polys[n]


def q_poly(n, alpha):
    """Q_0 = 1, Q_1 = x - 1, Q_n = (x - 1 - alpha) Q_{n-1} - alpha Q_{n-2}."""
    alpha = Fraction(alpha)
    width = n + 1
    prev = [Fraction(1)] + [Fraction(0)] * (width - 1)
    if n == 0:
        return PolySeries("Q_family", tuple(prev))
    cur = [Fraction(-1), Fraction(1)] + [Fraction(0)] * (width - 2)
    for _ in range(2, n + 1):
        nxt = [Fraction(0)] * width
        for i in range(width - 1):
            nxt[i + 1] += cur[i]
        for i in range(width):
            nxt[i] += -(1 + alpha) * cur[i] - alpha * prev[i]
        prev, cur = cur, nxt
    return PolySeries("Q_family", tuple(cur))


def un_pn_identity_exact(n, alpha):
    """Exact form of the U <-> P relation, with sqrt(alpha) cleared:
    Q_n(x) = sum_{i=0}^{n-1} alpha^(ceil(i/2)) P_{n-i}(x).  Returns bool."""
    alpha = Fraction(alpha)
    q = q_poly(n, alpha)
    width = len(q.coefficients)
    rhs = [Fraction(0)] * width
    for i in range(n):
        c = alpha ** ((i + 1) // 2)
        p = p_poly(n - i, alpha)
        for j, co in enumerate(p.coefficients):
            rhs[j] += c * co
    return list(q.coefficients) == rhs


def q_eval(n, alpha, x):
    """Q_n at float points via the stable three-term recurrence."""
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev
    cur = x - 1.0
    for _ in range(2, n + 1):
        prev, cur = cur, (x - 1.0 - alpha) * cur - alpha * prev
    return cur


def q_vs_chebyshev_grid(n, alpha, n_points=21):
    """Max pointwise relative error of Q_n(x) against
    alpha^(n/2) (U_n(z) + sqrt(alpha) U_{n-1}(z)), z = (x-(1+alpha))/(2 sqrt(alpha)),
    on a deterministic midpoint grid inside the MP bulk."""
    a = float(alpha)
    lam_minus, lam_plus = (1 - math.sqrt(a)) ** 2, (1 + math.sqrt(a)) ** 2
    i = np.arange(n_points)
    xs = lam_minus + (lam_plus - lam_minus) * (2 * i + 1) / (2.0 * n_points)
    lhs = q_eval(n, a, xs)
    z = (xs - (1.0 + a)) / (2.0 * math.sqrt(a))
    rhs = a ** (n / 2.0) * (np.array([cheb_eval("U", n, zz) for zz in z])
                            + math.sqrt(a) * np.array([cheb_eval("U", n - 1, zz) for zz in z]))
    den = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1e-300)
    return float(np.max(np.abs(lhs - rhs) / den))
