import math
from fractions import Fraction

import numpy as np
import pytest

from irmlab import chebyshev as ch
from irmlab.chebyshev import (
    T_to_power,
    cheb_eval,
    hard_edge_limit,
    matrix_U_trace,
    mp_moment_quadrature,
    mp_moments,
    orthogonality_check,
    power_to_T,
    product_coeff_identity,
    product_coeffs,
    q_poly,
    q_vs_chebyshev_grid,
    u_bound,
    un_pn_identity_exact,
)


class TestScalarEval:
    @pytest.mark.parametrize("n", [0, 1, 2, 7, 100, 10000])
    def test_u_at_one(self, n):
        assert cheb_eval("U", n, 1.0) == pytest.approx(n + 1)

    def test_tu_relation(self):
        # 2 T_n = U_n - U_{n-2}
        x, n = 0.3, 7
        lhs = 2 * cheb_eval("T", n, x)
        rhs = cheb_eval("U", n, x) - cheb_eval("U", n - 2, x)
        assert abs(lhs - rhs) < 1e-13

    def test_u2_root(self):
        assert cheb_eval("U", 2, 0.5) == pytest.approx(0.0, abs=1e-14)

    def test_against_exact_polynomial(self):
        # exact rational evaluation through the T~ coefficients
        for n in (3, 10, 37):
            coeffs = T_to_power(n)
            for x in (Fraction(1, 3), Fraction(-7, 5), Fraction(9, 8)):
                exact = sum(c * x ** k for k, c in coeffs.items())
                got = 2.0 * cheb_eval("T", n, float(x) / 2.0)
                assert abs(got - float(exact)) < 1e-12 * max(1.0, abs(float(exact)))

    def test_large_n_relative_accuracy(self):
        # against the hyperbolic closed form at a representable point
        n, x = 10000, 1.0 + 1e-9
        phi = math.log(x + math.sqrt((x - 1) * (x + 1)))
        expect = math.sinh((n + 1) * phi) / math.sinh(phi)
        assert cheb_eval("U", n, x) == pytest.approx(expect, rel=1e-12)

    def test_negative_argument_parity(self):
        assert cheb_eval("U", 5, -0.4) == pytest.approx(-cheb_eval("U", 5, 0.4))
        assert cheb_eval("T", 6, -1.7) == pytest.approx(cheb_eval("T", 6, 1.7))


class TestConversions:
    def test_t2_coefficients(self):
        assert T_to_power(2) == {2: Fraction(1), 0: Fraction(-2)}

    def test_x2_in_t_basis(self):
        assert power_to_T(2) == {2: Fraction(1), 0: Fraction(1)}

    def test_roundtrip_identity(self):
        for m in range(31):
            acc = {}
            for j, cj in power_to_T(m).items():
                for k, ck in T_to_power(j).items():
                    acc[k] = acc.get(k, Fraction(0)) + cj * ck
            acc = {k: v for k, v in acc.items() if v != 0}
            assert acc == {m: Fraction(1)}

    def test_orthogonality_exact(self):
        rep = orthogonality_check(40)
        assert rep["passed"]


class TestMatrixTrace:
    def test_zero_matrix(self):
        tr = matrix_U_trace(np.zeros((5, 5)), [0, 1, 2, 3, 4])
        # U_n(0) pattern: 1, 0, -1, 0, 1
        assert tr == [5.0, 0.0, -5.0, 0.0, 5.0]

    def test_two_identity(self):
        X = 2.0 * np.eye(4)
        tr = matrix_U_trace(X, [3])
        assert tr[0] == pytest.approx(4 * 4)  # U_3(1) = 4 per eigenvalue

    def test_tr_u0_u1_exact(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((6, 6))
        X = X + X.T
        t0, t1 = matrix_U_trace(X, [0, 1])
        assert t0 == 6.0
        assert t1 == pytest.approx(np.trace(X))

    def test_dual_paths_agree(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((6, 6))
        X = (X + X.T) / 4.0
        a = matrix_U_trace(X, [9], method="eigen")[0]
        b = matrix_U_trace(X, [9], method="recurrence")[0]
        assert abs(a - b) < 1e-10 * max(1.0, abs(a))

    def test_dual_paths_large(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((120, 120))
        X = (X + X.T) / math.sqrt(2 * 120)
        for n in (50, 200):
            a = matrix_U_trace(X, [n], method="eigen")[0]
            b = matrix_U_trace(X, [n], method="recurrence")[0]
            assert abs(a - b) <= 1e-8 * max(1.0, abs(a), abs(b))

    def test_non_hermitian_rejected(self):
        X = np.arange(9.0).reshape(3, 3)
        with pytest.raises(ch.ChebDomainError):
            matrix_U_trace(X, [2])


class TestProductCoeffs:
    def test_pair_of_ones(self):
        assert product_coeffs([1, 1]) == {0: 1, 2: 1}  # and 1*1 + 1*3 = 4

    def test_nn_contains_zero(self):
        for n in (1, 3, 6):
            assert product_coeffs([n, n]).get(0) == 1

    def test_234_total(self):
        ok, lhs, rhs = product_coeff_identity([2, 3, 4])
        assert ok and lhs == 60

    def test_random_lists(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            ms = rng.integers(1, 16, size=int(rng.integers(1, 5))).tolist()
            ok, _, _ = product_coeff_identity(ms)
            assert ok


class TestHardEdge:
    def test_at_zero(self):
        assert hard_edge_limit(1.0, 0.0) == 1.0

    def test_sine_zero(self):
        assert hard_edge_limit(1.0, -math.pi ** 2) == pytest.approx(0.0, abs=1e-15)

    def test_finite_m_convergence(self):
        M, t, y = 2000, 1.0, -4.0
        val = cheb_eval("U", 2000, 1.0 + y / (2 * M * M)) / 2001.0
        assert abs(val - math.sin(2.0) / 2.0) <= 1e-3

    def test_upper_bound_holds(self):
        for n in (1, 5, 20, 100):
            for x in np.linspace(-1.0, 0.0, 41):
                assert abs(cheb_eval("U", n, 1.0 + x)) <= u_bound(n, x) + 1e-9

    def test_lower_growth_constant_positive(self):
        C = ch.u_lower_growth_constant()
        assert 0.0 < C < 2.0
        # the fitted constant certifies the growth bound on its grid
        for n in (50, 200):
            for x in (1e-3, 0.05):
                assert cheb_eval("U", n, 1 + x) / (n + 1) >= math.exp(C * n * math.sqrt(x)) * (1 - 1e-9)


class TestMPFamily:
    def test_mu1_is_one(self):
        for a in (Fraction(1, 4), Fraction(1, 2), Fraction(1)):
            assert mp_moments(a, 1)[1] == 1

    def test_mu2(self):
        a = Fraction(1, 3)
        assert mp_moments(a, 2)[2] == 1 + a

    def test_quadrature_oracle_alpha_one(self):
        mus = mp_moments(1, 6)
        for k in range(7):
            assert abs(float(mus[k]) - mp_moment_quadrature(1.0, k)) < 1e-6

    def test_quadrature_oracle_alpha_half(self):
        mus = mp_moments(Fraction(1, 2), 6)
        for k in range(7):
            assert abs(float(mus[k]) - mp_moment_quadrature(0.5, k)) < 1e-6

    def test_cmp_edge_cases(self):
        a = Fraction(1, 4)
        assert ch.cmp_coeff(3, 0, a) == mp_moments(a, 3)[3]
        assert ch.cmp_coeff(2, 3, a) == 0
        assert ch.cmp_coeff(4, 4, a) == 1

    def test_q2_value(self):
        q = q_poly(2, Fraction(1, 4))
        assert q(Fraction(1)) == Fraction(-1, 4)

    @pytest.mark.parametrize("alpha", [Fraction(1, 4), Fraction(1, 2), Fraction(1)])
    def test_un_pn_exact(self, alpha):
        for n in range(1, 13):
            assert un_pn_identity_exact(n, alpha)

    @pytest.mark.parametrize("alpha", [0.25, 0.5, 1.0])
    def test_q_vs_chebyshev(self, alpha):
        worst = max(q_vs_chebyshev_grid(n, alpha) for n in range(1, 21))
        assert worst <= 1e-10
