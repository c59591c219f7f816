import math

import numpy as np
import pytest

from kreinverse import hfun, krein
from kreinverse import gk_model as gk
from kreinverse.errors import GridTooCoarse, NotMultipleOfThree, OffGrid, SingularMatrix


def toy_h(r):
    return 1.5 * np.exp(-np.abs(r))


def toy_G(x):
    """Exact G for H = 1.5 exp(-r): the Lorentzian toy with a = 1, b = 2."""
    return -12.0 / (9.0 * np.exp(2 * x) - np.exp(-2 * x))


def toy_V0(r, C=1.0):
    return -96.0 * C / (3.0 * np.exp(2 * r) + np.exp(-2 * r)) ** 2


def toy_table(h, n, eps=1.0):
    return hfun.table_from_function(lambda r: eps * toy_h(r), h, n)


class TestQuadrature:
    def test_m3(self):
        assert list(krein.quadrature_pattern(3)) == [1, 3, 3, 1]

    def test_m6(self):
        assert list(krein.quadrature_pattern(6)) == [1, 3, 3, 2, 3, 3, 1]

    def test_weights(self):
        assert np.allclose(krein.quadrature_weights(3, 2.0), [0.75, 2.25, 2.25, 0.75])

    def test_cubic(self):
        w = krein.quadrature_weights(3, 1.0)
        assert float(w @ np.arange(4.0) ** 3) == 20.25

    @pytest.mark.parametrize("m", [0, 4, 5, -3])
    def test_not_multiple(self, m):
        with pytest.raises(NotMultipleOfThree):
            krein.quadrature_pattern(m)


class TestMatrix:
    def test_structure_m9(self):
        hv = np.arange(1.0, 11.0) / 7
        table = hfun.HTable(0.1, hv)
        mat = krein.krein_matrix(table, 3)
        g = krein.quadrature_pattern(9)
        delta = 0.375 * 0.1
        for k in range(10):
            for j in range(10):
                expected = (k == j) + delta * g[j] * hv[abs(j - k)]
                assert mat[k, j] == pytest.approx(expected, rel=1e-15)

    def test_table_too_short(self):
        with pytest.raises(ValueError):
            krein.krein_matrix(hfun.HTable(0.1, np.ones(4)), 2)


class TestSolve:
    def test_zero_kernel(self):
        gamma = krein.solve_gamma_full(hfun.HTable(0.1, np.zeros(10)), 3)
        assert np.all(gamma == 0)

    def test_first_neumann_term(self):
        eps = 1e-6
        table = toy_table(0.01, 40, eps)
        g = krein.solve_gamma_full(table, 40)
        assert abs(g[-1] + eps * toy_h(1.2)) <= 10 * eps ** 2

    def test_toy_richardson(self):
        # x = 1 with h = 1/300 against h = 1/3000 extrapolated at second order
        coarse = krein.solve_gamma_full(toy_table(1 / 300, 100), 100)[-1]
        fine = krein.solve_gamma_full(toy_table(1 / 3000, 1000), 1000)[-1]
        extrap = (100 * fine - coarse) / 99
        assert abs(coarse - extrap) <= 1e-6
        assert extrap == pytest.approx(toy_G(1.0), rel=1e-9)

    def test_second_order_convergence(self):
        errs = []
        for n in (20, 40, 80):
            h = 1.2 / (3 * n)
            errs.append(abs(krein.solve_gamma_full(toy_table(h, n), n)[-1] - toy_G(1.2)))
        assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5

    def test_neumann_consistency(self):
        eps, h, n = 1e-3, 0.02, 20
        table = toy_table(h, n, eps)
        gamma = krein.solve_gamma_full(table, n)
        m = 3 * n
        U = krein.krein_matrix(table, n) - np.eye(m + 1)
        H = table.values[: m + 1]
        neumann = -H + U @ H - U @ (U @ H)
        assert np.max(np.abs(gamma - neumann)) <= 10 * eps ** 4 * 1.5 ** 4 * (3 * h * n) ** 3

    def test_singular(self):
        h = 0.1
        table = hfun.HTable(h, np.full(4, -1.0 / (3.0 * h)))
        with pytest.raises(SingularMatrix):
            krein.solve_gamma_full(table, 1)


class TestGFunction:
    def test_origin(self, xe2):
        table = hfun.build_h_table(xe2.model, 1e-9, 3)
        sol = krein.g_function(table, [1, 3])
        assert sol.x[0] == 0 and sol.G[0] == -table[0]
        assert list(sol.x / 3e-9) == pytest.approx([0, 1, 3])

    def test_zero(self):
        sol = krein.g_function(hfun.HTable(0.1, np.zeros(13)), range(5))
        assert np.all(sol.G == 0)

    def test_workers_identical(self):
        table = toy_table(0.01, 30)
        a = krein.g_function(table, range(0, 31, 5))
        b = krein.g_function(table, range(0, 31, 5), workers=3)
        assert np.array_equal(a.G, b.G)

    def test_keep_gammas(self):
        sol = krein.g_function(toy_table(0.01, 6), [2, 6], keep_gammas=True)
        assert set(sol.gammas) == {0, 2, 6}
        assert sol.gammas[6].size == 19

    def test_exceeds_table(self):
        with pytest.raises(ValueError):
            krein.g_function(toy_table(0.01, 3), [4])

    def test_derivative_identity(self):
        # d Gamma_x(0) / dx = G(x)^2 at x = 0.9, with O(h^2) error
        errs = []
        for h, n in ((0.004, 75), (0.002, 150)):
            sol = krein.g_function(toy_table(h, n + 1), [n - 1, n, n + 1])
            d = (sol.gamma_first[3] - sol.gamma_first[1]) / (6 * h)
            errs.append(abs(d - sol.G[2] ** 2))
        assert errs[1] <= 1e-4 * toy_G(0.9) ** 2
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


class TestSeries:
    def test_zero(self):
        table = hfun.HTable(0.1, np.zeros(20))
        assert krein.gamma_first_series(table, 12) == 0.0
        assert krein.g_squared_series(table, 9) == 0.0

    def test_first_step_order1(self):
        hv = np.array([0.3, -0.2, 0.5, 0.7])
        table = hfun.HTable(0.1, hv)
        delta = 0.375 * 0.1
        expected = -hv[0] + delta * (hv[0] ** 2 + 3 * hv[1] ** 2 + 3 * hv[2] ** 2 + hv[3] ** 2)
        assert krein.gamma_first_series(table, 3, order=1) == pytest.approx(expected, rel=1e-15)

    def test_first_step_order2_matches_full_sum(self):
        rng = np.random.default_rng(3)
        hv = rng.normal(size=4) * 1e-2
        table = hfun.HTable(0.1, hv)
        delta = 0.0375
        g = krein.quadrature_pattern(3)
        v = g * hv
        S = v @ np.array([[hv[abs(i - j)] for j in range(4)] for i in range(4)]) @ v
        first = hv[0] ** 2 + 3 * hv[1] ** 2 + 3 * hv[2] ** 2 + hv[3] ** 2
        expected = -hv[0] + delta * first - delta ** 2 * S
        assert krein.gamma_first_series(table, 3) == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("m", [3, 30, 150])
    def test_recurrence_vs_full(self, m):
        eps = 1e-4
        table = toy_table(1e-3, m // 3 + 1, eps)
        full = krein.solve_gamma_full(table, m // 3)[0]
        assert abs(krein.gamma_first_series(table, m) - full) <= 10 * (eps * 1.5) ** 3

    def test_order_validation(self):
        with pytest.raises(ValueError):
            krein.gamma_first_series(toy_table(0.1, 2), 3, order=3)
        with pytest.raises(NotMultipleOfThree):
            krein.gamma_first_series(toy_table(0.1, 2), 4)

    def test_g_squared_vs_full(self):
        eps, h = 1e-4, 1e-3
        table = toy_table(h, 60, eps)
        for m in (0, 30, 90):
            est = krein.g_squared_series(table, m)
            g0 = krein.solve_gamma_full(table, m // 3)[-1] if m else -table[0]
            g1 = krein.solve_gamma_full(table, m // 3 + 1)[-1]
            assert abs(est - 0.5 * (g0 ** 2 + g1 ** 2)) <= 10 * (eps * 1.5) ** 3

    def test_g_squared_is_difference_quotient(self):
        table = toy_table(1e-3, 40, 1e-4)
        for m in (0, 27, 60):
            fd = (krein.gamma_first_series(table, m + 3) - krein.gamma_first_series(table, m)) / (3e-3)
            assert krein.g_squared_series(table, m) == pytest.approx(fd, rel=1e-9)


class TestPotential:
    def test_zero(self):
        sol = krein.KreinSolution(0.1, np.arange(5) * 0.3, np.zeros(5))
        assert np.all(krein.potential_from_g(sol, 2.0).v == 0)

    def test_quadratic_exact(self):
        a, b, c = 0.7, -1.3, 0.4
        x = np.linspace(0, 1, 11)
        G = a + b * x + c * x * x
        pot = krein.potential_from_g(krein.KreinSolution(0.1, x, G), 2.0)
        assert np.allclose(pot.v, 8.0 * (G * G - b - 2 * c * x), rtol=1e-12, atol=1e-12)
        assert np.allclose(pot.r, x / 2)

    def test_too_coarse(self):
        with pytest.raises(GridTooCoarse):
            krein.potential_from_g(krein.KreinSolution(0.1, np.array([0, 0.3]), np.zeros(2)), 1.0)

    def test_nonuniform(self):
        with pytest.raises(ValueError):
            krein.potential_from_g(krein.KreinSolution(0.1, np.array([0, 0.3, 0.7]), np.zeros(3)), 1.0)

    def test_toy_potential(self):
        h, n = 1e-3, 300
        sol = krein.g_function(toy_table(h, n), range(n + 1))
        pot = krein.potential_from_g(sol, 1.0)
        assert np.max(np.abs(pot.v[1:-1] - toy_V0(pot.r[1:-1]))) <= 1e-4 * 6

    def test_origin_regime_matches_reference(self, xe2, morse):
        from kreinverse.refpot import pseudo_morse_eval
        table = hfun.build_h_table(xe2.model, 1e-9, 30)
        pot = krein.potential_from_g(krein.g_function(table, range(31)), xe2.C)
        ref = pseudo_morse_eval(morse, pot.r)
        assert np.max(np.abs(pot.v / ref - 1)) <= 1e-2


class TestKernels:
    def test_nobound_zero_at_rp0(self, toy):
        assert krein.gl_kernel_nobound(toy.model, 0.7, 0.0) == 0.0

    def test_nobound_symmetric(self, toy):
        a = krein.gl_kernel_nobound(toy.model, 0.7, 0.2)
        b = krein.gl_kernel_nobound(toy.model, 0.2, 0.7)
        assert a == pytest.approx(b, rel=1e-15)

    def test_nobound_toy(self, toy):
        assert krein.gl_kernel_nobound(toy.model, 1.0, 1.0) == pytest.approx(1.5 * (1 - math.exp(-2)), rel=1e-14)

    def test_nobound_table(self):
        table = toy_table(0.1, 10)
        assert krein.gl_kernel_nobound(table, 1.0, 1.0) == pytest.approx(1.5 * (1 - math.exp(-2)), rel=1e-14)
        with pytest.raises(OffGrid):
            krein.gl_kernel_nobound(table, 1.05, 0.0)

    def test_from_gamma_trivial(self):
        assert krein.kernel_from_gamma(hfun.HTable(0.1, np.zeros(10)), 0.3, 0.1) == 0.0
        assert krein.kernel_from_gamma(toy_table(0.1, 3), 0.3, 0.0) == 0.0

    def test_from_gamma_off_grid(self):
        with pytest.raises(OffGrid):
            krein.kernel_from_gamma(toy_table(0.1, 3), 0.2, 0.1)

    def test_route_equivalence(self):
        # V = 2C dK(r, r)/dr against 4C (G^2 - dG/dx) at x = 2r = 0.999
        h = 1e-3
        r0, dr = 0.4995, 1.5e-3
        table = toy_table(h, 340)
        k_minus = krein.kernel_from_gamma(table, r0 - dr, r0 - dr)
        k_plus = krein.kernel_from_gamma(table, r0 + dr, r0 + dr)
        v_eq6 = 2.0 * (k_plus - k_minus) / (2 * dr)
        sol = krein.g_function(table, [332, 333, 334])
        v_eq29 = krein.potential_from_g(krein.KreinSolution(h, sol.x[1:], sol.G[1:]), 1.0).v[1]
        assert v_eq6 == pytest.approx(v_eq29, rel=1e-4)
        assert v_eq29 == pytest.approx(toy_V0(r0), rel=1e-4)
