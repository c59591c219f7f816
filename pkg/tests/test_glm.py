import numpy as np
import pytest

from kreinverse import glm
from kreinverse.errors import (DegenerateGammas, DegenerateParameters, NoAsymptoticRegion,
                               NonPositiveDenominator, Overflow, TailTooShort)
from kreinverse.krein import PotentialCurve

H = 0.005


@pytest.fixture(scope="module")
def free():
    return PotentialCurve.free(30.0, H, 1.0)


@pytest.fixture(scope="module")
def one_state(free):
    state = glm.BoundStateSpec(1.0, 1e-3)
    pot, eig = glm.add_bound_state(free, state)
    return state, pot, eig


def bargmann_one_state(r, gamma, c):
    """Closed form of the one-state potential on the free base (C = 1)."""
    s, ch = np.sinh(gamma * r) / gamma, np.cosh(gamma * r)
    integ = (np.sinh(gamma * r) * ch / gamma - r) / (2 * gamma)
    d = 1 + c * integ
    return -2.0 * (2 * c * s * ch / d - (c * s * s / d) ** 2)


class TestTypes:
    def test_spec_validation(self):
        with pytest.raises(ValueError):
            glm.BoundStateSpec(0.0, 1.0)
        with pytest.raises(ValueError):
            glm.BoundStateSpec(1.0, -1.0)


class TestGridTools:
    def test_cumulative_cubic_exact(self):
        r = np.linspace(0, 2, 21)
        f = 1 - 2 * r + r ** 3
        assert np.allclose(glm.cumulative_integral(f, 0.1), r - r ** 2 + r ** 4 / 4, rtol=0, atol=1e-14)

    def test_tail_integral(self):
        r = np.linspace(0, 2, 21)
        assert np.allclose(glm.tail_integral(r ** 2, 0.1), (8 - r ** 3) / 3, atol=1e-14)

    def test_midpoints_cubic(self):
        r = np.linspace(0, 1, 11)
        u = r ** 3 - r
        mid = r[:-1] + 0.05
        assert np.allclose(glm.midpoint_values(u), mid ** 3 - mid, atol=1e-15)


class TestRegularSolution:
    @pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
    def test_free(self, gamma):
        pot = PotentialCurve.free(5.0 / gamma, 0.005 / gamma, 1.0)
        sol = glm.regular_solution(pot, gamma)
        exact = np.sinh(gamma * pot.r) / gamma
        assert np.allclose(sol.phi[1:], exact[1:], rtol=1e-8, atol=0)

    def test_origin(self, free):
        sol = glm.regular_solution(free, 1.0)
        assert sol.phi[0] == 0.0
        assert abs(sol.phi[1] / free.r[1] - 1) <= 1e-4

    def test_fourth_order(self):
        def phi_end(h):
            pot = PotentialCurve.from_function(lambda r: 2 * r * r - 3 * r, 2.0, h, 1.0)
            return glm.regular_solution(pot, 1.0).phi[-1]
        a, b, c = phi_end(0.1), phi_end(0.05), phi_end(0.025)
        assert (a - b) / (b - c) == pytest.approx(16.0, rel=0.1)

    def test_overflow(self):
        with pytest.raises(Overflow):
            glm.regular_solution(PotentialCurve.free(800.0, 0.5, 1.0), 1.0)

    def test_grid_must_start_at_zero(self):
        pot = PotentialCurve(np.linspace(1, 2, 11), np.zeros(11), 1.0)
        with pytest.raises(ValueError):
            glm.regular_solution(pot, 1.0)


class TestAdd:
    def test_closed_form(self, free, one_state):
        state, pot, _ = one_state
        exact = bargmann_one_state(free.r, state.gamma, state.norm_const)
        assert np.max(np.abs(pot.v - exact)) <= 1e-6 * np.max(np.abs(exact))

    @pytest.mark.parametrize("c", [1e-3, 0.3, 10.0])
    def test_norming(self, free, c):
        _, eig = glm.add_bound_state(free, glm.BoundStateSpec(1.0, c))
        total = glm.cumulative_integral(eig.phi ** 2, H)[-1]
        assert abs(c * total - 1) <= 1e-6

    def test_eigenfunction_regular(self, one_state):
        _, _, eig = one_state
        assert abs(eig.phi[1] / H - 1) <= 1e-4

    def test_zero_norm_identity(self, free):
        pot = PotentialCurve.from_function(lambda r: np.exp(-r), 20.0, H, 1.0)
        new, _ = glm.add_bound_state(pot, glm.BoundStateSpec(1.0, 0.0))
        assert np.array_equal(new.v, pot.v)

    def test_nonpositive_denominator(self):
        with pytest.raises(NonPositiveDenominator):
            glm._log_second_derivative_add(-1.0, np.ones(3), np.ones(3), np.array([0.0, 0.5, 2.0]))

    def test_new_level_present(self, one_state):
        _, pot, _ = one_state
        assert glm.bound_state_gammas(pot) == pytest.approx([1.0], rel=1e-6)


class TestDeterminant:
    s1 = glm.BoundStateSpec(1.0, 1e-3)
    s2 = glm.BoundStateSpec(0.5, 2e-2)

    def test_matches_sequential(self, free):
        det = glm.add_two_states_det(free, self.s1, self.s2)
        seq, _ = glm.add_states_sequential(free, [self.s1, self.s2])
        assert np.max(np.abs(det.v - seq.v)) <= 1e-6 * np.max(np.abs(seq.v))

    def test_order_independent(self, free):
        a = glm.add_two_states_det(free, self.s1, self.s2)
        b = glm.add_two_states_det(free, self.s2, self.s1)
        assert np.allclose(a.v, b.v, rtol=1e-12, atol=1e-12)

    def test_second_norm_zero(self, free):
        det = glm.add_two_states_det(free, self.s1, glm.BoundStateSpec(0.5, 0.0))
        one, _ = glm.add_bound_state(free, self.s1)
        assert np.allclose(det.v, one.v, rtol=1e-12, atol=1e-12)

    def test_degenerate(self, free):
        with pytest.raises(DegenerateGammas):
            glm.add_two_states_det(free, self.s1, glm.BoundStateSpec(1.0, 0.5))

    def test_factorization(self, free):
        # 1 + C2 int phi_1(i g2)^2, with phi_1 solving the one-state potential,
        # equals det / (1 + C1 I11) built from free solutions
        r = free.r
        g1, c1, g2, c2 = self.s1.gamma, self.s1.norm_const, self.s2.gamma, self.s2.norm_const
        i11 = (np.sinh(2 * g1 * r) / (2 * g1) - r) / (2 * g1 * g1)
        i22 = (np.sinh(2 * g2 * r) / (2 * g2) - r) / (2 * g2 * g2)
        i12 = (g1 * np.cosh(g1 * r) * np.sinh(g2 * r) - g2 * np.sinh(g1 * r) * np.cosh(g2 * r)) \
            / (g1 * g2 * (g1 * g1 - g2 * g2))
        det = (1 + c1 * i11) * (1 + c2 * i22) - c1 * c2 * i12 ** 2
        explicit = det / (1 + c1 * i11)
        pot1, _ = glm.add_bound_state(free, self.s1)
        ladder = 1 + c2 * glm.regular_solution(pot1, g2).integral
        sel = r <= 10
        assert np.allclose(ladder[sel], explicit[sel], rtol=1e-8, atol=0)


class TestRemove:
    def test_roundtrip_free(self, one_state):
        _, pot, _ = one_state
        _, eig = glm.ground_state(pot)
        back = glm.remove_top_bound_state(pot, eig)
        assert np.max(np.abs(back.v)) <= 1e-5 * np.max(np.abs(pot.v))

    def test_roundtrip_with_returned_eigenfunction(self, one_state):
        _, pot, eig = one_state
        back = glm.remove_top_bound_state(pot, eig)
        assert np.max(np.abs(back.v)) <= 1e-5 * np.max(np.abs(pot.v))

    def test_roundtrip_nonfree_base(self):
        base = PotentialCurve.from_function(lambda r: 0.5 * np.exp(-r) * (1 - r), 30.0, H, 1.0)
        assert glm.bound_state_gammas(base) == []
        pot, _ = glm.add_bound_state(base, glm.BoundStateSpec(0.8, 0.05))
        _, eig = glm.ground_state(pot)
        back = glm.remove_top_bound_state(pot, eig)
        assert np.max(np.abs(back.v - base.v)) <= 1e-5 * np.max(np.abs(base.v))

    def test_scale_invariant(self, one_state):
        _, pot, _ = one_state
        _, eig = glm.ground_state(pot)
        a = glm.remove_top_bound_state(pot, eig)
        b = glm.remove_top_bound_state(pot, eig.scaled(7.0))
        assert np.allclose(a.v, b.v, rtol=1e-12, atol=1e-12)

    def test_tail_too_short(self, one_state):
        _, pot, _ = one_state
        short = PotentialCurve(pot.r[:600], pot.v[:600], 1.0)
        _, eig = glm.ground_state(pot)
        cut = glm.RegularSolution(short.r, eig.phi[:600], eig.dphi[:600], eig.energy_param)
        with pytest.raises(TailTooShort):
            glm.remove_top_bound_state(short, cut)

    def test_three_level_cascade(self):
        base = PotentialCurve.free(40.0, 0.01, 1.0)
        states = [glm.BoundStateSpec(0.5, 0.05), glm.BoundStateSpec(1.0, 0.5), glm.BoundStateSpec(1.5, 2.0)]
        pot, _ = glm.add_states_sequential(base, states)
        assert glm.bound_state_gammas(pot) == pytest.approx([1.5, 1.0, 0.5], rel=1e-5)
        depths = [-pot.v.min()]
        for expected in ([1.0, 0.5], [0.5], []):
            _, eig = glm.ground_state(pot)
            pot = glm.remove_top_bound_state(pot, eig)
            depths.append(-pot.v.min())
            assert glm.bound_state_gammas(pot) == pytest.approx(expected, rel=1e-5)
        assert all(a > b for a, b in zip(depths, depths[1:]))
        assert np.max(np.abs(pot.v)) <= 1e-4


class TestJostModulus:
    K = np.linspace(0.3, 3.0, 10)

    def test_free(self, free):
        assert np.allclose(glm.jost_modulus_forward(free, self.K), 1.0, rtol=1e-12)

    def test_preserved_by_add(self):
        base = PotentialCurve.from_function(lambda r: 0.5 * np.exp(-2 * r), 60.0, H, 1.0)
        before = glm.jost_modulus_forward(base, self.K)
        pot, _ = glm.add_bound_state(base, glm.BoundStateSpec(1.0, 1.0))
        after = glm.jost_modulus_forward(pot, self.K)
        assert np.max(np.abs(after - before)) <= 1e-3

    def test_toy_loop(self):
        # g(k) = 3 / (k^2 + 1) from the closed-form no-bound-state toy potential
        pot = PotentialCurve.from_function(
            lambda r: -96.0 / (3 * np.exp(2 * r) + np.exp(-2 * r)) ** 2, 20.0, 0.002, 1.0)
        F = glm.jost_modulus_forward(pot, self.K)
        g = 1 / F ** 2 - 1
        assert np.allclose(g, 3 / (self.K ** 2 + 1), rtol=1e-2)

    def test_no_asymptotic_region(self):
        pot = PotentialCurve.from_function(lambda r: -np.exp(-0.1 * r), 20.0, 0.01, 1.0)
        with pytest.raises(NoAsymptoticRegion):
            glm.jost_modulus_forward(pot, self.K)

    def test_positive_k(self, free):
        with pytest.raises(ValueError):
            glm.jost_modulus_forward(free, [0.0, 1.0])


@pytest.fixture(scope="module")
def level():
    base = PotentialCurve.free(40.0, H, 1.0)
    pot, _ = glm.add_bound_state(base, glm.BoundStateSpec(1.0, 1.0))
    return pot


class TestBargmann:
    def test_degenerate(self, level):
        with pytest.raises(DegenerateParameters):
            glm.bargmann_deform(level, 1.0, 1.0)

    def test_deformation_deletes_level(self, level):
        # the Wronskian factor alone removes -b^2 and adds nothing
        assert glm.bound_state_gammas(glm.bargmann_deform(level, 0.8, 1.0)) == []

    def test_replace_level(self, level):
        new = glm.bargmann_replace_level(level, 0.8, 1.0, 1.0)
        (g,) = glm.bound_state_gammas(new)
        assert g * g == pytest.approx(0.64, rel=1e-3)

    def test_modulus_factor(self, level):
        k = np.linspace(0.3, 3.0, 10)
        before = glm.jost_modulus_forward(level, k)
        after = glm.jost_modulus_forward(glm.bargmann_deform(level, 0.8, 1.0), k)
        assert np.allclose(after / before, np.abs((k - 0.8j) / (k + 1j)), rtol=1e-6)

    def test_no_asymptotic_region(self):
        pot = PotentialCurve.from_function(lambda r: -np.exp(-0.1 * r), 20.0, 0.01, 1.0)
        with pytest.raises(NoAsymptoticRegion):
            glm.bargmann_deform(pot, 0.8, 1.0)


class TestAsymptotics:
    def test_single_state(self, free, one_state):
        state, pot, _ = one_state
        rep = glm.check_asymptotics(pot, free, [state])
        assert 0.9 <= rep.slope_ratio <= 1.1
        assert abs(rep.rate_ratio - 1) <= 0.05

    def test_no_states(self, free):
        rep = glm.check_asymptotics(free, free, [])
        assert rep.slope == 0 and rep.rate == 0

    def test_grid_mismatch(self, free):
        with pytest.raises(ValueError):
            glm.check_asymptotics(free, PotentialCurve.free(10.0, H, 1.0), [])


class TestShooting:
    def test_free_has_none(self, free):
        assert glm.bound_state_gammas(free) == []

    def test_norming_constant(self, free):
        pot, _ = glm.add_bound_state(free, glm.BoundStateSpec(1.0, 0.25))
        g, eig = glm.ground_state(pot)
        assert glm.norming_constant(eig) == pytest.approx(0.25, rel=1e-5)
