import itertools

import numpy as np
import pytest
from fractions import Fraction

from irmlab import diagrams as dg
from irmlab.diagrams import (
    BudgetError,
    GluingError,
    PowerCache,
    RibbonGluing,
    b_prime,
    catalan_corrections,
    chebyshev_moment_lhs,
    chebyshev_moment_rhs,
    cumulant_lhs,
    cumulant_rhs,
    diagram_envelope,
    enumerate_gluings,
    F_direct,
    F_parity_sum,
    frak_F,
    glue,
    gluing_count,
    okounkov_contract,
    ribbon_moment_lhs,
    ribbon_moment_rhs,
    skeleton_sum,
    verify_expansions,
    wick_moment,
)
from irmlab.profiles import sinkhorn_symmetric, uniform_profile, VarianceProfile


def nonuniform_profile(N, seed=0):
    rng = np.random.default_rng(seed)
    M = rng.uniform(0.5, 1.5, (N, N))
    return VarianceProfile(sinkhorn_symmetric(0.5 * (M + M.T)), kind="square").validate()


def spike(N, val=1.3, seed=None):
    if seed is None:
        A = np.zeros((N, N))
        A[0, 0] = val
        return A
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(N)
    u /= np.linalg.norm(u)
    return val * np.outer(u, u)


class TestGlue:
    def test_two_gon_opposite_is_sphere(self):
        g = RibbonGluing((2,), frozenset(), ((0, 1),), ("opp",), 2)
        gc = glue(g)
        assert gc.n_vertices == 2 and gc.n_edges == 1
        assert gc.euler_characteristic == 2  # V - E + F = 2 - 1 + 1

    def test_four_gon_noncrossing_planar(self):
        g = RibbonGluing((4,), frozenset(), ((0, 1), (2, 3)), ("opp", "opp"), 2)
        gc = glue(g)
        assert gc.euler_characteristic == 2
        assert gc.genus == 0

    def test_four_gon_crossing_torus(self):
        g = RibbonGluing((4,), frozenset(), ((0, 2), (1, 3)), ("opp", "opp"), 2)
        gc = glue(g)
        assert gc.euler_characteristic == 0
        assert gc.genus == 1

    def test_overlapping_pairs_rejected(self):
        bad = RibbonGluing((4,), frozenset(), ((0, 1), (1, 2)), ("opp", "opp"), 2)
        with pytest.raises(GluingError):
            glue(bad)

    def test_same_direction_rejected_for_beta2(self):
        bad = RibbonGluing((2,), frozenset(), ((0, 1),), ("same",), 2)
        with pytest.raises(GluingError):
            glue(bad)


class TestContract:
    def test_catalan_gluing_is_trivial(self):
        # fully non-crossing opposite gluing of the 6-gon collapses entirely
        g = RibbonGluing((6,), frozenset(), ((0, 1), (2, 3), (4, 5)),
                         ("opp",) * 3, 2)
        diagram, info = okounkov_contract(glue(g))
        assert info.had_tree
        assert diagram.trivial_faces == (0,)
        assert diagram.n_vertices == 0

    def test_crossing_four_gon_two_loops(self):
        g = RibbonGluing((4,), frozenset(), ((0, 2), (1, 3)), ("opp", "opp"), 2)
        diagram, info = okounkov_contract(glue(g))
        assert not info.had_tree
        assert diagram.n_vertices == 1
        assert len(diagram.edges) == 2
        assert all(e[1] == e[2] for e in diagram.edges)  # both loops
        assert sum(diagram.edges[c][3] for c in diagram.face_boundaries[0]) == 4

    def test_weight_conservation_everywhere(self):
        for gl in enumerate_gluings((6,), 1):
            diagram, info = okounkov_contract(glue(gl))
            assert info.weight_check

    def test_euler_characteristic_preserved(self):
        # V - E is invariant under both collapse steps
        for gl in enumerate_gluings((6,), 2):
            gc = glue(gl)
            diagram, info = okounkov_contract(gc)
            if info.had_tree:
                continue
            chi_before = gc.euler_characteristic
            chi_after = diagram.n_vertices - len(diagram.edges) + len(diagram.face_boundaries)
            assert chi_before == chi_after

    def test_degree_constraints_on_skeletons(self):
        for gl in enumerate_gluings((6,), 1):
            diagram, info = okounkov_contract(glue(gl))
            if info.had_tree:
                continue
            deg = diagram.degrees()
            marked = set(m for m in diagram.marks if m >= 0)
            for v in range(diagram.n_vertices):
                assert deg[v] >= (2 if v in marked else 3)


class TestEnumeration:
    def test_pairing_counts_beta2(self):
        assert gluing_count((4,), 2, False) == 3

    def test_orientation_doubling_beta1(self):
        gls = list(enumerate_gluings((4,), 1))
        assert len(gls) == 12  # 3 pairings x 2^2 orientations

    def test_open_arrangement(self):
        gls = [g for g in enumerate_gluings((2,), 2, allow_open=True)
               if len(g.open_edges) == 2]
        assert len(gls) == 1 and gls[0].pairing == ()

    def test_budget_guard(self):
        with pytest.raises(BudgetError):
            list(enumerate_gluings((20,), 1))


class TestDiagramFunctions:
    def test_trivial_face_delta(self):
        g = RibbonGluing((4,), frozenset(), ((0, 1), (2, 3)), ("opp", "opp"), 2)
        diagram, _ = okounkov_contract(glue(g))
        powers = PowerCache(uniform_profile(3))
        assert frak_F(diagram, [0], powers) == 3.0
        assert frak_F(diagram, [2], powers) == 0.0

    def test_single_loop_closed_form(self):
        # crosscap at weight sum 2: sum_x p_1(x, x) = Tr P
        g = RibbonGluing((2,), frozenset(), ((0, 1),), ("same",), 1)
        diagram, _ = okounkov_contract(glue(g))
        prof = nonuniform_profile(4)
        powers = PowerCache(prof)
        val = frak_F(diagram, [2], powers)
        assert val == pytest.approx(np.trace(prof.variances))
        # weight sum 4 forces w = 2: Tr P^2
        val = frak_F(diagram, [4], powers)
        assert val == pytest.approx(np.trace(prof.variances @ prof.variances))

    def test_F_zero_when_face_budget_zero(self):
        g = RibbonGluing((2,), frozenset(), ((0, 1),), ("same",), 1)
        diagram, _ = okounkov_contract(glue(g))
        powers = PowerCache(uniform_profile(3))
        assert F_direct(diagram, [0], powers) == 0.0

    def test_F_paths_agree_random_cases(self):
        rng = np.random.default_rng(5)
        prof = nonuniform_profile(3, seed=2)
        A = spike(3, 0.9, seed=3)
        powers = PowerCache(prof, A)
        count = 0
        pool = []
        for gl in enumerate_gluings((4,), 1, allow_open=True):
            diagram, info = okounkov_contract(glue(gl))
            if info.had_tree or diagram.trivial_faces:
                continue
            pool.append(diagram)
        for diagram in pool:
            for n in (4, 6, 7, 8):
                a = F_direct(diagram, [n], powers)
                b = F_parity_sum(diagram, [n], powers)
                assert abs(a - b) <= 1e-10 * max(1.0, abs(a))
                count += 1
        assert count >= 20

    def test_uniform_profile_reference(self):
        # with sigma^2 = 1/N every interior factor is 1/N: F equals the
        # mean-field reference computed directly from the weight counts
        g = RibbonGluing((4,), frozenset(), ((0, 2), (1, 3)), ("opp", "opp"), 2)
        diagram, _ = okounkov_contract(glue(g))
        N = 5
        powers = PowerCache(uniform_profile(N))
        val = frak_F(diagram, [4], powers)
        assert val == pytest.approx(N * (1.0 / N) ** 2)


class TestCatalanCorrections:
    def test_b2_zero(self):
        assert catalan_corrections(2) == 0

    def test_b4_one(self):
        assert catalan_corrections(4) == 1

    def test_odd_zero(self):
        assert catalan_corrections(5) == 0

    def test_b0(self):
        assert catalan_corrections(0) == Fraction(-1, 2)

    def test_b_prime(self):
        assert b_prime(0) == Fraction(-1, 2)
        assert b_prime(2) == 1
        assert b_prime(4) == 0


class TestWickOracle:
    def test_centered_first_moment(self):
        assert wick_moment([1], uniform_profile(3), None, 1) == 0.0

    def test_trace_square_real(self):
        # E Tr H^2 = sum_{x != y} s2 + 2 sum_x s2_xx = 1 + 2 = 3 at N = 2
        assert wick_moment([2], uniform_profile(2), None, 1) == pytest.approx(3.0)

    def test_trace_square_complex(self):
        assert wick_moment([2], uniform_profile(2), None, 2) == pytest.approx(2.0)

    def test_deformation_only(self):
        A = spike(3, 0.7)
        assert wick_moment([1], uniform_profile(3), A, 1) == pytest.approx(0.7)
        # E Tr X^3 = a^3 + 3 a E[(H^2)_00] with E[(H^2)_00] = 2/3 + 2/3
        assert wick_moment([3], uniform_profile(3), A, 1) == pytest.approx(
            0.7 ** 3 + 3 * 0.7 * (2 / 3 + 2 / 3))

    def test_goe_quartic_closed_form(self):
        # E Tr H^4 = 2N + 5 + 5/N for the uniform real profile
        for N in (2, 3, 4):
            got = wick_moment([4], uniform_profile(N), None, 1)
            assert got == pytest.approx(2 * N + 5 + 5.0 / N)

    def test_budget_guard(self):
        with pytest.raises(BudgetError):
            wick_moment([12], uniform_profile(5), None, 1)


class TestRibbonExpansion:
    @pytest.mark.parametrize("beta", [1, 2])
    def test_single_trace_uniform(self, beta):
        prof = uniform_profile(3)
        for m in range(1, 7):
            lhs = ribbon_moment_lhs([m], prof, None, beta)
            rhs = ribbon_moment_rhs([m], prof, None, beta)
            assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))

    @pytest.mark.parametrize("beta", [1, 2])
    def test_single_trace_nonuniform_deformed(self, beta):
        prof = nonuniform_profile(3, seed=7)
        A = spike(3, 1.1, seed=11)
        for m in range(1, 7):
            lhs = ribbon_moment_lhs([m], prof, A, beta)
            rhs = ribbon_moment_rhs([m], prof, A, beta)
            assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))

    def test_two_traces(self):
        prof = nonuniform_profile(3, seed=1)
        for ms in ([2, 2], [2, 4], [3, 3]):
            lhs = ribbon_moment_lhs(ms, prof, None, 1)
            rhs = ribbon_moment_rhs(ms, prof, None, 1)
            assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))

    def test_m_zero_halving(self):
        prof = uniform_profile(4)
        assert ribbon_moment_lhs([0], prof, None, 1) == pytest.approx(2.0)
        assert ribbon_moment_rhs([0], prof, None, 1) == pytest.approx(2.0)


class TestChebyshevExpansion:
    def test_u2_is_trace_minus_n(self):
        prof = uniform_profile(3)
        lhs = chebyshev_moment_lhs([2], prof, None, 1)
        assert lhs == pytest.approx(wick_moment([2], prof, None, 1) - 3.0)
        rhs = chebyshev_moment_rhs([2], prof, None, 1)
        assert rhs == pytest.approx(np.trace(prof.variances))
        assert lhs == pytest.approx(rhs)

    @pytest.mark.parametrize("beta", [1, 2])
    def test_deformed_grid(self, beta):
        prof = nonuniform_profile(3, seed=4)
        A = spike(3, 0.8, seed=5)
        for n in range(1, 7):
            lhs = chebyshev_moment_lhs([n], prof, A, beta)
            rhs = chebyshev_moment_rhs([n], prof, A, beta)
            assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))

    def test_zero_index(self):
        prof = uniform_profile(4)
        assert chebyshev_moment_lhs([0], prof, None, 1) == 4.0
        assert chebyshev_moment_rhs([0], prof, None, 1) == 4.0


class TestCumulants:
    @pytest.mark.parametrize("beta", [1, 2])
    @pytest.mark.parametrize("ns", [(2, 2), (3, 3)])
    def test_covariance_equals_connected(self, beta, ns):
        prof = nonuniform_profile(3, seed=9)
        lhs = cumulant_lhs(list(ns), prof, None, beta)
        rhs = cumulant_rhs(list(ns), prof, None, beta)
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))

    def test_parity_vanishing(self):
        # odd total weight with no deformation: no pairings at all
        prof = uniform_profile(3)
        assert chebyshev_moment_lhs([3], prof, None, 1) == pytest.approx(0.0, abs=1e-12)
        assert chebyshev_moment_rhs([3], prof, None, 1) == pytest.approx(0.0, abs=1e-12)


class TestEnvelope:
    def test_prop_bound_on_closed_diagrams(self):
        # certified uniform profile: t_N = 1, gamma = 1
        prof = uniform_profile(4)
        powers = PowerCache(prof)
        for gl in enumerate_gluings((6,), 1):
            diagram, info = okounkov_contract(glue(gl))
            if info.had_tree or not diagram.is_connected():
                continue
            n = 6
            val = abs(F_direct(diagram, [n], powers))
            assert val <= diagram_envelope(diagram, n, 1.0, 1, 4) * (1 + 1e-9)


class TestVerifyReport:
    def test_report_shape(self):
        rep = verify_expansions([2, 2], uniform_profile(3), None, 1)
        assert rep["pass"]
        assert set(rep["checks"]) == {"ribbon", "chebyshev", "cumulant"}

    def test_single_trace_report(self):
        rep = verify_expansions([4], uniform_profile(2), spike(2, 0.5), 2)
        assert rep["pass"]
        assert "cumulant" not in rep["checks"]
