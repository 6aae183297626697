import math

import numpy as np
import pytest

from irmlab import edgestats, ensembles, profiles
from irmlab.edgestats import (
    EdgeStatError,
    bbp_test,
    kolmogorov_sf,
    ks_2sample,
    ks_statistic,
    lift_adjacency,
    lift_spectrum_check,
    random_edge_signs,
    rescale_edge,
    spectrum,
    tail_estimate,
    tails_compatible,
    universality_test,
    wilson_interval,
)
from irmlab.profiles import block_wegner_profile, random_regular_adjacency, uniform_profile


class TestSpectrum:
    def test_diagonal(self):
        assert np.allclose(spectrum(np.diag([1.0, 2.0, 3.0])), [3, 2, 1])

    def test_two_by_two(self):
        X = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert np.allclose(spectrum(X), [1, -1])

    def test_residual_check_runs(self):
        W = ensembles.sample_wigner(100, 1, 0) / math.sqrt(100)
        vals = spectrum(W, check_residual=True)
        assert vals[0] >= vals[-1]

    def test_non_hermitian_rejected(self):
        with pytest.raises(EdgeStatError):
            spectrum(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestRescale:
    def test_affine_order_preserving(self):
        lam = np.array([[2.1, 2.0], [1.9, 1.8]])
        r = rescale_edge(lam, 64)
        assert np.argmax(r[0]) == np.argmax(lam[0])

    def test_wigner_edge_location(self):
        assert rescale_edge(np.array([2.0]), 27)[0] == 0.0

    def test_wishart_edges(self):
        lamp = (1 + math.sqrt(0.25)) ** 2
        assert rescale_edge(np.array([lamp]), 27, model="wishart", alpha=0.25)[0] == pytest.approx(0.0)


class TestKS:
    def test_statistic_identical_samples(self):
        a = np.arange(10.0)
        assert ks_statistic(a, a) == 0.0

    def test_statistic_disjoint(self):
        assert ks_statistic(np.zeros(5), np.ones(5)) == 1.0

    def test_kolmogorov_tail_values(self):
        # Q(1.36) ~ 0.049: the classical 5% critical point
        assert kolmogorov_sf(1.36) == pytest.approx(0.049, abs=0.002)
        assert kolmogorov_sf(0.0) == 1.0

    def test_same_law_p_value_distribution(self):
        rng = np.random.default_rng(0)
        ps = []
        for r in range(60):
            a = rng.standard_normal(400)
            b = rng.standard_normal(400)
            _, p = ks_2sample(a, b, jitter_seed=r)
            ps.append(p)
        assert np.mean(np.array(ps) < 0.01) <= 0.1
        assert np.median(ps) > 0.2

    def test_shifted_law_detected(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal(800)
        b = rng.standard_normal(800) + 0.5
        _, p = ks_2sample(a, b, jitter_seed=0)
        assert p < 1e-6

    def test_ties_handled(self):
        # identical discrete samples: jitter randomizes the within-tie order,
        # so the p-value is generic rather than degenerate -- no rejection
        a = np.repeat([0.0, 1.0], 200)
        b = np.repeat([0.0, 1.0], 200)
        d, p = ks_2sample(a, b, jitter_seed=3)
        assert d < 0.2 and p > 0.01


class TestUniversality:
    def test_self_test_no_rejection(self):
        base = ensembles.goe_reference_spec(60)
        rep = universality_test(base, base, k=2, replicas=150, seed=11)
        assert not rep.rejected
        assert len(rep.p_values) == 2

    def test_blockdiag_rejected(self):
        N = 80
        prof = block_wegner_profile(2, N // 2, 0.0)
        test = ensembles.EnsembleSpec(profile=prof)
        rep = universality_test(test, ensembles.goe_reference_spec(N),
                                k=1, replicas=400, seed=5)
        assert rep.rejected and rep.p_values[0] < 1e-3

    def test_low_replicas_refused(self):
        base = ensembles.goe_reference_spec(30)
        with pytest.raises(EdgeStatError):
            universality_test(base, base, replicas=50)

    def test_mismatched_sizes_refused(self):
        with pytest.raises(EdgeStatError):
            universality_test(ensembles.goe_reference_spec(30),
                              ensembles.goe_reference_spec(40), replicas=100)

    def test_deterministic_given_seed(self):
        base = ensembles.goe_reference_spec(40)
        r1 = universality_test(base, base, k=1, replicas=120, seed=3)
        r2 = universality_test(base, base, k=1, replicas=120, seed=3)
        assert r1.dumps() == r2.dumps()


class TestBBP:
    def test_rank_zero_equivalent(self):
        prof = uniform_profile(50)
        rep = bbp_test(prof, [], replicas=120, seed=2)
        assert rep.k == 2

    def test_tau_cap(self):
        with pytest.raises(EdgeStatError):
            bbp_test(uniform_profile(30), [9.0], replicas=120)

    def test_deep_subcritical_spike_invisible(self):
        # tau = -5: the spike eigenvalue sits in the bulk and the top edge is
        # indistinguishable from the undeformed baseline
        N = 100
        deform = ensembles.Deformation(taus=(-5.0,))
        spiked = ensembles.EnsembleSpec(profile=uniform_profile(N), deformation=deform)
        plain = ensembles.goe_reference_spec(N)
        rep = universality_test(spiked, plain, k=1, replicas=300, seed=21)
        assert rep.p_values[0] > 0.01


class TestTails:
    def test_survival_bounds_and_monotone(self):
        spec = ensembles.goe_reference_spec(40)
        table = tail_estimate(spec, [1.0, 2.0, 4.0], replicas=200, seed=1)
        surv = [r["survival"] for r in table["rows"]]
        assert all(0.0 <= s <= 1.0 for s in surv)
        assert surv[0] >= surv[1] >= surv[2]

    def test_wilson_interval_basic(self):
        lo, hi = wilson_interval(5, 100)
        assert 0.0 < lo < 0.05 < hi < 0.15
        assert wilson_interval(0, 50)[0] == 0.0

    def test_compatibility_of_same_law(self):
        spec = ensembles.goe_reference_spec(40)
        a = tail_estimate(spec, [1.0, 2.0], replicas=200, seed=1)
        b = tail_estimate(spec, [1.0, 2.0], replicas=200, seed=99)
        assert tails_compatible(a, b)


class TestLift:
    def test_all_positive_signs_doubles_spectrum(self):
        G = random_regular_adjacency(12, 4, seed=0)
        S = np.where(G > 0, 1.0, 0.0)
        lift = lift_adjacency(G, S)
        lam_lift = np.sort(np.linalg.eigvalsh(lift))
        lam_g = np.sort(np.linalg.eigvalsh(G))
        assert np.allclose(lam_lift, np.sort(np.concatenate([lam_g, lam_g])))

    def test_negative_signs_cycle(self):
        N = 6
        G = np.zeros((N, N))
        for i in range(N):
            G[i, (i + 1) % N] = G[(i + 1) % N, i] = 1
        S = -np.where(G > 0, 1.0, 0.0)
        res = lift_spectrum_check(G, S, tol=1e-10)
        assert res["pass"]

    def test_random_signs_c6(self):
        N = 6
        G = np.zeros((N, N))
        for i in range(N):
            G[i, (i + 1) % N] = G[(i + 1) % N, i] = 1
        S = random_edge_signs(G, seed=4)
        res = lift_spectrum_check(G, S, tol=1e-10)
        assert res["pass"] and res["trace_identity"]

    def test_sign_support_mismatch_rejected(self):
        G = random_regular_adjacency(8, 2, seed=1)
        S = np.zeros_like(G)
        with pytest.raises(EdgeStatError):
            lift_adjacency(G, S)

    @pytest.mark.parametrize("d", [2, 4, 8])
    def test_regular_families(self, d):
        for seed in range(3):
            G = random_regular_adjacency(16, d, seed=seed)
            S = random_edge_signs(G, seed=seed + 100)
            assert lift_spectrum_check(G, S)["pass"]
