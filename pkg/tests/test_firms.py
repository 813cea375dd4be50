import numpy as np
import pytest

from minskysim import (FAILED, PONZI, VIABLE, FeedbackParams, ParameterError,
                       ResilienceSpec, classify_firms, interest_from_failures,
                       ponzi_count, sample_resiliences)


def brute_force_ponzi_count(table, i):
    return int(np.count_nonzero(table.resilience < i))


class TestSampleResiliences:
    def test_single_firm_rank_mode_gives_k(self):
        spec = ResilienceSpec(k=0.0015, beta=1.3, n_total=1)
        table = sample_resiliences(spec)
        assert table.resilience[0] == pytest.approx(0.0015)

    def test_rank_mode_max_resilience_is_k_ntot_pow(self):
        spec = ResilienceSpec(k=0.002, beta=1.7, n_total=5000)
        table = sample_resiliences(spec)
        assert table.resilience.max() == pytest.approx(0.002 * 5000 ** (1 / 1.7))
        assert table.resilience.max() == pytest.approx(spec.r_max)

    def test_rank_mode_matches_formula_everywhere(self):
        spec = ResilienceSpec(k=0.01, beta=2.0, n_total=100)
        table = sample_resiliences(spec)
        ranks = np.arange(1, 101)
        np.testing.assert_allclose(table.resilience, 0.01 * ranks ** 0.5)

    def test_count_below_rate_matches_floor_formula(self):
        # oracle: brute-force count over ranks
        spec = ResilienceSpec(k=0.0015, beta=1.3, n_total=2000)
        table = sample_resiliences(spec)
        for i in (0.0005, 0.002, 0.004, 0.01, 0.05):
            expected = min(max(int((i / spec.k) ** spec.beta), 0), spec.n_total)
            assert abs(brute_force_ponzi_count(table, i) - expected) <= 1

    def test_iid_mode_reproducible_and_respects_cdf(self):
        spec = ResilienceSpec(k=0.001, beta=1.5, n_total=20000,
                              mode="iid_pareto", seed=42)
        t1, t2 = sample_resiliences(spec), sample_resiliences(spec)
        np.testing.assert_array_equal(t1.resilience, t2.resilience)
        # empirical CDF at a few quantiles vs (i/r_max)^beta
        for q in (0.2, 0.5, 0.8):
            i = q * spec.r_max
            frac = np.mean(t1.resilience < i)
            assert frac == pytest.approx((i / spec.r_max) ** spec.beta, abs=0.01)

    @pytest.mark.parametrize("bad", [
        dict(k=-1.0, beta=1.3, n_total=10),
        dict(k=0.001, beta=0.0, n_total=10),
        dict(k=0.001, beta=1.3, n_total=0),
    ])
    def test_bad_parameters_rejected(self, bad):
        with pytest.raises(ParameterError):
            ResilienceSpec(**bad)


class TestClassifyFirms:
    def test_viable_and_ponzi_with_distances(self):
        spec = ResilienceSpec(k=0.01, beta=1.0, n_total=5)
        table = sample_resiliences(spec)  # r = 0.01..0.05
        table = classify_firms(table, 0.02)
        assert table.status[0] == PONZI  # r=0.01 < 0.02
        assert table.distance_to_ponzi[0] == pytest.approx(-0.01)
        assert table.status[4] == VIABLE  # r=0.05 > 0.02
        assert table.distance_to_ponzi[4] == pytest.approx(0.03)

    def test_lowering_rate_restores_viable(self):
        spec = ResilienceSpec(k=0.01, beta=1.0, n_total=5)
        table = classify_firms(sample_resiliences(spec), 0.02)
        assert table.status[0] == PONZI
        table = classify_firms(table, 0.005)
        assert table.status[0] == VIABLE

    def test_failed_is_absorbing_under_reclassification(self):
        spec = ResilienceSpec(k=0.01, beta=1.0, n_total=5)
        table = classify_firms(sample_resiliences(spec), 0.02)
        table = table.with_status([0], FAILED)
        table = classify_firms(table, 0.001)  # below every resilience
        assert table.status[0] == FAILED

    def test_idempotent_at_fixed_rate(self):
        spec = ResilienceSpec(k=0.003, beta=1.4, n_total=50)
        once = classify_firms(sample_resiliences(spec), 0.01)
        twice = classify_firms(once, 0.01)
        np.testing.assert_array_equal(once.status, twice.status)

    def test_snapshots_are_immutable(self):
        table = sample_resiliences(ResilienceSpec(k=0.01, beta=1.0, n_total=3))
        with pytest.raises(ValueError):
            table.status[0] = PONZI

    def test_minsky_labels_split(self):
        spec = ResilienceSpec(k=0.01, beta=1.0, n_total=5)
        table = sample_resiliences(spec)
        labels = table.minsky_labels(0.02)  # margin 0.01
        assert labels[0] == "ponzi"        # DP = -0.01
        assert labels[2] == "speculative"  # DP = +0.01 <= margin
        assert labels[4] == "hedge"        # DP = +0.03 > margin


class TestPonziCount:
    def test_rate_equal_scale_gives_one(self):
        assert ponzi_count(0.0015, 0.0015, 1.3) == pytest.approx(1.0)
        assert ponzi_count(0.5, 0.5, 7.7) == pytest.approx(1.0)

    def test_direct_evaluation(self):
        assert ponzi_count(0.004, 0.0015, 1.3) == pytest.approx(3.5789806, rel=1e-6)

    def test_agrees_with_table_census_within_one(self):
        spec = ResilienceSpec(k=0.0015, beta=1.3, n_total=500)
        table = sample_resiliences(spec)
        for i in np.geomspace(0.001, spec.r_max, 25):
            analytic = min(ponzi_count(i, spec.k, spec.beta), spec.n_total)
            assert abs(brute_force_ponzi_count(table, i) - analytic) <= 1

    def test_monotone_and_saturates_at_rmax(self):
        spec = ResilienceSpec(k=0.0015, beta=1.3, n_total=300)
        grid = np.geomspace(1e-4, spec.r_max, 40)
        vals = [ponzi_count(i, spec.k, spec.beta) for i in grid]
        assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))
        assert vals[-1] == pytest.approx(spec.n_total, rel=1e-9)


class TestInterestFromFailures:
    def test_single_failure_returns_scale(self):
        assert interest_from_failures(1, FeedbackParams(0.003, 0.75)) == 0.003

    def test_reference_point_14_failures(self):
        i = interest_from_failures(14, FeedbackParams(0.003, 0.75))
        assert i == pytest.approx(0.0217129, rel=1e-5)
        assert abs(i - 0.021) < 1e-3

    def test_alpha_zero_disables_feedback(self):
        p = FeedbackParams(0.003, 0.0)
        for n in (1, 5, 1000):
            assert interest_from_failures(n, p) == 0.003

    def test_zero_failures_returns_baseline_even_countercyclical(self):
        assert interest_from_failures(0, FeedbackParams(0.01, -0.5)) == 0.01

    def test_monotonicity_by_sign_of_alpha(self):
        ns = [1, 2, 5, 20, 100]
        up = [interest_from_failures(n, FeedbackParams(0.01, 0.6)) for n in ns]
        down = [interest_from_failures(n, FeedbackParams(0.01, -0.6)) for n in ns]
        assert all(a < b for a, b in zip(up, up[1:]))
        assert all(a > b for a, b in zip(down, down[1:]))
