import math

import numpy as np
import pytest

from minskysim import (AcceleratorParams, DegenerateParametersError,
                       TerminationReason, accelerator_fixed_point,
                       accelerator_stability, closed_form_accelerator,
                       iterate_accelerator, ponzi_count, step_accelerator)

STABLE = AcceleratorParams(i0=0.004, k=0.0015, alpha=0.5, beta=1.3)
UNSTABLE = AcceleratorParams(i0=0.003, k=0.005, alpha=0.75, beta=1.8)


class TestStepAccelerator:
    def test_stationary_at_fixed_point(self):
        n_fix, i_fix = accelerator_fixed_point(STABLE)
        i_next, n_next = step_accelerator(n_fix, STABLE)
        assert i_next == pytest.approx(i_fix, rel=1e-12)
        assert n_next == pytest.approx(n_fix, rel=1e-12)

    def test_single_step_hand_value(self):
        # N1 = ((i0 * 2^0.5) / k)^beta, cross-checked against closed form t=1
        i1, n1 = step_accelerator(2.0, STABLE)
        assert i1 == pytest.approx(0.004 * 2 ** 0.5, rel=1e-12)
        assert n1 == pytest.approx((0.004 * 2 ** 0.5 / 0.0015) ** 1.3, rel=1e-12)
        n1_cf, i1_cf = closed_form_accelerator(STABLE, 2.0, 1)
        assert n1 == pytest.approx(n1_cf, rel=1e-12)
        assert i1 == pytest.approx(i1_cf, rel=1e-12)

    def test_negative_alpha_pulls_down_above_fixed_point(self):
        p = AcceleratorParams(i0=0.004, k=0.0015, alpha=-0.4, beta=1.3)
        n_fix, _ = accelerator_fixed_point(p)
        for n0 in (n_fix * 1.5, n_fix * 4):
            _, n_next = step_accelerator(n0, p)
            assert n_next < n0

    def test_clipping_at_population_ceiling(self):
        p = AcceleratorParams(i0=0.004, k=0.0015, alpha=0.5, beta=1.3,
                              n_total=10)
        _, n_next = step_accelerator(9.0, p)
        assert n_next == 10


class TestFixedPoint:
    def test_reference_stable_point_near_38(self):
        n_fix, _ = accelerator_fixed_point(STABLE)
        assert n_fix == pytest.approx(38, rel=0.02)

    def test_reference_unstable_point_14_and_2_1_percent(self):
        n_fix, i_fix = accelerator_fixed_point(UNSTABLE)
        assert n_fix == pytest.approx(14, abs=0.5)
        assert i_fix == pytest.approx(0.021, abs=1e-3)

    def test_alpha_zero_reduces_to_ponzi_count(self):
        p = AcceleratorParams(i0=0.004, k=0.0015, alpha=0.0, beta=1.3)
        n_fix, i_fix = accelerator_fixed_point(p)
        assert n_fix == pytest.approx(ponzi_count(p.i0, p.k, p.beta), rel=1e-12)
        assert i_fix == pytest.approx(p.i0, rel=1e-12)

    def test_degenerate_alpha_beta_one(self):
        with pytest.raises(DegenerateParametersError):
            accelerator_fixed_point(
                AcceleratorParams(i0=0.01, k=0.001, alpha=0.5, beta=2.0))

    def test_limit_independent_of_start_when_stable(self):
        n_fix, _ = accelerator_fixed_point(STABLE)
        for n0 in (0.3, 2.0, 38.2, 900.0, 5e4):
            traj = iterate_accelerator(STABLE, n0, max_steps=300, tol=1e-13)
            assert traj.terminated_reason is TerminationReason.CONVERGED
            assert traj.final_n == pytest.approx(n_fix, rel=1e-9)


class TestClosedForm:
    def test_t_zero(self):
        n, i = closed_form_accelerator(STABLE, 5.0, 0)
        assert n == 5.0 and i == STABLE.i0

    def test_matches_iteration_100_random_sets(self):
        rng = np.random.default_rng(23)
        checked = 0
        while checked < 100:
            ab = rng.uniform(0.1, 2.0)
            if abs(ab - 1.0) < 0.05:
                continue
            beta = rng.uniform(0.5, 2.5)
            p = AcceleratorParams(i0=rng.uniform(1e-4, 0.05),
                                  k=rng.uniform(1e-4, 0.05),
                                  alpha=ab / beta, beta=beta,
                                  n_total=10 ** 9)
            n0 = rng.uniform(0.5, 200.0)
            n_prev = n0
            for t in range(1, 31):
                _, n_t = step_accelerator(n_prev, p)
                if not (1e-100 < n_t < 1e8):  # pre-overflow, pre-clip
                    break
                n_cf, i_cf = closed_form_accelerator(p, n0, t)
                assert n_cf == pytest.approx(n_t, rel=1e-9)
                assert i_cf == pytest.approx(p.k * n_t ** (1 / p.beta), rel=1e-9)
                n_prev = n_t
            checked += 1

    def test_supercritical_below_fixed_point_decays_to_zero(self):
        n_fix, _ = accelerator_fixed_point(UNSTABLE)
        n_60, _ = closed_form_accelerator(UNSTABLE, n_fix * 0.8, 60)
        assert n_60 < 1e-30

    def test_overflow_gives_infinity_sentinel(self):
        n_fix, _ = accelerator_fixed_point(UNSTABLE)
        n_big, i_big = closed_form_accelerator(UNSTABLE, n_fix * 2, 10000)
        assert n_big == math.inf and i_big == math.inf


class TestStability:
    def test_stable_eigenvalues(self):
        label, eigs = accelerator_stability(STABLE)
        assert label == "stable"
        assert eigs == (0.0, pytest.approx(0.65))

    def test_unstable_eigenvalues_and_divergence(self):
        label, eigs = accelerator_stability(UNSTABLE)
        assert label == "unstable"
        assert eigs[1] == pytest.approx(1.35)
        n_fix, _ = accelerator_fixed_point(UNSTABLE)
        traj = iterate_accelerator(UNSTABLE, n_fix * 1.1, max_steps=200)
        assert traj.final_n > n_fix * 2

    def test_alpha_zero_stable(self):
        p = AcceleratorParams(i0=0.01, k=0.005, alpha=0.0, beta=1.5)
        label, eigs = accelerator_stability(p)
        assert label == "stable" and eigs == (0.0, 0.0)


class TestInvariantsAndProperties:
    def test_repulsive_fixed_point_log_distance_grows(self):
        n_fix, _ = accelerator_fixed_point(UNSTABLE)
        for eps in (1e-6, -1e-6):
            n = n_fix * (1 + eps)
            dist_prev = abs(math.log(n / n_fix))
            for _ in range(20):
                _, n = step_accelerator(n, UNSTABLE)
                dist = abs(math.log(n / n_fix))
                assert dist > dist_prev
                dist_prev = dist

    def test_clipping_invariant_n_never_exceeds_total(self):
        p = AcceleratorParams(i0=0.003, k=0.005, alpha=0.75, beta=1.8,
                              n_total=500)
        n = 20.0
        for _ in range(60):
            _, n = step_accelerator(n, p)
            assert n <= 500

    def test_self_healing_monotone_decrease_from_above(self):
        n_fix, _ = accelerator_fixed_point(STABLE)
        traj = iterate_accelerator(STABLE, 900.0, max_steps=100, tol=0.0)
        ns = [n for _, n, _ in traj.steps]
        above = [n for n in ns if n > n_fix * (1 + 1e-9)]
        assert all(a > b for a, b in zip(above, above[1:]))
        assert ns[-1] == pytest.approx(n_fix, rel=1e-6)
