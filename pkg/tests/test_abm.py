import math

import numpy as np
import pytest

from minskysim import (Intervention, ParameterError, PolicySpec,
                       ScenarioConfig, apply_intervention,
                       detect_bottleneck, dumbbell_network, init_scenario,
                       run_ensemble, run_scenario, tick)
from minskysim.abm import InterventionError


def dumbbell_config(**overrides):
    """All-susceptible dumbbell scenario: resiliences below i0, feedback off."""
    net = dumbbell_network(cluster_size=20, n_bridges=2)
    base = dict(
        network={"kind": "explicit", "edges": net.edges().tolist(),
                 "n_nodes": net.n_nodes},
        resilience={"k": 1e-6, "beta": 1.0},  # every r << i0: all ponzi
        i0=0.02, alpha=0.0, seeds=(0,), ticks=60, seed=7,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


class TestInitScenario:
    def test_empty_seed_set_is_static(self):
        config = dumbbell_config(seeds=())
        state = init_scenario(config)
        assert state.per_tick_failures == (0,)
        state = run_scenario(config, ticks=5)
        assert state.cumulative_failed == 0

    def test_seed_out_of_range_rejected(self):
        with pytest.raises(ParameterError):
            init_scenario(dumbbell_config(seeds=(999,)))

    def test_determinism_bit_identical(self):
        config = ScenarioConfig(
            network={"kind": "random_regular", "n": 300, "k": 4},
            resilience={"k": 0.001, "beta": 1.3, "mode": "iid_pareto"},
            i0=0.01, alpha=0.4, seeds=(1, 2), ticks=15, seed=99)
        a, b = run_scenario(config), run_scenario(config)
        assert a.per_tick_failures == b.per_tick_failures
        np.testing.assert_array_equal(a.firms.status, b.firms.status)
        np.testing.assert_array_equal(a.firms.resilience, b.firms.resilience)

    def test_feedback_off_bounded_by_seed_cluster(self):
        # oracle: susceptible-cluster census around the seed
        config = ScenarioConfig(
            network={"kind": "random_regular", "n": 400, "k": 3},
            resilience={"k": 0.001, "beta": 1.2, "mode": "iid_pareto"},
            i0=0.02, alpha=0.0, seeds=(5,), ticks=400, seed=3)
        state = init_scenario(config)
        sus = set(np.flatnonzero(state.firms.resilience < config.i0).tolist())
        census_size = len(_seed_cluster(state.network, sus, 5))
        final = run_scenario(config)
        assert final.cumulative_failed <= census_size + 1
        # with enough ticks the whole cluster is consumed
        assert final.cumulative_failed == max(census_size, 1)


def _seed_cluster(net, susceptible, seed):
    members = set(susceptible) | {seed}
    frontier, seen = [seed], {seed}
    while frontier:
        nxt = []
        for u in frontier:
            for v in net.neighbors(u).tolist():
                if v in members and v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return seen


class TestTick:
    def test_bridge_immunization_confines_avalanche(self):
        config = dumbbell_config()
        state = init_scenario(config)
        state = apply_intervention(
            state, Intervention(kind="immunize_nodes", nodes=(40, 41)))
        for _ in range(60):
            state = tick(state)
        # oracle: BFS with bridge nodes removed reaches exactly cluster A
        assert state.cumulative_failed == 20
        assert set(state.failed_ids.tolist()) == set(range(20))

    def test_unintervened_dumbbell_fails_everything(self):
        state = run_scenario(dumbbell_config())
        assert state.cumulative_failed == 42

    def test_manual_override_below_resiliences_stops_everything(self):
        config = ScenarioConfig(
            network={"kind": "random_regular", "n": 200, "k": 3},
            resilience={"k": 0.001, "beta": 1.3},
            i0=0.05, alpha=0.5, seeds=(0,), ticks=4, seed=1)
        state = run_scenario(config)
        floor_policy = PolicySpec(rate_rule="manual_override", manual_rate=1e-9)
        state = apply_intervention(
            state, Intervention(kind="set_policy", policy=floor_policy))
        before = state.cumulative_failed
        for _ in range(10):
            state = tick(state)
            assert state.per_tick_failures[-1] == 0
        assert state.cumulative_failed == before
        assert state.per_tick_ponzi[-1] == 0

    def test_rate_floor_binds(self):
        config = dumbbell_config(
            alpha=-0.8,
            policy=PolicySpec(rate_rule="counter_cyclical", rate_floor=0.015))
        state = run_scenario(config, ticks=30)
        assert state.i_current >= 0.015

    def test_failure_monotone_and_sums(self):
        config = dumbbell_config()
        state = init_scenario(config)
        cum = [state.cumulative_failed]
        for _ in range(30):
            state = tick(state)
            cum.append(state.cumulative_failed)
        assert all(a <= b for a, b in zip(cum, cum[1:]))
        assert state.cumulative_failed == sum(state.per_tick_failures)


class TestInterventions:
    def test_guarantee_all_bridge_edges_blocks_cross_contagion(self):
        config = dumbbell_config()
        state = init_scenario(config)
        state = apply_intervention(state, Intervention(
            kind="guarantee_edges", edges=((19, 40), (40, 41), (41, 20))))
        for _ in range(60):
            state = tick(state)
        assert set(state.failed_ids.tolist()) == set(range(20))

    def test_counter_cyclical_policy_lowers_rate_during_crisis(self):
        config = ScenarioConfig(
            network={"kind": "random_regular", "n": 300, "k": 4},
            resilience={"k": 0.0001, "beta": 1.1},
            i0=0.03, alpha=0.5, seeds=(0,), ticks=3, seed=5)
        state = run_scenario(config)
        state = apply_intervention(state, Intervention(
            kind="set_policy",
            policy=PolicySpec(rate_rule="counter_cyclical")))
        rates = []
        for _ in range(6):
            state = tick(state)
            rates.append(state.i_current)
        assert all(a >= b for a, b in zip(rates, rates[1:]))
        assert rates[-1] < config.i0

    def test_set_rate_overrides_for_one_tick_only(self):
        config = dumbbell_config(alpha=0.5)
        state = init_scenario(config)
        state = apply_intervention(state,
                                   Intervention(kind="set_rate", rate=0.5))
        state = tick(state)
        assert state.i_current == 0.5
        state = tick(state)
        assert state.i_current != 0.5  # rule resumes

    def test_immunizing_failed_node_is_noop_but_logged(self):
        config = dumbbell_config()
        state = run_scenario(config, ticks=5)
        failed_before = set(state.failed_ids.tolist())
        target = int(next(iter(failed_before)))
        state2 = apply_intervention(
            state, Intervention(kind="immunize_nodes", nodes=(target,)))
        assert set(state2.failed_ids.tolist()) == failed_before
        assert state2.interventions[-1].kind == "immunize_nodes"
        for _ in range(40):
            state2 = tick(state2)
        assert target in set(state2.failed_ids.tolist())  # failure absorbing

    def test_unknown_targets_rejected_state_unchanged(self):
        state = init_scenario(dumbbell_config())
        with pytest.raises(InterventionError):
            apply_intervention(state,
                               Intervention(kind="immunize_nodes", nodes=(99,)))
        with pytest.raises(InterventionError):
            apply_intervention(state, Intervention(kind="guarantee_edges",
                                                   edges=((0, 19),)))
        assert state.interventions == ()

    def test_intervention_dominance_extra_immunization_never_hurts(self):
        rng = np.random.default_rng(11)
        for trial in range(5):
            config = ScenarioConfig(
                network={"kind": "random_regular", "n": 200, "k": 3},
                resilience={"k": 0.002, "beta": 1.4, "mode": "iid_pareto"},
                i0=0.05, alpha=0.3, seeds=(0,), ticks=40,
                seed=int(rng.integers(1e6)))
            plain = run_scenario(config)
            node = int(rng.integers(1, 200))
            shielded = run_scenario(config, interventions=(
                Intervention(kind="immunize_nodes", nodes=(node,),
                             applied_at_tick=0),))
            assert shielded.cumulative_failed <= plain.cumulative_failed

    def test_replay_reproduces_bit_exactly(self):
        config = dumbbell_config(alpha=0.2)
        ivs = (Intervention(kind="set_rate", rate=0.08, applied_at_tick=3),
               Intervention(kind="immunize_nodes", nodes=(41,),
                            applied_at_tick=5))
        first = run_scenario(config, interventions=ivs)
        replayed = run_scenario(config, interventions=first.interventions)
        assert first.per_tick_failures == replayed.per_tick_failures
        np.testing.assert_array_equal(first.firms.status,
                                      replayed.firms.status)
        assert first.i_current == replayed.i_current


class TestBottleneck:
    def test_fires_on_two_flash_clusters_with_slow_bridge(self):
        net = dumbbell_network(cluster_size=20, n_bridges=2,
                               cluster_kind="complete")
        config = ScenarioConfig(
            network={"kind": "explicit", "edges": net.edges().tolist(),
                     "n_nodes": net.n_nodes},
            resilience={"k": 1e-6, "beta": 1.0},
            i0=0.02, alpha=0.0, seeds=(0,), ticks=12, seed=2)
        state = run_scenario(config)
        assert state.cumulative_failed == 42
        report = detect_bottleneck(state.per_tick_failures)
        assert report is not None
        assert 1.0 <= report.smoothed_min <= 2.5  # dip to 1-2 at the bridge
        # the dip sits strictly inside the active window
        counts = state.per_tick_failures
        assert 0 < report.tick < len(counts) - 1
        assert counts[report.tick] <= 2

    def test_no_bottleneck_on_single_burst(self):
        assert detect_bottleneck([1, 19, 0, 0]) is None


class TestEnsemble:
    def test_deterministic_scenario_has_zero_variance(self):
        # rank-deterministic resiliences + explicit network: nothing varies
        stats = run_ensemble(dumbbell_config(ticks=30), n_runs=6)
        assert stats.coefficient_of_variation == 0.0
        assert np.all(stats.final_failures == stats.final_failures[0])
        assert np.all(stats.var_per_tick == 0.0)

    def test_runs_vary_with_stochastic_resilience(self):
        config = ScenarioConfig(
            network={"kind": "random_regular", "n": 300, "k": 3},
            resilience={"k": 0.002, "beta": 1.4, "mode": "iid_pareto"},
            i0=0.04, alpha=0.2, seeds=(0,), ticks=30, seed=17)
        stats = run_ensemble(config, n_runs=12)
        assert stats.final_failures.std() > 0
        assert stats.n_runs == 12

    def test_cv_larger_near_percolation_threshold(self):
        # iid resiliences, alpha = 0: ponzi density set by i0; dispersion of
        # final failure counts grows as the density nears rho_C = 0.5 (K = 3)
        def cv_at(rho, seed):
            k = 0.002
            beta = 1.4
            n = 1500
            r_max = k * n ** (1 / beta)
            i0 = r_max * rho ** (1 / beta)  # iid CDF: P[r < i0] = rho
            config = ScenarioConfig(
                network={"kind": "random_regular", "n": n, "k": 3},
                resilience={"k": k, "beta": beta, "mode": "iid_pareto"},
                i0=i0, alpha=0.0, seeds=(0,), ticks=80, seed=seed)
            return run_ensemble(config, n_runs=60).coefficient_of_variation

        assert cv_at(0.45, 41) > cv_at(0.2, 43)

    def test_config_scheduled_interventions_run_and_replay(self):
        config = dumbbell_config()
        shielded = ScenarioConfig(
            **{**config.__dict__,
               "interventions": (Intervention(kind="immunize_nodes",
                                              nodes=(40, 41),
                                              applied_at_tick=0),)})
        state = run_scenario(shielded)
        assert state.cumulative_failed == 20
        replayed = run_scenario(shielded)
        assert replayed.per_tick_failures == state.per_tick_failures

    def test_parallel_runs_match_serial(self):
        config = ScenarioConfig(
            network={"kind": "random_regular", "n": 120, "k": 3},
            resilience={"k": 0.002, "beta": 1.4, "mode": "iid_pareto"},
            i0=0.04, alpha=0.2, seeds=(0,), ticks=10, seed=23)
        serial = run_ensemble(config, n_runs=4, n_jobs=1)
        parallel = run_ensemble(config, n_runs=4, n_jobs=2)
        np.testing.assert_array_equal(serial.final_failures,
                                      parallel.final_failures)


class TestMeanFieldConsistency:
    def test_ensemble_mean_matches_branching_fixed_point(self):
        """Converged mean failures vs the self-consistent branching oracle.

        Oracle: iterate F -> 1 + K*rho(i(F)) / (1 - (K-1)*rho(i(F))) to its
        fixed point, with rho(i) the exact rank-mode ponzi fraction.  The
        agent tick spreads one hop at a time but lands on the same
        self-consistent cluster once converged.
        """
        n, k_deg = 6000, 4
        kk, beta, alpha, i0 = 0.002, 1.3, 0.25, 0.02
        config = ScenarioConfig(
            network={"kind": "random_regular", "n": n, "k": k_deg},
            resilience={"k": kk, "beta": beta},
            i0=i0, alpha=alpha, seeds=(0,), ticks=60, seed=31)

        def rho(i):
            return min((i / kk) ** beta, n) / n

        f = 1.0
        for _ in range(400):
            r = rho(i0 * f ** alpha)
            x = (k_deg - 1) * r
            assert x < 1
            f_new = 1.0 + k_deg * r / (1.0 - x)
            if abs(f_new - f) < 1e-12:
                break
            f = f_new

        stats = run_ensemble(config, n_runs=80)
        se = stats.final_failures.std() / math.sqrt(stats.n_runs)
        assert abs(stats.final_failures.mean() - f) <= 3 * se + 0.02 * f
