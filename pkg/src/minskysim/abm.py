"""Agent-level coupled simulation: firms on a network under rate feedback.

Each tick runs three sub-steps in fixed order: (1) the interest rate reacts
to the failure count per the active policy, (2) firms are reclassified at the
new rate (ponzi status is reversible, failure is absorbing), (3) one
synchronous contagion sweep fails every non-immunized ponzi with a failed
neighbor across non-guaranteed edges.  States are immutable snapshots; a tick
returns a new state, so ensembles and what-if previews never share mutable
data.  Regulator interventions (immunize nodes, guarantee edges, rate
overrides, policy swaps) are validated, logged and replayable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .firms import (FAILED, PONZI, FeedbackParams, FirmTable, ResilienceSpec,
                    classify_firms, interest_from_failures, sample_resiliences)
from .networks import Network, build_network
from .validation import ParameterError, require_positive


class RateRule(str, enum.Enum):
    PROCYCLICAL = "procyclical"
    COUNTER_CYCLICAL = "counter_cyclical"
    SELF_REGULATING = "self_regulating"
    MANUAL_OVERRIDE = "manual_override"


class InterventionError(ValueError):
    """Intervention targets do not exist; state left unchanged."""


@dataclass(frozen=True)
class PolicySpec:
    rate_rule: RateRule = RateRule.PROCYCLICAL
    manual_rate: float | None = None
    rate_floor: float | None = None
    rate_driver: str = "cumulative"  # or "per_tick" for sensitivity studies

    def __post_init__(self) -> None:
        object.__setattr__(self, "rate_rule", RateRule(self.rate_rule))
        if self.rate_rule is RateRule.MANUAL_OVERRIDE:
            if self.manual_rate is None:
                raise ParameterError("manual_override needs manual_rate")
            require_positive("manual_rate", self.manual_rate)
        if self.rate_floor is not None:
            require_positive("rate_floor", self.rate_floor)
        if self.rate_driver not in ("cumulative", "per_tick"):
            raise ParameterError("rate_driver must be 'cumulative' or 'per_tick'")


@dataclass(frozen=True)
class Intervention:
    kind: str  # immunize_nodes | guarantee_edges | set_rate | set_policy
    nodes: tuple[int, ...] = ()
    edges: tuple[tuple[int, int], ...] = ()
    rate: float | None = None
    policy: PolicySpec | None = None
    applied_at_tick: int = -1

    def describe(self) -> dict:
        out: dict = {"kind": self.kind, "applied_at_tick": self.applied_at_tick}
        if self.kind == "immunize_nodes":
            out["nodes"] = list(self.nodes)
        elif self.kind == "guarantee_edges":
            out["edges"] = [list(e) for e in self.edges]
        elif self.kind == "set_rate":
            out["rate"] = self.rate
        elif self.kind == "set_policy":
            out["policy"] = {
                "rate_rule": self.policy.rate_rule.value,
                "manual_rate": self.policy.manual_rate,
                "rate_floor": self.policy.rate_floor,
                "rate_driver": self.policy.rate_driver,
            }
        return out


@dataclass(frozen=True)
class ScenarioConfig:
    network: dict
    resilience: dict
    i0: float
    alpha: float
    seeds: tuple[int, ...]
    ticks: int = 50
    policy: PolicySpec = field(default_factory=PolicySpec)
    seed: int = 0
    interventions: tuple[Intervention, ...] = ()  # scheduled by applied_at_tick

    def __post_init__(self) -> None:
        require_positive("i0", self.i0)
        float(self.alpha)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.ticks < 0:
            raise ParameterError("ticks must be >= 0")


@dataclass(frozen=True)
class SimState:
    tick: int
    firms: FirmTable
    network: Network
    i_current: float
    per_tick_failures: tuple[int, ...]
    per_tick_ponzi: tuple[int, ...]
    per_tick_rates: tuple[float, ...]
    policy: PolicySpec
    config: ScenarioConfig
    guaranteed_edges: frozenset[tuple[int, int]] = frozenset()
    rate_override: float | None = None
    interventions: tuple[Intervention, ...] = ()

    @property
    def cumulative_failed(self) -> int:
        return sum(self.per_tick_failures)

    @property
    def failed_ids(self) -> np.ndarray:
        return np.flatnonzero(self.firms.status == FAILED)

    @property
    def ponzi_ids(self) -> np.ndarray:
        return np.flatnonzero(self.firms.status == PONZI)


def init_scenario(config: ScenarioConfig) -> SimState:
    """Deterministic initial state: network + resiliences from the scenario
    seed, seed firms failed at tick 0, classification at i0."""
    net_spec = dict(config.network)
    net_spec.setdefault("seed", config.seed)
    network = build_network(net_spec)
    res = dict(config.resilience)
    res.setdefault("seed", config.seed + 1)
    spec = ResilienceSpec(k=float(res["k"]), beta=float(res["beta"]),
                          n_total=network.n_nodes,
                          mode=res.get("mode", "rank_deterministic"),
                          seed=int(res["seed"]))
    firms = sample_resiliences(spec)
    for s in config.seeds:
        if not (0 <= s < network.n_nodes):
            raise ParameterError(f"seed id {s} outside node range")
    firms = classify_firms(firms, config.i0)
    if config.seeds:
        firms = firms.with_status(list(config.seeds), FAILED)
    n_ponzi = int(np.count_nonzero(firms.status == PONZI))
    return SimState(
        tick=0, firms=firms, network=network, i_current=config.i0,
        per_tick_failures=(len(config.seeds),), per_tick_ponzi=(n_ponzi,),
        per_tick_rates=(config.i0,), policy=config.policy, config=config)


def _policy_rate(state: SimState) -> float:
    """Sub-step 1: the rate the active policy dictates for this tick."""
    if state.rate_override is not None:
        rate = state.rate_override
    else:
        policy, config = state.policy, state.config
        if policy.rate_rule is RateRule.MANUAL_OVERRIDE:
            rate = policy.manual_rate
        else:
            if policy.rate_driver == "cumulative":
                driver = state.cumulative_failed
            else:
                driver = state.per_tick_failures[-1]
            mag = abs(config.alpha)
            if policy.rate_rule is RateRule.PROCYCLICAL:
                exponent = config.alpha
            else:  # counter_cyclical and self_regulating lower i as N grows
                exponent = -mag
            rate = interest_from_failures(
                max(driver, 1), FeedbackParams(i0=config.i0, alpha=exponent))
    if state.policy.rate_floor is not None:
        rate = max(rate, state.policy.rate_floor)
    return rate


def tick(state: SimState) -> SimState:
    """Advance one tick: rate update, reclassification, contagion sweep.

    The sweep is synchronous: exposure counts come from the previous tick's
    failed set, so nodes failing this tick cannot contaminate within it.
    """
    rate = _policy_rate(state)
    firms = classify_firms(state.firms, rate)

    status = firms.status
    failed_mask = status == FAILED
    exposure = state.network.to_scipy_csr().dot(failed_mask.astype(np.int32))
    for u, v in state.guaranteed_edges:  # guaranteed edges carry no contagion
        if failed_mask[v]:
            exposure[u] -= 1
        if failed_mask[u]:
            exposure[v] -= 1
    new_mask = (status == PONZI) & ~firms.immunized & (exposure > 0)
    new_failures = np.flatnonzero(new_mask)
    if new_failures.size:
        firms = firms.with_status(new_failures, FAILED)
    n_ponzi = int(np.count_nonzero(firms.status == PONZI))
    return replace(
        state, tick=state.tick + 1, firms=firms, i_current=rate,
        per_tick_failures=state.per_tick_failures + (int(new_failures.size),),
        per_tick_ponzi=state.per_tick_ponzi + (n_ponzi,),
        per_tick_rates=state.per_tick_rates + (rate,),
        rate_override=None)


def apply_intervention(state: SimState, intervention: Intervention) -> SimState:
    """Register an intervention, effective from the next tick.

    Immunizations and edge guarantees persist; set_rate overrides the policy
    for exactly one tick; set_policy swaps the rule.  Unknown nodes or edges
    raise InterventionError and leave the state unchanged.
    """
    iv = replace(intervention, applied_at_tick=state.tick)
    log = state.interventions + (iv,)
    if iv.kind == "immunize_nodes":
        for node in iv.nodes:
            if not (0 <= node < state.network.n_nodes):
                raise InterventionError(f"unknown node {node}")
        return replace(state, firms=state.firms.with_immunized(list(iv.nodes)),
                       interventions=log)
    if iv.kind == "guarantee_edges":
        existing = {tuple(sorted(e)) for e in state.network.edges().tolist()}
        norm = []
        for u, v in iv.edges:
            key = (min(u, v), max(u, v))
            if key not in existing:
                raise InterventionError(f"unknown edge {u}-{v}")
            norm.append(key)
        return replace(state,
                       guaranteed_edges=state.guaranteed_edges | set(norm),
                       interventions=log)
    if iv.kind == "set_rate":
        if iv.rate is None or iv.rate <= 0:
            raise InterventionError("set_rate needs a positive rate")
        return replace(state, rate_override=float(iv.rate), interventions=log)
    if iv.kind == "set_policy":
        if iv.policy is None:
            raise InterventionError("set_policy needs a policy")
        return replace(state, policy=iv.policy, rate_override=None,
                       interventions=log)
    raise InterventionError(f"unknown intervention kind {intervention.kind!r}")


def run_scenario(config: ScenarioConfig,
                 interventions: Sequence[Intervention] = (),
                 ticks: int | None = None) -> SimState:
    """Drive a scenario for ``ticks`` ticks, applying each intervention when
    the state reaches its applied_at_tick.  Config-scheduled interventions
    and the extra ones passed here are merged.  Replaying a logged sequence
    onto a fresh init reproduces the trajectory bit-exactly."""
    state = init_scenario(config)
    pending = sorted((*config.interventions, *interventions),
                     key=lambda iv: iv.applied_at_tick)
    idx = 0
    total = config.ticks if ticks is None else ticks
    for _ in range(total):
        while idx < len(pending) and pending[idx].applied_at_tick <= state.tick:
            state = apply_intervention(state, pending[idx])
            idx += 1
        state = tick(state)
    while idx < len(pending) and pending[idx].applied_at_tick <= state.tick:
        state = apply_intervention(state, pending[idx])
        idx += 1
    return state


@dataclass(frozen=True)
class BottleneckReport:
    tick: int
    smoothed_min: float


def detect_bottleneck(per_tick: Sequence[int],
                      window: int = 3) -> BottleneckReport | None:
    """Interior dip of the smoothed per-tick failure series.

    Looks strictly between the first and last active ticks, so the dip is a
    genuine slow-down with contagion resuming afterwards: the cheap window
    for a targeted intervention.
    """
    counts = np.asarray(per_tick, dtype=float)
    active = np.flatnonzero(counts > 0)
    if active.size < 2 or active[-1] - active[0] < 2:
        return None
    first, last = int(active[0]), int(active[-1])
    half = window // 2
    smoothed = np.array([
        counts[max(t - half, 0):min(t + half + 1, counts.size)].mean()
        for t in range(counts.size)])
    interior = np.arange(first + 1, last)
    t_min = int(interior[np.argmin(smoothed[interior])])
    return BottleneckReport(tick=t_min, smoothed_min=float(smoothed[t_min]))


@dataclass(frozen=True)
class EnsembleStats:
    final_failures: np.ndarray
    mean_per_tick: np.ndarray
    var_per_tick: np.ndarray
    coefficient_of_variation: float
    bottleneck: BottleneckReport | None

    @property
    def n_runs(self) -> int:
        return int(self.final_failures.shape[0])


def run_ensemble(config: ScenarioConfig, n_runs: int,
                 n_jobs: int = 1) -> EnsembleStats:
    """Independent scenario realizations with per-run RNG streams derived
    from the master seed; per-tick mean/variance and final-size dispersion."""
    if n_runs < 2:
        raise ParameterError("n_runs must be >= 2")
    children = np.random.SeedSequence(config.seed).spawn(n_runs)
    run_seeds = [int(c.generate_state(1)[0]) for c in children]

    def one(run_seed: int) -> tuple[int, np.ndarray]:
        cfg = replace(config, seed=run_seed)
        state = run_scenario(cfg)
        return state.cumulative_failed, np.asarray(state.per_tick_failures)

    if n_jobs == 1:
        results = [one(s) for s in run_seeds]
    else:
        from joblib import Parallel, delayed
        results = Parallel(n_jobs=n_jobs)(delayed(one)(s) for s in run_seeds)
    finals = np.array([r[0] for r in results], dtype=np.int64)
    series = np.vstack([r[1] for r in results])
    mean_series = series.mean(axis=0)
    var_series = series.var(axis=0)
    mean_final = float(finals.mean())
    cv = float(finals.std() / mean_final) if mean_final > 0 else 0.0
    return EnsembleStats(final_failures=finals, mean_per_tick=mean_series,
                         var_per_tick=var_series, coefficient_of_variation=cv,
                         bottleneck=detect_bottleneck(mean_series))
