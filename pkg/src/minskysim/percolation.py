"""Contagion avalanches, cluster census, branching predictions, scaling fits.

The contagion rule: a susceptible (ponzi), non-immunized node fails as soon as
at least one neighbor has failed.  Updates are synchronous so per-tick failure
counts are well defined.  On locally tree-like substrates the expected
cumulative avalanche obeys the branching series with ratio (K-1)*rho, and near
the percolation threshold the mean avalanche size follows

    N_failed = S * (1 - rho/rho_C)^(-gamma)

capped by the ponzi population rho * n_total in finite systems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .networks import Network
from .validation import ParameterError, require_in_range

INFINITE_AVALANCHE = math.inf


@dataclass(frozen=True)
class AvalancheResult:
    failed: frozenset[int]
    per_step_counts: tuple[int, ...]

    @property
    def steps(self) -> int:
        return len(self.per_step_counts)

    @property
    def size(self) -> int:
        return len(self.failed)


@dataclass(frozen=True)
class ClusterCensus:
    sizes: tuple[int, ...]  # sorted ascending
    largest: int

    @property
    def total(self) -> int:
        return sum(self.sizes)


def run_avalanche(net: Network, susceptible: Iterable[int], seeds: Iterable[int],
                  immunized: Iterable[int] = ()) -> AvalancheResult:
    """Synchronous breadth-first contagion from ``seeds``.

    Seeds fail at step 0 (exogenous shock) unless immunized; thereafter every
    susceptible, non-immunized node with a failed neighbor fails on the next
    tick.  Immunized nodes never appear in the failed set.
    """
    seeds = set(int(s) for s in seeds)
    if not seeds:
        raise ParameterError("seeds must be nonempty")
    sus = set(int(s) for s in susceptible)
    imm = set(int(s) for s in immunized)
    for name, ids in (("seeds", seeds), ("susceptible", sus), ("immunized", imm)):
        for node in ids:
            if not (0 <= node < net.n_nodes):
                raise ParameterError(f"{name} id {node} outside node range")
    adj = net.adjacency_lists()
    failed = set(seeds - imm)
    counts = [len(failed)]
    frontier = list(failed)
    while frontier:
        new: set[int] = set()
        for u in frontier:
            for v in adj[u]:
                if v in sus and v not in imm and v not in failed and v not in new:
                    new.add(v)
        if not new:
            break
        failed |= new
        counts.append(len(new))
        frontier = list(new)
    return AvalancheResult(failed=frozenset(failed), per_step_counts=tuple(counts))


class _UnionFind:
    __slots__ = ("parent", "size")

    def __init__(self, items: Iterable[int]):
        self.parent = {i: i for i in items}
        self.size = {i: 1 for i in self.parent}

    def find(self, x: int) -> int:
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


def cluster_census(net: Network, susceptible: Iterable[int]) -> ClusterCensus:
    """Connected components of the susceptible-induced subgraph via union-find."""
    sus = set(int(s) for s in susceptible)
    uf = _UnionFind(sus)
    adj = net.adjacency_lists()
    for u in sus:
        for v in adj[u]:
            if v > u and v in sus:
                uf.union(u, v)
    sizes: dict[int, int] = {}
    for u in sus:
        root = uf.find(u)
        sizes[root] = sizes.get(root, 0) + 1
    ordered = tuple(sorted(sizes.values()))
    return ClusterCensus(sizes=ordered, largest=ordered[-1] if ordered else 0)


def branching_prediction(k: int, rho: float, t: float) -> float:
    """Expected cumulative failures of the discounted-seed branching series.

    Ratio x = (K-1)*rho.  Finite t: geometric partial sum, exactly t when
    x = 1.  t = infinity: 1/(1-x) when x < 1, infinity otherwise.
    """
    if k < 2:
        raise ParameterError("K must be >= 2")
    require_in_range("rho", rho, 0.0, 1.0, inclusive=(True, True))
    x = (k - 1) * rho
    if t == math.inf:
        return 1.0 / (1.0 - x) if x < 1.0 else INFINITE_AVALANCHE
    t = int(t)
    if t < 0:
        raise ParameterError("t must be nonnegative")
    if t == 0:
        return 0.0
    if abs(x - 1.0) < 1e-12:
        return float(t)
    return (x ** t - 1.0) / (x - 1.0)


def finite_size_cap(n_pred: float, rho: float, n_total: int) -> float:
    """Cap a branching/scaling prediction by the ponzi population rho*n_total."""
    return min(n_pred, rho * n_total)


# ---------------------------------------------------------------------------
# Monte Carlo ensembles
# ---------------------------------------------------------------------------

def _lazy_avalanche_size(adj: list[list[int]], seed_node: int, rho: float,
                         rng: np.random.Generator, blocked_neighbor: int = -1) -> int:
    """Single avalanche size with susceptibility drawn lazily on first touch.

    ``blocked_neighbor`` disables one incident edge of the seed (discounted
    seed mode, matching the branching series' (K-1)-exposure of the seed).
    """
    failed = {seed_node}
    sus_memo: dict[int, bool] = {}
    frontier = [seed_node]
    size = 1
    first = True
    while frontier:
        new: list[int] = []
        for u in frontier:
            for v in adj[u]:
                if first and u == seed_node and v == blocked_neighbor:
                    continue
                if v in failed:
                    continue
                s = sus_memo.get(v)
                if s is None:
                    s = bool(rng.random() < rho)
                    sus_memo[v] = s
                if s:
                    failed.add(v)
                    new.append(v)
                    size += 1
        frontier = new
        first = False
    return size


def _component_avalanche_sizes(net: Network, rho: float,
                               run_seeds: Sequence[np.random.SeedSequence],
                               pool: list[int] | None = None) -> np.ndarray:
    """Final avalanche sizes via connected components of the susceptible
    subgraph (one fresh realization and one uniform seed per run).

    Equivalent to the synchronous dynamics' final state; used where single
    avalanches can span the system and Python BFS would be too slow.
    """
    from scipy.sparse.csgraph import connected_components

    csr = net.to_scipy_csr()
    n = net.n_nodes
    sizes = np.empty(len(run_seeds), dtype=np.int64)
    for run, child in enumerate(run_seeds):
        rng = np.random.default_rng(child)
        if pool is None:
            seed_node = int(rng.integers(0, n))
        else:
            seed_node = pool[int(rng.integers(0, len(pool)))]
        mask = rng.random(n) < rho
        mask[seed_node] = True  # the seed fails regardless of its own status
        idx = np.flatnonzero(mask)
        sub = csr[idx][:, idx]
        _, labels = connected_components(sub, directed=False)
        pos = int(np.searchsorted(idx, seed_node))
        sizes[run] = int(np.count_nonzero(labels == labels[pos]))
    return sizes


def avalanche_size_samples(net: Network, rho: float, n_runs: int, seed: int = 0,
                           discount_seed: bool = False, method: str = "lazy",
                           seed_nodes: Sequence[int] | None = None) -> np.ndarray:
    """Monte Carlo final avalanche sizes, one independent realization per run.

    Each run draws a fresh susceptibility configuration at density ``rho`` and
    a seed node that fails exogenously (uniform over the graph, or over
    ``seed_nodes`` when given; finite trees are seeded at interior nodes this
    way so the degree-K branching picture applies).  ``discount_seed`` blocks
    one uniformly chosen incident edge of the seed so the seed exposes K-1
    neighbors, matching the branching series' convention.  ``method`` is
    'lazy' (per-touch draws; fast for subcritical sizes) or 'component'
    (vectorized whole-graph realization; fast for system-spanning sizes).
    """
    require_in_range("rho", rho, 0.0, 1.0, inclusive=(True, True))
    if n_runs < 1:
        raise ParameterError("n_runs must be >= 1")
    # independent per-run streams derived from the master seed: run j's result
    # does not depend on how many runs precede it, so ensembles can shard
    run_seeds = np.random.SeedSequence(seed).spawn(n_runs)
    pool = None if seed_nodes is None else [int(s) for s in seed_nodes]
    if method == "component":
        if discount_seed:
            raise ParameterError("component method does not support discount_seed")
        return _component_avalanche_sizes(net, rho, run_seeds, pool)
    if method != "lazy":
        raise ParameterError(f"unknown sampling method {method!r}")
    adj = net.adjacency_lists()
    n = net.n_nodes
    sizes = np.empty(n_runs, dtype=np.int64)
    for run, child in enumerate(run_seeds):
        rng = np.random.default_rng(child)
        if pool is None:
            seed_node = int(rng.integers(0, n))
        else:
            seed_node = pool[int(rng.integers(0, len(pool)))]
        blocked = -1
        if discount_seed:
            nbrs = adj[seed_node]
            if nbrs:
                blocked = nbrs[int(rng.integers(0, len(nbrs)))]
        sizes[run] = _lazy_avalanche_size(adj, seed_node, rho, rng, blocked)
    return sizes


# ---------------------------------------------------------------------------
# Scaling-law estimation
# ---------------------------------------------------------------------------

class ScalingFitError(RuntimeError):
    """Raised when the mean-size series cannot support a scaling fit; carries
    the raw measurements for inspection."""

    def __init__(self, message: str, rho_grid: Sequence[float],
                 means: Sequence[float]):
        super().__init__(message)
        self.rho_grid = list(rho_grid)
        self.means = list(means)


@dataclass(frozen=True)
class ScalingFitResult:
    rho_c: float
    gamma: float
    s: float
    residuals: tuple[float, ...]
    rho_grid: tuple[float, ...]
    means: tuple[float, ...]
    rho_grid_used: tuple[float, ...] = field(default=())

    def get_params(self) -> dict[str, float]:
        return {"rho_c": self.rho_c, "gamma": self.gamma, "s": self.s}


def _loglinear_fit(rho: np.ndarray, means: np.ndarray,
                   rho_c: float) -> tuple[float, float, float]:
    """LSQ of log(mean) on log(1 - rho/rho_c): returns (gamma, S, sq_resid)."""
    x = np.log1p(-rho / rho_c)
    y = np.log(means)
    a = np.column_stack([x, np.ones_like(x)])
    coef, res, *_ = np.linalg.lstsq(a, y, rcond=None)
    slope, intercept = coef
    sq = float(res[0]) if res.size else float(np.sum((a @ coef - y) ** 2))
    return -slope, math.exp(intercept), sq


def estimate_scaling(family_spec: dict, rho_grid: Sequence[float],
                     runs_per_point: int, seed: int = 0,
                     refine_fraction: float = 0.95) -> ScalingFitResult:
    """Estimate (rho_C, gamma, S) from Monte Carlo mean avalanche sizes.

    Builds one network from ``family_spec``, measures the mean avalanche size
    at every density in ``rho_grid`` (discounted-seed runs so the tree oracle
    applies), then fits S*(1 - rho/rho_C)^(-gamma) by least squares in log
    space.  Two passes: a coarse scan over candidate rho_C values, then a
    refined scan restricted to rho <= refine_fraction * rho_C_hat to keep
    supercritical contamination out of the fit.
    """
    from .networks import build_network

    rho_grid = np.asarray(sorted(float(r) for r in rho_grid))
    if rho_grid.size < 3:
        raise ParameterError("rho_grid needs at least 3 points")
    if rho_grid[0] <= 0.0 or rho_grid[-1] >= 1.0:
        raise ParameterError("rho_grid must lie strictly inside (0, 1)")
    if runs_per_point < 100:
        raise ParameterError("runs_per_point must be >= 100")

    net = build_network(family_spec)
    # finite trees are boundary-dominated: seed at the root so the avalanche
    # sees the interior degree-K geometry the scaling law describes
    seed_nodes = [0] if family_spec.get("kind") == "tree" else None
    ss = np.random.SeedSequence(seed)
    means = np.empty(rho_grid.size)
    for j, (rho, child) in enumerate(zip(rho_grid, ss.spawn(rho_grid.size))):
        sizes = avalanche_size_samples(
            net, float(rho), runs_per_point,
            seed=child.generate_state(1)[0], discount_seed=True,
            seed_nodes=seed_nodes)
        means[j] = sizes.mean()

    if np.any(means <= 0) or means[-1] <= means[0]:
        raise ScalingFitError("mean avalanche sizes are degenerate or "
                              "non-increasing across the grid",
                              rho_grid.tolist(), means.tolist())

    def best_over(cands: np.ndarray, rho: np.ndarray, m: np.ndarray):
        results = [(_loglinear_fit(rho, m, c), c) for c in cands]
        (gamma, s, sq), rc = min(results, key=lambda r: r[0][2])
        return rc, gamma, s, sq

    top = rho_grid[-1]
    coarse = np.linspace(top * 1.02, min(4.0 * top, 0.999), 80)
    rc0, *_ = best_over(coarse, rho_grid, means)

    keep = rho_grid <= refine_fraction * rc0
    if np.count_nonzero(keep) < 3:
        keep = np.ones_like(keep, dtype=bool)
    rho_used, means_used = rho_grid[keep], means[keep]
    lo = max(rho_used[-1] * 1.01, rc0 * 0.7)
    fine = np.linspace(lo, min(rc0 * 1.4, 0.999), 160)
    rc, gamma, s, _ = best_over(fine, rho_used, means_used)

    x = np.log1p(-rho_used / rc)
    fitted = math.log(s) - gamma * x
    resid = np.log(means_used) - fitted
    return ScalingFitResult(
        rho_c=float(rc), gamma=float(gamma), s=float(s),
        residuals=tuple(float(r) for r in resid),
        rho_grid=tuple(rho_grid.tolist()), means=tuple(means.tolist()),
        rho_grid_used=tuple(rho_used.tolist()))
