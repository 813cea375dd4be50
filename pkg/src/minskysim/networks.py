"""Undirected contagion substrates: generators, invariants, edge-list files.

Adjacency is stored CSR-style (indptr/indices over node ids 0..n-1) with every
edge present in both directions; self-loops and duplicate edges are rejected
at construction.  All random generators are reproducible from an integer seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .validation import ParameterError


class NetworkConstructionError(ValueError):
    """Generator parameters cannot produce a valid network."""


@dataclass(frozen=True)
class Network:
    n_nodes: int
    indptr: np.ndarray
    indices: np.ndarray
    generator_spec: dict = field(default_factory=dict, compare=False)
    seed: int | None = field(default=None, compare=False)
    _adj_cache: list | None = field(default=None, compare=False, repr=False)
    _csr_cache: object = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    @property
    def n_edges(self) -> int:
        return int(self.indices.shape[0]) // 2

    def degree(self, u: int | None = None):
        degs = np.diff(self.indptr)
        return degs if u is None else int(degs[u])

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def adjacency_lists(self) -> list[list[int]]:
        """Plain python adjacency lists, cached; the fast path for BFS loops."""
        if self._adj_cache is None:
            indptr, indices = self.indptr, self.indices.tolist()
            adj = [indices[indptr[u]:indptr[u + 1]] for u in range(self.n_nodes)]
            object.__setattr__(self, "_adj_cache", adj)
        return self._adj_cache

    def edges(self) -> np.ndarray:
        """(m, 2) array of unique undirected edges with u < v."""
        u = np.repeat(np.arange(self.n_nodes), np.diff(self.indptr))
        v = self.indices
        keep = u < v
        return np.column_stack([u[keep], v[keep]])

    def to_scipy_csr(self):
        if self._csr_cache is None:
            from scipy.sparse import csr_matrix
            data = np.ones(self.indices.shape[0], dtype=np.int8)
            mat = csr_matrix((data, self.indices, self.indptr),
                             shape=(self.n_nodes, self.n_nodes))
            object.__setattr__(self, "_csr_cache", mat)
        return self._csr_cache


def _network_from_edges(n_nodes: int, edges: np.ndarray, spec: dict,
                        seed: int | None) -> Network:
    """Build the CSR structure from unique undirected edges, checking invariants."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size:
        if edges.min() < 0 or edges.max() >= n_nodes:
            raise NetworkConstructionError("edge endpoint outside [0, n_nodes)")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise NetworkConstructionError("self-loops are not allowed")
        norm = np.sort(edges, axis=1)
        uniq = np.unique(norm, axis=0)
        if uniq.shape[0] != norm.shape[0]:
            raise NetworkConstructionError("duplicate edges are not allowed")
        both = np.concatenate([norm, norm[:, ::-1]])
    else:
        both = np.empty((0, 2), dtype=np.int64)
    order = np.lexsort((both[:, 1], both[:, 0]))
    both = both[order]
    counts = np.bincount(both[:, 0], minlength=n_nodes)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return Network(n_nodes=n_nodes, indptr=indptr, indices=both[:, 1].copy(),
                   generator_spec=spec, seed=seed)


def _random_regular_edges(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Pairing-model edges with local repair of self-loops/duplicates."""
    if (n * k) % 2 != 0:
        raise NetworkConstructionError("random_regular requires n*K even")
    if k >= n:
        raise NetworkConstructionError("random_regular requires K < n")
    for _ in range(50):
        stubs = rng.permutation(np.repeat(np.arange(n, dtype=np.int64), k))
        u, v = stubs[0::2].copy(), stubs[1::2].copy()
        ok = False
        for _ in range(200):
            lo, hi = np.minimum(u, v), np.maximum(u, v)
            keys = lo * n + hi
            order = np.argsort(keys, kind="stable")
            sorted_keys = keys[order]
            dup = np.zeros(keys.shape[0], dtype=bool)
            dup_sorted = np.concatenate([[False], sorted_keys[1:] == sorted_keys[:-1]])
            dup[order] = dup_sorted
            bad = np.flatnonzero((u == v) | dup)
            if bad.size == 0:
                ok = True
                break
            # swap each bad second endpoint with a random other pair's
            partners = rng.integers(0, u.shape[0], size=bad.size)
            v[bad], v[partners] = v[partners], v[bad].copy()
        if ok:
            return np.column_stack([u, v])
    raise NetworkConstructionError("random_regular pairing failed to stabilize")


def _erdos_renyi_edges(n: int, mean_degree: float,
                       rng: np.random.Generator) -> np.ndarray:
    if n < 2 or mean_degree < 0:
        raise NetworkConstructionError("erdos_renyi needs n >= 2, mean_degree >= 0")
    p = min(mean_degree / (n - 1), 1.0)
    total_pairs = n * (n - 1) // 2
    m = int(rng.binomial(total_pairs, p))
    chosen: set[int] = set()
    while len(chosen) < m:
        need = m - len(chosen)
        uu = rng.integers(0, n, size=int(need * 1.3) + 8)
        vv = rng.integers(0, n, size=uu.shape[0])
        lo, hi = np.minimum(uu, vv), np.maximum(uu, vv)
        for a, b in zip(lo.tolist(), hi.tolist()):
            if a != b:
                chosen.add(a * n + b)
                if len(chosen) == m:
                    break
    keys = np.fromiter(chosen, dtype=np.int64, count=len(chosen))
    return np.column_stack([keys // n, keys % n])


def _tree_edges(k: int, depth: int) -> tuple[int, np.ndarray]:
    """Rooted tree where the root has K children and every other internal node
    has K-1 children, so interior degrees are exactly K."""
    if k < 2 or depth < 0:
        raise NetworkConstructionError("tree requires K >= 2 and depth >= 0")
    edges: list[tuple[int, int]] = []
    next_id = 1
    frontier = [0]
    for level in range(depth):
        new_frontier = []
        for node in frontier:
            n_children = k if node == 0 else k - 1
            for _ in range(n_children):
                edges.append((node, next_id))
                new_frontier.append(next_id)
                next_id += 1
        frontier = new_frontier
    return next_id, np.asarray(edges, dtype=np.int64).reshape(-1, 2)


def build_network(spec: dict) -> Network:
    """Construct a network from a generator spec dict.

    Kinds: random_regular(n, k), erdos_renyi(n, mean_degree), tree(k, depth),
    explicit(n_nodes?, edges).  Random kinds honor spec['seed'] (default 0).
    """
    if "kind" not in spec:
        raise ParameterError("network spec needs a 'kind' field")
    kind = spec["kind"]
    seed = int(spec.get("seed", 0))
    rng = np.random.default_rng(seed)
    if kind == "random_regular":
        n, k = int(spec["n"]), int(spec["k"])
        edges = _random_regular_edges(n, k, rng)
        return _network_from_edges(n, edges, dict(spec), seed)
    if kind == "erdos_renyi":
        n = int(spec["n"])
        edges = _erdos_renyi_edges(n, float(spec["mean_degree"]), rng)
        return _network_from_edges(n, edges, dict(spec), seed)
    if kind == "tree":
        n, edges = _tree_edges(int(spec["k"]), int(spec["depth"]))
        return _network_from_edges(n, edges, dict(spec), seed)
    if kind == "explicit":
        edges = np.asarray(spec["edges"], dtype=np.int64).reshape(-1, 2)
        n = int(spec.get("n_nodes", edges.max() + 1 if edges.size else 0))
        return _network_from_edges(n, edges, {"kind": "explicit", "n_nodes": n}, None)
    raise ParameterError(f"unknown network kind {kind!r}")


def write_edge_list(net: Network, path: str | Path) -> None:
    """One 'u v' integer pair per line, 0-indexed, whitespace-separated."""
    edges = net.edges()
    with open(path, "w") as fh:
        for u, v in edges.tolist():
            fh.write(f"{u} {v}\n")


def load_node_set(path: str | Path) -> set[int]:
    """Susceptible/seed set file: a JSON array of integer node ids."""
    import json
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list) or any(
            not isinstance(v, int) or isinstance(v, bool) for v in data):
        raise ParameterError(f"{path} must hold a JSON array of integers")
    return set(data)


def read_edge_list(path: str | Path, n_nodes: int | None = None) -> Network:
    pairs = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise NetworkConstructionError(f"malformed edge line: {line!r}")
            pairs.append((int(parts[0]), int(parts[1])))
    spec: dict = {"kind": "explicit", "edges": pairs}
    if n_nodes is not None:
        spec["n_nodes"] = n_nodes
    return build_network(spec)


def dumbbell_network(cluster_size: int = 20, n_bridges: int = 2,
                     cluster_kind: str = "path") -> Network:
    """Two clusters of ``cluster_size`` joined by a chain of bridge nodes.

    Node layout: [0..c-1] cluster A, [c..2c-1] cluster B, then bridge nodes.
    The bridge chain connects A's last node to B's first node.  Clusters are
    paths (slow burn) or complete graphs (one-tick flash, which makes the
    bridge a visible per-tick bottleneck).
    """
    c = cluster_size
    if cluster_kind == "path":
        edges = [(i, i + 1) for i in range(c - 1)]
        edges += [(c + i, c + i + 1) for i in range(c - 1)]
    elif cluster_kind == "complete":
        edges = [(i, j) for i in range(c) for j in range(i + 1, c)]
        edges += [(c + i, c + j) for i in range(c) for j in range(i + 1, c)]
    else:
        raise ParameterError(f"unknown cluster_kind {cluster_kind!r}")
    bridge_ids = list(range(2 * c, 2 * c + n_bridges))
    chain = [c - 1] + bridge_ids + [c]
    edges += list(zip(chain[:-1], chain[1:]))
    return build_network({"kind": "explicit", "edges": edges,
                          "n_nodes": 2 * c + n_bridges})
