"""Scenario config documents: JSON schema, loading, derived map parameters."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import jsonschema

from .abm import Intervention, PolicySpec, ScenarioConfig
from .combined import CombinedParams
from .validation import ParameterError

SCHEMA_VERSION = 1

SCENARIO_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "minskysim scenario",
    "type": "object",
    "required": ["network", "resilience", "i0", "alpha", "seeds"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"type": "integer"},
        "network": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["random_regular", "erdos_renyi", "tree",
                                  "explicit", "dumbbell"]},
                "n": {"type": "integer", "minimum": 1},
                "k": {"type": "integer", "minimum": 2},
                "mean_degree": {"type": "number", "exclusiveMinimum": 0},
                "depth": {"type": "integer", "minimum": 0},
                "edges": {"type": "array",
                          "items": {"type": "array", "minItems": 2,
                                    "maxItems": 2,
                                    "items": {"type": "integer", "minimum": 0}}},
                "n_nodes": {"type": "integer", "minimum": 1},
                "cluster_size": {"type": "integer", "minimum": 2},
                "n_bridges": {"type": "integer", "minimum": 0},
                "cluster_kind": {"enum": ["path", "complete"]},
                "seed": {"type": "integer"},
            },
        },
        "resilience": {
            "type": "object",
            "required": ["k", "beta"],
            "additionalProperties": False,
            "properties": {
                "k": {"type": "number", "exclusiveMinimum": 0},
                "beta": {"type": "number", "exclusiveMinimum": 0},
                "mode": {"enum": ["rank_deterministic", "iid_pareto"]},
                "seed": {"type": "integer"},
            },
        },
        "i0": {"type": "number", "exclusiveMinimum": 0},
        "alpha": {"type": "number"},
        "policy": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rate_rule": {"enum": ["procyclical", "counter_cyclical",
                                       "self_regulating", "manual_override"]},
                "manual_rate": {"type": "number", "exclusiveMinimum": 0},
                "rate_floor": {"type": "number", "exclusiveMinimum": 0},
                "rate_driver": {"enum": ["cumulative", "per_tick"]},
            },
        },
        "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "ticks": {"type": "integer", "minimum": 0},
        "ensemble": {"type": "integer", "minimum": 2},
        "interventions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind"],
                "additionalProperties": False,
                "properties": {
                    "kind": {"enum": ["immunize_nodes", "guarantee_edges",
                                      "set_rate", "set_policy"]},
                    "at_tick": {"type": "integer", "minimum": 0},
                    "nodes": {"type": "array",
                              "items": {"type": "integer", "minimum": 0}},
                    "edges": {"type": "array",
                              "items": {"type": "array", "minItems": 2,
                                        "maxItems": 2,
                                        "items": {"type": "integer",
                                                  "minimum": 0}}},
                    "rate": {"type": "number", "exclusiveMinimum": 0},
                    "policy": {"type": "object"},
                },
            },
        },
        "map_params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gamma": {"type": "number", "exclusiveMinimum": 0},
                "s": {"type": "number", "exclusiveMinimum": 0},
                "rho_c": {"type": "number", "exclusiveMinimum": 0,
                          "exclusiveMaximum": 1},
            },
        },
        "seed": {"type": "integer"},
    },
}


class ScenarioValidationError(ParameterError):
    """Schema violations, each rendered with its JSON pointer."""

    def __init__(self, errors: list[str]):
        super().__init__("scenario config invalid:\n" + "\n".join(errors))
        self.errors = errors


def validate_scenario(doc: dict) -> None:
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    problems = []
    for err in sorted(validator.iter_errors(doc), key=lambda e: e.json_path):
        problems.append(f"{err.json_path}: {err.message}")
    if problems:
        raise ScenarioValidationError(problems)


def _policy_from(doc: dict) -> PolicySpec:
    return PolicySpec(
        rate_rule=doc.get("rate_rule", "procyclical"),
        manual_rate=doc.get("manual_rate"),
        rate_floor=doc.get("rate_floor"),
        rate_driver=doc.get("rate_driver", "cumulative"),
    )


def _interventions_from(items: list[dict]) -> tuple[Intervention, ...]:
    out = []
    for item in items:
        kind = item["kind"]
        out.append(Intervention(
            kind=kind,
            nodes=tuple(item.get("nodes", ())),
            edges=tuple((int(u), int(v)) for u, v in item.get("edges", ())),
            rate=item.get("rate"),
            policy=_policy_from(item["policy"]) if kind == "set_policy"
            else None,
            applied_at_tick=int(item.get("at_tick", 0)),
        ))
    return tuple(out)


def load_scenario(doc: dict) -> ScenarioConfig:
    """Validate a scenario document and build the typed config."""
    validate_scenario(doc)
    policy = _policy_from(dict(doc.get("policy", {})))
    network = dict(doc["network"])
    if network.get("kind") == "dumbbell":
        from .networks import dumbbell_network
        net = dumbbell_network(cluster_size=network.get("cluster_size", 20),
                               n_bridges=network.get("n_bridges", 2),
                               cluster_kind=network.get("cluster_kind", "path"))
        network = {"kind": "explicit",
                   "edges": net.edges().tolist(), "n_nodes": net.n_nodes}
    return ScenarioConfig(
        network=network,
        resilience=dict(doc["resilience"]),
        i0=float(doc["i0"]),
        alpha=float(doc["alpha"]),
        seeds=tuple(doc["seeds"]),
        ticks=int(doc.get("ticks", 50)),
        policy=policy,
        seed=int(doc.get("seed", 0)),
        interventions=_interventions_from(doc.get("interventions", [])),
    )


def load_scenario_file(path: str | Path) -> tuple[ScenarioConfig, dict]:
    with open(path) as fh:
        doc = json.load(fh)
    return load_scenario(doc), doc


def combined_params_for(doc: dict, n_nodes: int) -> CombinedParams | None:
    """Mean-field map parameters implied by a scenario document.

    gamma/S default to the tree-like values (1, 1); rho_c defaults to
    1/(K-1) for regular substrates and is otherwise required in map_params.
    Returns None when no percolation threshold can be inferred.
    """
    mp = dict(doc.get("map_params", {}))
    rho_c = mp.get("rho_c")
    if rho_c is None:
        net = doc.get("network", {})
        if net.get("kind") in ("random_regular", "tree") and "k" in net:
            rho_c = 1.0 / (int(net["k"]) - 1)
        else:
            return None
    return CombinedParams(
        i0=float(doc["i0"]), k=float(doc["resilience"]["k"]),
        alpha=float(doc["alpha"]), beta=float(doc["resilience"]["beta"]),
        gamma=float(mp.get("gamma", 1.0)), s=float(mp.get("s", 1.0)),
        rho_c=float(rho_c), n_total=int(n_nodes))
