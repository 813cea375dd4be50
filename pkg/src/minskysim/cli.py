"""Command-line driver: fixed points, sweeps, simulations, the live service.

Every run that writes files also writes a manifest.json (command, resolved
config, master seed, tool version, output paths) sufficient to reproduce the
run byte-for-byte.  Exit codes: 0 success, 2 config error, 3 numerical or
solver error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .accelerator import (AcceleratorParams, accelerator_fixed_point,
                          accelerator_stability, iterate_accelerator)
from .abm import detect_bottleneck, run_ensemble, run_scenario
from .combined import (CombinedParams, DegenerateParametersError, SolverError,
                       classify_phase, iterate_combined, phase_diagram,
                       solve_fixed_points, thresholds)
from .loanmarket import (LoanMarketParams, classify_stability,
                         iterate_loan_market, loan_fixed_point)
from .percolation import ScalingFitError, estimate_scaling
from .scenario import (ScenarioValidationError, combined_params_for,
                       load_scenario_file)
from .validation import ParameterError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

TICK_CSV_COLUMNS_V1 = ["tick", "new_failures", "cumulative_failed",
                       "n_ponzi", "i_current"]
SCALING_CSV_COLUMNS_V1 = ["rho", "mean_avalanche_size"]

log = logging.getLogger("minskysim")


def _args_dict(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _parse_range(spec: str) -> np.ndarray:
    """'lo:hi:steps' -> log-spaced grid (the phase axes are log axes)."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ParameterError(f"range must be lo:hi:steps, got {spec!r}")
    lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    if lo <= 0 or hi <= lo or steps < 1:
        raise ParameterError(f"bad range {spec!r}")
    return np.geomspace(lo, hi, steps)


def _write_manifest(out_dir: Path, command: str, config: dict, seed: int,
                    outputs: list[str]) -> None:
    manifest = {
        "command": command,
        "config": config,
        "master_seed": seed,
        "tool_version": __version__,
        "csv_columns": {"ticks": TICK_CSV_COLUMNS_V1,
                        "scaling": SCALING_CSV_COLUMNS_V1,
                        "trajectory": TRAJECTORY_CSV_COLUMNS_V1},
        "outputs": outputs,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def _emit(report: dict, fmt: str) -> None:
    def flat(d, prefix=""):
        for key, value in d.items():
            if isinstance(value, dict):
                yield from flat(value, f"{prefix}{key}.")
            else:
                yield f"{prefix}{key}", value

    if fmt == "json":
        print(json.dumps(report, indent=2, sort_keys=True))
    elif fmt == "csv":
        print("key,value")
        for key, value in flat(report):
            print(f"{key},{value}")
    else:
        width = max(len(k) for k, _ in flat(report))
        for key, value in flat(report):
            print(f"{key:<{width}}  {value}")


def cmd_fixed_points(args: argparse.Namespace) -> int:
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
        for key in ("i0", "k", "alpha", "beta", "mu", "gamma", "s", "rho_c",
                    "n_total"):
            if getattr(args, key, None) is None and key in doc:
                setattr(args, key, doc[key])
    for key in ("i0", "k", "alpha", "beta"):
        if getattr(args, key) is None:
            raise ParameterError(f"missing parameter --{key} (flag or config)")
    report: dict = {}
    acc = AcceleratorParams(i0=args.i0, k=args.k, alpha=args.alpha,
                            beta=args.beta)
    if acc.alpha_beta != 1.0:
        n_fix, i_fix = accelerator_fixed_point(acc)
        label, eigs = accelerator_stability(acc)
        report["accelerator"] = {"n_fix": n_fix, "i_fix": i_fix,
                                 "stability": label,
                                 "eigenvalues": list(eigs)}
    else:
        report["accelerator"] = {"error": "alpha*beta = 1 is degenerate"}
    if args.mu is not None:
        loans = {}
        for mode in ("decreasing", "increasing"):
            p = LoanMarketParams(i0=args.i0, k=args.k, mu=args.mu,
                                 alpha=abs(args.alpha), returns_mode=mode)
            try:
                n_fix, i_fix = loan_fixed_point(p)
                label, boundary = classify_stability(p)
                loans[mode] = {"n_fix": n_fix, "i_fix": i_fix,
                               "stability": label, "boundary": boundary}
            except DegenerateParametersError as exc:
                loans[mode] = {"error": str(exc)}
        report["loan_market"] = loans
    if args.gamma is not None:
        p = CombinedParams(i0=args.i0, k=args.k, alpha=args.alpha,
                           beta=args.beta, gamma=args.gamma, s=args.s,
                           rho_c=args.rho_c, n_total=args.n_total)
        th = thresholds(p)
        fps = solve_fixed_points(p)
        report["combined"] = {
            "regime": fps.regime.value,
            "n_conv": fps.n_conv, "n_div": fps.n_div, "n_core": fps.n_core,
            "thresholds": {"i_safe": th.i_safe, "n_safe": th.n_safe,
                           "i_0c": th.i_0c, "n_0c": th.n_0c,
                           "rho_safe": th.rho_safe, "rho_0c": th.rho_0c,
                           "i_safe_numeric": th.i_safe_numeric},
        }
    _emit(report, args.format)
    return EXIT_OK


TRAJECTORY_CSV_COLUMNS_V1 = ["t", "n", "i"]


def cmd_trajectory(args: argparse.Namespace) -> int:
    """Iterate one of the maps from N0 and serialize the (t, N, i) chain."""
    if args.map == "loans":
        params = LoanMarketParams(i0=args.i0, k=args.k, mu=args.mu,
                                  alpha=args.alpha,
                                  returns_mode=args.returns,
                                  step_variant=args.variant, s=args.s)
        traj = iterate_loan_market(params, args.n0, max_steps=args.steps,
                                   tol=args.tol)
    elif args.map == "accelerator":
        params = AcceleratorParams(i0=args.i0, k=args.k, alpha=args.alpha,
                                   beta=args.beta, n_total=args.n_total)
        traj = iterate_accelerator(params, args.n0, max_steps=args.steps,
                                   tol=args.tol)
    else:
        params = CombinedParams(i0=args.i0, k=args.k, alpha=args.alpha,
                                beta=args.beta, gamma=args.gamma,
                                s=args.s, rho_c=args.rho_c,
                                n_total=args.n_total)
        traj = iterate_combined(params, args.n0, max_steps=args.steps,
                                tol=args.tol)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "trajectory.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_CSV_COLUMNS_V1)
        for t, n, i in traj.steps:
            writer.writerow([t, repr(n), repr(i)])
    summary = {"terminated_reason": traj.terminated_reason.value,
               "steps": len(traj.steps) - 1,
               "final_n": traj.final_n, "final_i": traj.final_i}
    summary_path = out_dir / "trajectory_summary.json"
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    _write_manifest(out_dir, "trajectory", _args_dict(args), args.seed,
                    [csv_path.name, summary_path.name])
    print(f"wrote {csv_path} ({summary['terminated_reason']}, "
          f"final N = {summary['final_n']:.6g})")
    return EXIT_OK


def cmd_sweep_phase(args: argparse.Namespace) -> int:
    params = CombinedParams(i0=1.0, k=args.k, alpha=args.alpha,
                            beta=args.beta, gamma=args.gamma, s=args.s,
                            rho_c=args.rho_c, n_total=args.n_total)
    n0_vals = _parse_range(args.n0)
    axis = "rho0" if args.rho0 else "i0"
    axis_vals = _parse_range(args.rho0 if args.rho0 else args.i0)
    grid = phase_diagram(params, n0_vals, axis_vals, axis=axis)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "phase_grid.csv"
    side_path = out_dir / "phase_boundaries.json"
    grid.to_csv(csv_path)
    with open(side_path, "w") as fh:
        json.dump(grid.sidecar(), fh, indent=2, sort_keys=True)
    _write_manifest(out_dir, "sweep phase", _args_dict(args) | {"axis": axis},
                    args.seed, [csv_path.name, side_path.name])
    print(f"wrote {csv_path} and {side_path}")
    return EXIT_OK


def cmd_sweep_scaling(args: argparse.Namespace) -> int:
    family = {"kind": args.family, "n": args.n, "k": args.degree,
              "seed": args.seed}
    if args.family == "erdos_renyi":
        family = {"kind": "erdos_renyi", "n": args.n,
                  "mean_degree": float(args.degree), "seed": args.seed}
    elif args.family == "tree":
        family = {"kind": "tree", "k": args.degree, "depth": args.depth,
                  "seed": args.seed}
    rho_grid = _parse_range(args.rho)
    fit = estimate_scaling(family, rho_grid, args.runs, seed=args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "scaling_means.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCALING_CSV_COLUMNS_V1)
        for rho, mean in zip(fit.rho_grid, fit.means):
            writer.writerow([repr(rho), repr(mean)])
    fit_path = out_dir / "scaling_fit.json"
    with open(fit_path, "w") as fh:
        json.dump({"rho_c": fit.rho_c, "gamma": fit.gamma, "s": fit.s,
                   "residuals": list(fit.residuals),
                   "rho_grid_used": list(fit.rho_grid_used)},
                  fh, indent=2, sort_keys=True)
    _write_manifest(out_dir, "sweep scaling", _args_dict(args), args.seed,
                    [csv_path.name, fit_path.name])
    print(f"wrote {csv_path} and {fit_path}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    config, doc = load_scenario_file(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
        doc = doc | {"seed": args.seed}
    if args.ticks is not None:
        config = replace(config, ticks=args.ticks)
        doc = doc | {"ticks": args.ticks}
    if args.ensemble is None and "ensemble" in doc:
        args.ensemble = int(doc["ensemble"])
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []

    state = run_scenario(config)
    csv_path = out_dir / "ticks.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TICK_CSV_COLUMNS_V1)
        if state.tick > 0:  # zero-tick scenarios emit a header-only CSV
            cumulative = 0
            for t, (new, ponzi, rate) in enumerate(zip(
                    state.per_tick_failures, state.per_tick_ponzi,
                    state.per_tick_rates)):
                cumulative += new
                writer.writerow([t, new, cumulative, ponzi, repr(rate)])
    outputs.append(csv_path.name)

    mapping = combined_params_for(doc, state.network.n_nodes)
    annotation = None
    if mapping is not None and mapping.alpha_beta < 1 and mapping.alpha > 0:
        try:
            n0 = max(len(config.seeds), 1)
            annotation = classify_phase(mapping, n0).value
        except (DegenerateParametersError, SolverError):
            annotation = None
    bottleneck = detect_bottleneck(state.per_tick_failures)
    summary = {
        "ticks": state.tick,
        "cumulative_failed": state.cumulative_failed,
        "final_rate": state.i_current,
        "final_ponzi": state.per_tick_ponzi[-1],
        "phase_annotation": annotation,
        "bottleneck": None if bottleneck is None else
            {"tick": bottleneck.tick, "smoothed_min": bottleneck.smoothed_min},
    }
    if args.ensemble is not None:
        stats = run_ensemble(config, args.ensemble)
        ens_path = out_dir / "ensemble.json"
        with open(ens_path, "w") as fh:
            json.dump({
                "n_runs": stats.n_runs,
                "final_failures": stats.final_failures.tolist(),
                "mean_per_tick": stats.mean_per_tick.tolist(),
                "var_per_tick": stats.var_per_tick.tolist(),
                "coefficient_of_variation": stats.coefficient_of_variation,
            }, fh, indent=2, sort_keys=True)
        outputs.append(ens_path.name)
        summary["ensemble_runs"] = stats.n_runs
    summary_path = out_dir / "summary.json"
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    outputs.append(summary_path.name)
    _write_manifest(out_dir, "simulate", doc, config.seed, outputs)
    print(f"wrote {', '.join(str(out_dir / o) for o in outputs)}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app
    app = create_app(static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minskysim",
        description="Minsky instability engine: maps, contagion, phases")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    fp = sub.add_parser("fixed-points", help="fixed points and thresholds")
    fp.add_argument("--config", help="JSON file with parameter keys; "
                                     "flags override")
    fp.add_argument("--i0", type=float)
    fp.add_argument("--k", type=float)
    fp.add_argument("--alpha", type=float)
    fp.add_argument("--beta", type=float)
    fp.add_argument("--mu", type=float, help="also report loan-market points")
    fp.add_argument("--gamma", type=float,
                    help="also report combined map (needs --s --rho-c --n-total)")
    fp.add_argument("--s", type=float, default=1.0)
    fp.add_argument("--rho-c", dest="rho_c", type=float, default=0.5)
    fp.add_argument("--n-total", dest="n_total", type=int, default=100000)
    fp.add_argument("--format", choices=("json", "table", "csv"),
                    default="json")
    fp.set_defaults(func=cmd_fixed_points)

    tr = sub.add_parser("trajectory", help="iterate a map, write (t, N, i) CSV")
    tr.add_argument("--map", choices=("loans", "accelerator", "combined"),
                    required=True)
    tr.add_argument("--n0", type=float, required=True)
    tr.add_argument("--steps", type=int, default=1000)
    tr.add_argument("--tol", type=float, default=1e-10)
    tr.add_argument("--i0", type=float, required=True)
    tr.add_argument("--k", type=float, required=True)
    tr.add_argument("--alpha", type=float, required=True)
    tr.add_argument("--beta", type=float, default=1.3)
    tr.add_argument("--mu", type=float, default=2.0)
    tr.add_argument("--returns", choices=("decreasing", "increasing"),
                    default="decreasing")
    tr.add_argument("--variant", choices=("full", "damped", "incremental"),
                    default="full")
    tr.add_argument("--gamma", type=float, default=1.0)
    tr.add_argument("--s", type=float, default=1.0,
                    help="damping fraction (loans variants) or the "
                         "percolation prefactor (combined)")
    tr.add_argument("--rho-c", dest="rho_c", type=float, default=0.5)
    tr.add_argument("--n-total", dest="n_total", type=int, default=10**9)
    tr.add_argument("--out", required=True)
    tr.add_argument("--seed", type=int, default=0)
    tr.set_defaults(func=cmd_trajectory)

    sweep = sub.add_parser("sweep", help="grid sweeps writing CSV artifacts")
    sweep_sub = sweep.add_subparsers(dest="sweep_kind", required=True)

    ph = sweep_sub.add_parser("phase", help="phase diagram over (N0, i0|rho0)")
    ph.add_argument("--k", type=float, required=True)
    ph.add_argument("--alpha", type=float, required=True)
    ph.add_argument("--beta", type=float, required=True)
    ph.add_argument("--gamma", type=float, required=True)
    ph.add_argument("--s", type=float, default=1.0)
    ph.add_argument("--rho-c", dest="rho_c", type=float, required=True)
    ph.add_argument("--n-total", dest="n_total", type=int, required=True)
    ph.add_argument("--n0", required=True, help="lo:hi:steps (log spaced)")
    ph.add_argument("--i0", help="lo:hi:steps (log spaced)")
    ph.add_argument("--rho0", help="lo:hi:steps (log spaced), replaces --i0")
    ph.add_argument("--out", required=True)
    ph.add_argument("--seed", type=int, default=0)
    ph.set_defaults(func=cmd_sweep_phase)

    sc = sweep_sub.add_parser("scaling", help="Monte Carlo scaling-law fit")
    sc.add_argument("--family", choices=("random_regular", "erdos_renyi",
                                         "tree"), default="random_regular")
    sc.add_argument("--n", type=int, default=100000)
    sc.add_argument("--degree", type=int, default=4,
                    help="K (or mean degree for erdos_renyi)")
    sc.add_argument("--depth", type=int, default=16, help="tree depth")
    sc.add_argument("--rho", required=True, help="lo:hi:steps (log spaced)")
    sc.add_argument("--runs", type=int, default=1000)
    sc.add_argument("--out", required=True)
    sc.add_argument("--seed", type=int, default=0)
    sc.set_defaults(func=cmd_sweep_scaling)

    sim = sub.add_parser("simulate", help="run a scenario config")
    sim.add_argument("--config", required=True)
    sim.add_argument("--ticks", type=int)
    sim.add_argument("--ensemble", type=int)
    sim.add_argument("--out", required=True)
    sim.add_argument("--seed", type=int)
    sim.set_defaults(func=cmd_simulate)

    srv = sub.add_parser("serve", help="start the session service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    srv.add_argument("--static", help="static bundle dir (regulator console)")
    srv.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("MINSKY_LOG", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "sweep" and args.sweep_kind == "phase":
        if not (args.i0 is None) ^ (args.rho0 is None):
            parser.error("sweep phase needs exactly one of --i0 / --rho0")
    try:
        return args.func(args)
    except (SolverError, ScalingFitError, DegenerateParametersError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ScenarioValidationError, ParameterError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
