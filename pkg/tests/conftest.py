from dataclasses import replace

import numpy as np

from minskysim import CombinedParams, core_fixed_point, thresholds


def sample_combined_params(rng: np.random.Generator, unit_abg: bool = False,
                           require_band: bool = True,
                           reachable_core: bool = False) -> CombinedParams:
    """Draw map parameters admitting the three-fixed-point band.

    unit_abg pins alpha*beta*gamma = 1 (the closed-form quadratic case).
    reachable_core additionally requires n_core(2 * i_0C) <= n_total, so the
    bare-accelerator fixed point stays below the population ceiling even well
    above the tangency rate (small alpha*beta, sparse ponzi threshold).
    """
    for _ in range(500):
        if reachable_core:
            gamma = rng.uniform(4.0, 8.0)
            beta = rng.uniform(1.05, 1.8)
            rho_c = rng.uniform(0.05, 0.15)
            s = rng.uniform(1.0, 1.5)
        else:
            gamma = rng.uniform(1.2, 3.0)
            beta = rng.uniform(1.05, 2.0)
            rho_c = rng.uniform(0.2, 0.6)
            s = rng.uniform(1.0, 5.0)
        if unit_abg:
            alpha = 1.0 / (beta * gamma)
        else:
            abg = rng.uniform(0.4, 3.0)
            alpha = abg / (beta * gamma)
        ab = alpha * beta
        if ab >= 0.95:
            continue
        n_total = int(rng.integers(10_000, 1_000_000))
        if reachable_core:
            # n_total <= c^(-1/(alpha*beta)) keeps n_core(2 i_0C) <= n_total
            abg = alpha * beta * gamma
            c = (2.0 ** beta * rho_c * s ** (-ab) * (1 + abg) ** (-1.0)
                 * (1 + 1 / abg) ** (-abg))
            cap = c ** (-1.0 / ab)
            if cap < 2_000:
                continue
            n_total = int(min(0.5 * cap, 1e7))
        params = CombinedParams(
            i0=1.0,  # placeholder, callers position i0 inside the band
            k=rng.uniform(5e-4, 5e-3),
            alpha=alpha, beta=beta, gamma=gamma, s=s, rho_c=rho_c,
            n_total=n_total,
        )
        th = thresholds(params)
        if require_band and not (th.i_safe < th.i_0c and th.n_0c < th.n_safe):
            continue
        if reachable_core:
            probe = replace(params, i0=2.0 * th.i_0c)
            if core_fixed_point(probe) > params.n_total:
                continue
        return params
    raise AssertionError("could not sample a valid parameter set")


def with_band_rate(params: CombinedParams, frac: float) -> CombinedParams:
    """Place i0 geometrically at ``frac`` between i_safe and i_0C."""
    th = thresholds(params)
    i0 = th.i_safe * (th.i_0c / th.i_safe) ** frac
    return replace(params, i0=i0)
