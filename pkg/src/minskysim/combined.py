"""Network-limited crisis accelerator: the min-capped map and its phase structure.

The rate reacts to failures as i_{t+1} = i0 * N_t^alpha; failures then follow
the lesser of the percolation cluster estimate and the bare ponzi count,

    N_{t+1} = min( S * (1 - (i/i_C)^beta)^(-gamma),  (i/k)^beta,  n_total )

with the percolation branch treated as +infinity once i >= i_C.  Up to three
fixed points exist: n_conv (attractive, small), n_div (repulsive) on the
percolation branch, and n_core (the bare-accelerator point) on the cap
branch.  Two rate thresholds organize the (N0, i0) plane into four phases:

    i0 < i_safe          only n_conv      (micro crisis / stable)
    i_safe < i0 < i_0C   all three        (all four phases)
    i0 > i_0C            only n_core      (instability / solid core)

The percolation-branch fixed points solve F(N) = 0 with

    F(N) = (i0/i_C)^beta * N^(alpha*beta + 1/gamma) - N^(1/gamma) + S^(1/gamma)

which collapses to a quadratic in (N/S)^(1/gamma) when alpha*beta*gamma = 1.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .loanmarket import DegenerateParametersError
from .trajectory import TerminationReason, Trajectory
from .validation import (ParameterError, require_in_range, require_positive,
                         require_positive_int)

TANGENCY_RTOL = 1e-9


class Regime(str, enum.Enum):
    ALL_THREE = "all_three"
    ONLY_CORE = "only_core"
    ONLY_CONV = "only_conv"
    TANGENT_CONV_DIV = "tangent_conv_div"
    TANGENT_DIV_CORE = "tangent_div_core"


class Phase(str, enum.Enum):
    MICRO_CRISIS = "micro_crisis"
    STABLE = "stable"
    MINSKY_INSTABILITY = "minsky_instability"
    SOLID_CORE = "solid_core"


class SolverError(RuntimeError):
    """Bisection failed to converge; carries the offending bracket."""

    def __init__(self, message: str, bracket: tuple[float, float]):
        super().__init__(f"{message} (bracket {bracket[0]!r}..{bracket[1]!r})")
        self.bracket = bracket


@dataclass(frozen=True)
class CombinedParams:
    i0: float
    k: float
    alpha: float
    beta: float
    gamma: float
    s: float
    rho_c: float
    n_total: int

    def __post_init__(self) -> None:
        require_positive("i0", self.i0)
        require_positive("k", self.k)
        require_positive("beta", self.beta)
        require_positive("gamma", self.gamma)
        require_positive("s", self.s)
        require_in_range("rho_c", self.rho_c, 0.0, 1.0)
        require_positive_int("n_total", self.n_total)
        float(self.alpha)

    # derived scales, always recomputed
    @property
    def i_c(self) -> float:
        return self.k * (self.rho_c * self.n_total) ** (1.0 / self.beta)

    @property
    def r_max(self) -> float:
        return self.k * self.n_total ** (1.0 / self.beta)

    @property
    def alpha_beta(self) -> float:
        return self.alpha * self.beta

    @property
    def alpha_beta_gamma(self) -> float:
        return self.alpha * self.beta * self.gamma

    def rho_of_rate(self, i: float) -> float:
        """Ponzi density at rate i: (i/k)^beta / n_total."""
        return (i / self.k) ** self.beta / self.n_total

    def rate_of_rho(self, rho: float) -> float:
        """Rate whose ponzi density is rho: k * (rho * n_total)^(1/beta)."""
        return self.k * (rho * self.n_total) ** (1.0 / self.beta)


@dataclass(frozen=True)
class Thresholds:
    i_safe: float
    n_safe: float
    i_0c: float
    n_0c: float
    rho_safe: float
    rho_0c: float
    # exact percolation/cap junction computed numerically (the closed-form
    # i_safe assumes the junction sits at i = i_C exactly)
    i_safe_numeric: float | None = None
    n_junction_numeric: float | None = None


@dataclass(frozen=True)
class FixedPointSet:
    regime: Regime
    n_conv: float | None = None
    n_div: float | None = None
    n_core: float | None = None

    def __post_init__(self) -> None:
        trio = (self.n_conv, self.n_div, self.n_core)
        if all(v is not None for v in trio):
            if not (trio[0] <= trio[1] <= trio[2]):
                raise SolverError("fixed points out of order", (trio[0], trio[2]))


def percolation_branch(i: float, params: CombinedParams) -> float:
    """S * (1 - (i/i_C)^beta)^(-gamma); +inf once i >= i_C (supercritical)."""
    x = (i / params.i_c) ** params.beta
    if x >= 1.0:
        return math.inf
    return params.s * (1.0 - x) ** (-params.gamma)


def step_combined(n_t: float, i_t: float,
                  params: CombinedParams) -> tuple[float, float]:
    """One cycle of the combined map: (i_next, N_next).

    The i_t argument is carried for trajectory bookkeeping; the update only
    reads N_t.  N_next is the min of the percolation branch, the bare ponzi
    count, and the population ceiling.
    """
    if n_t <= 0:
        raise ParameterError(f"n_t must be positive, got {n_t!r}")
    i_next = params.i0 * n_t ** params.alpha
    cap = (i_next / params.k) ** params.beta
    n_next = min(percolation_branch(i_next, params), cap, float(params.n_total))
    return i_next, n_next


def iterate_combined(params: CombinedParams, n0: float, max_steps: int = 100000,
                     tol: float = 1e-12) -> Trajectory:
    require_positive("n0", n0)
    n_prev, i_prev = float(n0), params.i0
    steps = [(0, n_prev, i_prev)]
    reason = TerminationReason.MAX_STEPS
    for t in range(1, max_steps + 1):
        i_t, n_t = step_combined(n_prev, i_prev, params)
        steps.append((t, n_t, i_t))
        i_prev = i_t
        if n_t <= 0 or not math.isfinite(n_t):
            reason = TerminationReason.COLLAPSED
            break
        if abs(n_t - n_prev) <= tol * n_t:
            reason = TerminationReason.CONVERGED
            break
        n_prev = n_t
    return Trajectory(steps=tuple(steps), terminated_reason=reason, tol=tol)


def thresholds(params: CombinedParams) -> Thresholds:
    """Rate thresholds bounding the three-fixed-point band, plus rho forms.

    i_safe = i_C * (k/i_C)^(alpha*beta)   (n_div meets n_core at N_safe)
    N_safe = (i_C/k)^beta = rho_C * n_total
    i_0C   = i_C * S^(-alpha) * (1+abg)^(-1/beta) * (1+1/abg)^(-alpha*gamma)
    N_0C   = S * (1 + 1/abg)^gamma        (n_conv meets n_div)

    with abg = alpha*beta*gamma.  The closed-form i_safe takes the junction of
    the percolation and cap branches at i = i_C; the exact junction is also
    located numerically and reported alongside.
    """
    abg = params.alpha_beta_gamma
    if abg <= 0:
        raise DegenerateParametersError(
            "thresholds require alpha > 0 (procyclical feedback)")
    i_c = params.i_c
    i_safe = i_c * (params.k / i_c) ** params.alpha_beta
    n_safe = (i_c / params.k) ** params.beta
    n_0c = params.s * (1.0 + 1.0 / abg) ** params.gamma
    i_0c = (i_c * params.s ** (-params.alpha)
            * (1.0 + abg) ** (-1.0 / params.beta)
            * (1.0 + 1.0 / abg) ** (-params.alpha * params.gamma))
    rho_safe = (i_safe / params.k) ** params.beta / params.n_total
    rho_0c = (i_0c / params.k) ** params.beta / params.n_total

    i_junction, n_junction = _numeric_junction(params)
    i_safe_num = None
    if i_junction is not None:
        i_safe_num = i_junction * n_junction ** (-params.alpha)
    return Thresholds(i_safe=i_safe, n_safe=n_safe, i_0c=i_0c, n_0c=n_0c,
                      rho_safe=rho_safe, rho_0c=rho_0c,
                      i_safe_numeric=i_safe_num, n_junction_numeric=n_junction)


def _numeric_junction(params: CombinedParams) -> tuple[float | None, float | None]:
    """Upper crossing of cap (i/k)^beta and percolation branch below i_C."""
    def g(i: float) -> float:
        return (i / params.k) ** params.beta - percolation_branch(i, params)

    hi = params.i_c * (1.0 - 1e-13)
    if not (g(hi) < 0):  # percolation branch must dominate at the top
        return None, None
    lo = None
    for frac in np.linspace(0.99, 0.01, 99):
        cand = params.i_c * frac
        if g(cand) > 0:
            lo = cand
            break
    if lo is None:
        return None, None
    a, b = lo, hi
    for _ in range(200):
        mid = 0.5 * (a + b)
        if g(mid) > 0:
            a = mid
        else:
            b = mid
    i_j = 0.5 * (a + b)
    return i_j, (i_j / params.k) ** params.beta


def _fixed_point_residual(n: float, params: CombinedParams) -> float:
    """F(N) whose roots are the percolation-branch fixed points."""
    ratio = (params.i0 / params.i_c) ** params.beta
    g = 1.0 / params.gamma
    return ratio * n ** (params.alpha_beta + g) - n ** g + params.s ** g


def _bisect(f, lo: float, hi: float, max_iter: int = 200) -> float:
    """Sign-change bisection; f(lo) and f(hi) must straddle zero."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise SolverError("bracket does not straddle a sign change", (lo, hi))
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0 or (hi - lo) <= 1e-15 * max(abs(lo), abs(hi)):
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    if (hi - lo) > 1e-9 * max(abs(lo), abs(hi), 1.0):
        raise SolverError("bisection failed to converge in 200 steps", (lo, hi))
    return 0.5 * (lo + hi)


def _percolation_roots_quadratic(params: CombinedParams) -> tuple[float, float]:
    """Closed-form n_conv/n_div for alpha*beta*gamma = 1.

    Quadratic in (N/S)^(1/gamma) with a = (i0/i_C)^beta * S^(1/gamma):
    roots 2/(1+sqrt(1-4a)) and (1+sqrt(1-4a))/(2a) (cancellation-safe forms).
    """
    a = (params.i0 / params.i_c) ** params.beta * params.s ** (1.0 / params.gamma)
    disc = max(1.0 - 4.0 * a, 0.0)
    root = math.sqrt(disc)
    x_minus = 2.0 / (1.0 + root)
    x_plus = (1.0 + root) / (2.0 * a)
    return (params.s * x_minus ** params.gamma,
            params.s * x_plus ** params.gamma)


def _percolation_roots_bisection(params: CombinedParams) -> tuple[float, float]:
    """General n_conv/n_div: bisection on F split at the turning point."""
    ab, g = params.alpha_beta, params.gamma
    abg = params.alpha_beta_gamma
    ratio = (params.i_c / params.i0) ** params.beta
    n_turn = (ratio / (1.0 + abg)) ** (1.0 / ab)
    n_top = (params.i_c / params.i0) ** (1.0 / params.alpha)
    f = lambda n: _fixed_point_residual(n, params)
    if f(n_turn) > 0:
        raise SolverError("no percolation-branch roots below tangency",
                          (0.0, n_top))
    n_conv = _bisect(f, 1e-300, n_turn)
    n_div = _bisect(f, n_turn, n_top)
    return n_conv, n_div


def core_fixed_point(params: CombinedParams) -> float:
    """Bare-accelerator fixed point (i0/k)^(beta/(1-alpha*beta))."""
    ab = params.alpha_beta
    if ab == 1.0:
        raise DegenerateParametersError("n_core is singular at alpha*beta = 1")
    return (params.i0 / params.k) ** (params.beta / (1.0 - ab))


def solve_fixed_points(params: CombinedParams) -> FixedPointSet:
    """All fixed points of the combined map plus the regime they imply.

    Regime detection compares i0 with i_safe and i_0C (tangency declared
    within 1e-9 relative).  n_conv/n_div come from the closed-form quadratic
    when alpha*beta*gamma = 1 (within 1e-9) and from bracketed bisection
    otherwise; n_core from the bare-accelerator formula.
    """
    if params.alpha <= 0:
        raise DegenerateParametersError(
            "fixed-point structure requires alpha > 0")
    if params.alpha_beta >= 1.0:
        raise DegenerateParametersError(
            "combined phase structure assumes alpha*beta < 1; "
            "iterate step_combined directly for alpha*beta >= 1")
    th = thresholds(params)
    i0 = params.i0

    def roots() -> tuple[float, float]:
        if abs(params.alpha_beta_gamma - 1.0) <= 1e-9:
            return _percolation_roots_quadratic(params)
        return _percolation_roots_bisection(params)

    if abs(i0 - th.i_0c) <= TANGENCY_RTOL * th.i_0c:
        return FixedPointSet(regime=Regime.TANGENT_CONV_DIV,
                             n_conv=th.n_0c, n_div=th.n_0c,
                             n_core=core_fixed_point(params))
    if abs(i0 - th.i_safe) <= TANGENCY_RTOL * th.i_safe:
        n_conv, _ = roots()
        return FixedPointSet(regime=Regime.TANGENT_DIV_CORE,
                             n_conv=n_conv, n_div=th.n_safe, n_core=th.n_safe)
    if i0 > th.i_0c:
        return FixedPointSet(regime=Regime.ONLY_CORE,
                             n_core=core_fixed_point(params))
    if i0 < th.i_safe:
        n_conv, _ = roots()
        return FixedPointSet(regime=Regime.ONLY_CONV, n_conv=n_conv)
    n_conv, n_div = roots()
    return FixedPointSet(regime=Regime.ALL_THREE, n_conv=n_conv, n_div=n_div,
                         n_core=core_fixed_point(params))


def classify_phase(params: CombinedParams, n0: float,
                   fixed_points: FixedPointSet | None = None) -> Phase:
    """Phase of the initial shock N0 under the applicable regime.

    all_three: micro_crisis < n_conv <= stable < n_div <= instability
    < n_core <= solid_core.  Collapsed regimes merge bands: below i_safe
    everything right of n_conv is stable; above i_0C everything left of
    n_core is instability.
    """
    if n0 < 1:
        raise ParameterError("n0 must be >= 1")
    fps = fixed_points or solve_fixed_points(params)
    if fps.regime in (Regime.ONLY_CORE,):
        return Phase.MINSKY_INSTABILITY if n0 < fps.n_core else Phase.SOLID_CORE
    if fps.regime in (Regime.ONLY_CONV,):
        return Phase.MICRO_CRISIS if n0 < fps.n_conv else Phase.STABLE
    if fps.regime is Regime.TANGENT_CONV_DIV:
        if n0 < fps.n_conv:
            return Phase.MICRO_CRISIS
        if n0 == fps.n_conv:
            return Phase.STABLE
        return (Phase.MINSKY_INSTABILITY if n0 < fps.n_core
                else Phase.SOLID_CORE)
    if fps.regime is Regime.TANGENT_DIV_CORE:
        if n0 < fps.n_conv:
            return Phase.MICRO_CRISIS
        return Phase.STABLE if n0 < fps.n_div else Phase.SOLID_CORE
    # all three fixed points present
    if n0 < fps.n_conv:
        return Phase.MICRO_CRISIS
    if n0 < fps.n_div:
        return Phase.STABLE
    if n0 < fps.n_core:
        return Phase.MINSKY_INSTABILITY
    return Phase.SOLID_CORE


PHASE_ATTRACTOR = {
    Phase.MICRO_CRISIS: "n_conv",
    Phase.STABLE: "n_conv",
    Phase.MINSKY_INSTABILITY: "n_core",
    Phase.SOLID_CORE: "n_core",
}


@dataclass(frozen=True)
class PhaseGrid:
    """Phase labels over an (N0, i0-or-rho0) grid plus boundary curves."""

    n0_values: tuple[float, ...]
    axis: str  # "i0" or "rho0"
    axis_values: tuple[float, ...]
    labels: tuple[tuple[str, ...], ...]  # [axis_index][n0_index]
    boundaries: dict
    thresholds: dict

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n0", self.axis, "phase"])
            for av, row in zip(self.axis_values, self.labels):
                for n0, label in zip(self.n0_values, row):
                    writer.writerow([repr(n0), repr(av), label])

    def sidecar(self) -> dict:
        return {"axis": self.axis, "axis_values": list(self.axis_values),
                "n0_values": list(self.n0_values),
                "boundaries": self.boundaries, "thresholds": self.thresholds}


def phase_diagram(params: CombinedParams, n0_values: Sequence[float],
                  axis_values: Sequence[float], axis: str = "i0") -> PhaseGrid:
    """Label every (N0, axis) cell; fixed points solved once per row.

    axis='rho0' converts each initial ponzi density to its rate via
    i0 = k * (rho0 * n_total)^(1/beta) before solving.  Refuses alpha*beta>=1
    (no closed-form labels there; iterate the map directly instead).
    """
    if params.alpha_beta >= 1.0:
        raise DegenerateParametersError(
            "phase_diagram refuses closed-form labels for alpha*beta >= 1")
    if axis not in ("i0", "rho0"):
        raise ParameterError("axis must be 'i0' or 'rho0'")
    n0_values = tuple(float(v) for v in n0_values)
    axis_values = tuple(float(v) for v in axis_values)
    if any(v <= 0 for v in n0_values) or any(v <= 0 for v in axis_values):
        raise ParameterError("grid bounds must be positive")
    from dataclasses import replace

    labels = []
    bounds = {"n_conv": [], "n_div": [], "n_core": []}
    th_out = None
    for av in axis_values:
        i0 = av if axis == "i0" else params.rate_of_rho(av)
        row_params = replace(params, i0=i0)
        fps = solve_fixed_points(row_params)
        if th_out is None:
            th = thresholds(row_params)
            th_out = {"i_safe": th.i_safe, "n_safe": th.n_safe,
                      "i_0c": th.i_0c, "n_0c": th.n_0c,
                      "rho_safe": th.rho_safe, "rho_0c": th.rho_0c}
        bounds["n_conv"].append(fps.n_conv)
        bounds["n_div"].append(fps.n_div)
        bounds["n_core"].append(fps.n_core)
        labels.append(tuple(
            classify_phase(row_params, n0, fixed_points=fps).value
            for n0 in n0_values))
    return PhaseGrid(n0_values=n0_values, axis=axis, axis_values=axis_values,
                     labels=tuple(labels), boundaries=bounds,
                     thresholds=th_out or {})
