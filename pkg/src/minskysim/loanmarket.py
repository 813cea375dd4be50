"""Marshall-Walras loan-market iterations for both returns regimes.

Demand for loans falls with the interest rate, N(i) = (i/k)^(-mu).  Supply
prices the loans either with decreasing returns, i(N) = i0 * N^alpha, or with
increasing returns, i(N) = i0 * N^(-alpha).  Alternating the two curves gives
a tatonnement whose fixed point is attractive iff alpha*mu < 1; the full-step
trajectory has the closed form

    N_t = N_fix * (N0 / N_fix)^((-+ alpha*mu)^t)

with the alternating sign in the decreasing-returns regime.  Damped and
incremental step variants trade the closed form for wider convergence.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .trajectory import COLLAPSE_GUARD, DIVERGENCE_GUARD, TerminationReason, Trajectory
from .validation import ParameterError, require_in_range, require_positive


class ReturnsMode(str, enum.Enum):
    DECREASING = "decreasing"
    INCREASING = "increasing"


class StepVariant(str, enum.Enum):
    FULL = "full"
    DAMPED = "damped"
    INCREMENTAL = "incremental"


class DegenerateParametersError(ParameterError):
    """Parameter combination for which the requested formula is singular."""


@dataclass(frozen=True)
class LoanMarketParams:
    i0: float
    k: float
    mu: float
    alpha: float
    returns_mode: ReturnsMode = ReturnsMode.DECREASING
    step_variant: StepVariant = StepVariant.FULL
    s: float = 0.1  # damping fraction, used by damped/incremental variants

    def __post_init__(self) -> None:
        require_positive("i0", self.i0)
        require_positive("k", self.k)
        require_positive("mu", self.mu)
        require_positive("alpha", self.alpha)
        object.__setattr__(self, "returns_mode", ReturnsMode(self.returns_mode))
        object.__setattr__(self, "step_variant", StepVariant(self.step_variant))
        if self.step_variant is not StepVariant.FULL:
            require_in_range("s", self.s, 0.0, 1.0, inclusive=(False, True))

    @property
    def supply_exponent(self) -> float:
        """Signed exponent of the supply curve i(N) = i0 * N^(+-alpha)."""
        return self.alpha if self.returns_mode is ReturnsMode.DECREASING else -self.alpha

    def demand(self, i: float) -> float:
        return (i / self.k) ** (-self.mu)

    def supply_rate(self, n: float) -> float:
        return self.i0 * n ** self.supply_exponent


def loan_fixed_point(params: LoanMarketParams) -> tuple[float, float]:
    """Intersection of demand and supply curves.

    decreasing: N_fix = (k/i0)^(mu/(1+alpha*mu)), i_fix = (i0*k^(alpha*mu))^(1/(1+alpha*mu))
    increasing: N_fix = (k/i0)^(mu/(1-alpha*mu)), i_fix = (i0/k^(alpha*mu))^(1/(1-alpha*mu))
    """
    am = params.alpha * params.mu
    if params.returns_mode is ReturnsMode.DECREASING:
        n_fix = (params.k / params.i0) ** (params.mu / (1.0 + am))
        i_fix = (params.i0 * params.k ** am) ** (1.0 / (1.0 + am))
    else:
        if am == 1.0:
            raise DegenerateParametersError(
                "increasing-returns fixed point is singular at alpha*mu = 1")
        n_fix = (params.k / params.i0) ** (params.mu / (1.0 - am))
        i_fix = (params.i0 / params.k ** am) ** (1.0 / (1.0 - am))
    return n_fix, i_fix


def _full_step(params: LoanMarketParams, n_prev: float) -> tuple[float, float]:
    i_next = params.supply_rate(n_prev)
    return params.demand(i_next), i_next


def _signed_pow(x: float, a: float) -> float:
    return math.copysign(abs(x) ** a, x) if x != 0.0 else 0.0


def iterate_loan_market(params: LoanMarketParams, n0: float,
                        max_steps: int = 1000, tol: float = 1e-10) -> Trajectory:
    """Run the tatonnement from N0 and report the (t, N, i) chain.

    Stops on convergence (|dN| <= tol*N), on the divergence/collapse guards
    (N outside [1e-12, 1e12]), or after max_steps.
    """
    require_positive("n0", n0)
    n_prev = float(n0)
    n_before = n_prev  # N_{t-1} for the incremental variant; first increment 0
    i_prev = params.i0
    steps = [(0, n_prev, i_prev)]
    reason = TerminationReason.MAX_STEPS
    for t in range(1, max_steps + 1):
        if params.step_variant is StepVariant.FULL:
            n_t, i_t = _full_step(params, n_prev)
        elif params.step_variant is StepVariant.DAMPED:
            i_t = params.s * params.supply_rate(n_prev) + (1.0 - params.s) * i_prev
            n_t = params.s * params.demand(i_t) + (1.0 - params.s) * n_prev
        else:  # incremental rate update, demand step stays full
            i_t = i_prev + params.s * _signed_pow(n_prev - n_before, params.alpha)
            if i_t <= 0.0:
                steps.append((t, n_prev, i_t))
                reason = TerminationReason.COLLAPSED
                break
            n_t = params.demand(i_t)
        steps.append((t, n_t, i_t))
        if not math.isfinite(n_t) or n_t > DIVERGENCE_GUARD:
            reason = TerminationReason.DIVERGED
            break
        if n_t < COLLAPSE_GUARD:
            reason = TerminationReason.COLLAPSED
            break
        if abs(n_t - n_prev) <= tol * n_t:
            reason = TerminationReason.CONVERGED
            break
        n_before, n_prev, i_prev = n_prev, n_t, i_t
    return Trajectory(steps=tuple(steps), terminated_reason=reason, tol=tol)


def closed_form_loans(params: LoanMarketParams, n0: float, t: int) -> float:
    """Exact N_t of the full-step map, evaluated in log space.

    Exponent is (-alpha*mu)^t for decreasing returns (oscillating approach)
    and (alpha*mu)^t for increasing returns (one-sided).  Returns a signed
    infinity when the result overflows the double range.
    """
    require_positive("n0", n0)
    if params.step_variant is not StepVariant.FULL:
        raise ParameterError("closed form exists only for the full-step variant")
    if t < 0:
        raise ParameterError("t must be a nonnegative integer")
    am = params.alpha * params.mu
    base = -am if params.returns_mode is ReturnsMode.DECREASING else am
    n_fix, _ = loan_fixed_point(params)
    delta0 = math.log(n0) - math.log(n_fix)
    if delta0 == 0.0:
        return n_fix
    # (base)^t without overflow: sign and log-magnitude split
    sign = 1.0 if (base >= 0 or t % 2 == 0) else -1.0
    if base == 0.0:
        weight = 1.0 if t == 0 else 0.0
    else:
        log_w = t * math.log(abs(base))
        weight = sign * math.exp(log_w) if log_w < 700.0 else sign * math.inf
    log_n = math.log(n_fix) + weight * delta0
    if log_n == math.inf:
        return math.inf
    try:
        return math.exp(log_n)
    except OverflowError:
        return math.inf


def classify_stability(params: LoanMarketParams) -> tuple[str, bool]:
    """('stable'|'unstable', boundary_flag) from the slope product alpha*mu.

    The fixed point attracts iff |di/dN * dN/di| = alpha*mu < 1 in both
    returns regimes; the exact boundary alpha*mu = 1 reports unstable with
    the flag set (criterion is a strict inequality).
    """
    am = params.alpha * params.mu
    if am == 1.0:
        return "unstable", True
    return ("stable" if am < 1.0 else "unstable"), False
