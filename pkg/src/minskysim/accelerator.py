"""Post-crisis feedback between defaults and the interest rate.

The unit cycle alternates the two aggregate power laws from ``firms``:

    i_{t+1} = i0 * N_t^alpha          rate reaction to N_t failures
    N_{t+1} = min((i_{t+1}/k)^beta, n_total)   firms priced out at the new rate

In log coordinates this is a linear difference equation with transition
eigenvalues {0, alpha*beta}, so the fixed point

    N_fix = (i0/k)^(beta/(1-alpha*beta))

attracts iff |alpha*beta| < 1 and repels otherwise, and the unclipped
trajectory is exactly N_t = N_fix * (N0/N_fix)^((alpha*beta)^t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .loanmarket import DegenerateParametersError
from .trajectory import COLLAPSE_GUARD, DIVERGENCE_GUARD, TerminationReason, Trajectory
from .validation import ParameterError, require_positive, require_positive_int


@dataclass(frozen=True)
class AcceleratorParams:
    i0: float
    k: float
    alpha: float
    beta: float
    n_total: int = 10**9

    def __post_init__(self) -> None:
        require_positive("i0", self.i0)
        require_positive("k", self.k)
        require_positive("beta", self.beta)
        float(self.alpha)
        require_positive_int("n_total", self.n_total)

    @property
    def alpha_beta(self) -> float:
        return self.alpha * self.beta


def step_accelerator(n_t: float, params: AcceleratorParams) -> tuple[float, float]:
    """One unit cycle: returns (i_next, N_next), with N clipped at n_total."""
    if n_t <= 0:
        raise ParameterError(f"n_t must be positive, got {n_t!r}")
    i_next = params.i0 * n_t ** params.alpha
    n_next = min((i_next / params.k) ** params.beta, float(params.n_total))
    return i_next, n_next


def accelerator_fixed_point(params: AcceleratorParams) -> tuple[float, float]:
    """Stationary (N_fix, i_fix); singular at alpha*beta = 1."""
    ab = params.alpha_beta
    if ab == 1.0:
        raise DegenerateParametersError(
            "accelerator fixed point is singular at alpha*beta = 1")
    n_fix = (params.i0 / params.k) ** (params.beta / (1.0 - ab))
    i_fix = (params.i0 / params.k ** ab) ** (1.0 / (1.0 - ab))
    return n_fix, i_fix


def closed_form_accelerator(params: AcceleratorParams, n0: float,
                            t: int) -> tuple[float, float]:
    """Exact unclipped (N_t, i_t), evaluated in log space.

    i_t is the rate on the ponzi curve at N_t (for t >= 1); t = 0 returns
    (N0, i0).  Overflow yields an infinity sentinel in the affected component.
    """
    require_positive("n0", n0)
    if t < 0:
        raise ParameterError("t must be a nonnegative integer")
    if t == 0:
        return float(n0), params.i0
    ab = params.alpha_beta
    if ab == 1.0:
        raise DegenerateParametersError("closed form is singular at alpha*beta = 1")
    n_fix, _ = accelerator_fixed_point(params)
    delta0 = math.log(n0) - math.log(n_fix)
    if ab == 0.0:
        weight = 0.0
    else:
        log_w = t * math.log(abs(ab))
        sign = 1.0 if (ab > 0 or t % 2 == 0) else -1.0
        weight = sign * math.exp(log_w) if log_w < 700.0 else sign * math.inf
    log_n = math.log(n_fix) + weight * delta0 if delta0 != 0.0 else math.log(n_fix)
    # N_t lies on the ponzi curve for t >= 1, so i_t = k * N_t^(1/beta)
    log_i = math.log(params.k) + log_n / params.beta
    def _safe_exp(x: float) -> float:
        if x == math.inf:
            return math.inf
        try:
            return math.exp(x)
        except OverflowError:
            return math.inf
    return _safe_exp(log_n), _safe_exp(log_i)


def accelerator_stability(params: AcceleratorParams) -> tuple[str, tuple[float, float]]:
    """('stable'|'unstable', eigenvalues) of the log-space transition matrix.

    The matrix [[0, alpha], [0, alpha*beta]] has eigenvalues {0, alpha*beta};
    asymptotic stability holds iff |alpha*beta| < 1.
    """
    ab = params.alpha_beta
    label = "stable" if abs(ab) < 1.0 else "unstable"
    return label, (0.0, ab)


def iterate_accelerator(params: AcceleratorParams, n0: float,
                        max_steps: int = 1000, tol: float = 1e-10) -> Trajectory:
    """Iterate the unit cycle from N0; same termination contract as the
    loan-market trajectories (converged / diverged / collapsed / max_steps)."""
    require_positive("n0", n0)
    n_prev = float(n0)
    steps = [(0, n_prev, params.i0)]
    reason = TerminationReason.MAX_STEPS
    for t in range(1, max_steps + 1):
        i_t, n_t = step_accelerator(n_prev, params)
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
        n_prev = n_t
    return Trajectory(steps=tuple(steps), terminated_reason=reason, tol=tol)
