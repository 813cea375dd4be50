"""Firm population: resilience distributions, ponzi classification, rate feedback.

A firm's resilience is its earnings-to-debt ratio, i.e. the highest interest
rate it can service.  A firm whose resilience falls below the current rate is
ponzi; a ponzi firm that is uncovered (by contagion or an exogenous shock)
is failed.  Two aggregate power laws close the macro feedback loop:

    ponzi_count(i)          = (i / k)^beta        firms priced out at rate i
    interest_from_failures  = i0 * n_failed^alpha rate reaction to defaults

Everything downstream (loan-market maps, the crisis accelerator, the agent
simulation) is built on these primitives.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .validation import ParameterError, require_positive, require_positive_int

VIABLE, PONZI, FAILED = 0, 1, 2
STATUS_NAMES = ("viable", "ponzi", "failed")


class ResilienceMode(str, enum.Enum):
    RANK_DETERMINISTIC = "rank_deterministic"
    IID_PARETO = "iid_pareto"


@dataclass(frozen=True)
class ResilienceSpec:
    """Bounded power-law population of firm resiliences.

    rank_deterministic assigns r(n) = k * n^(1/beta) to ranks n = 1..n_total;
    iid_pareto draws i.i.d. from the matching CDF  P[r < i] = (i / r_max)^beta
    with r_max = k * n_total^(1/beta).
    """

    k: float
    beta: float
    n_total: int
    mode: ResilienceMode = ResilienceMode.RANK_DETERMINISTIC
    seed: int = 0

    def __post_init__(self) -> None:
        require_positive("k", self.k)
        require_positive("beta", self.beta)
        require_positive_int("n_total", self.n_total)
        object.__setattr__(self, "mode", ResilienceMode(self.mode))

    @property
    def r_max(self) -> float:
        return self.k * self.n_total ** (1.0 / self.beta)


@dataclass(frozen=True)
class FeedbackParams:
    """Rate reaction to defaults: i = i0 * n_failed^alpha (alpha < 0 allowed
    for counter-cyclical policy; n_failed = 0 maps to the pre-shock rate i0)."""

    i0: float
    alpha: float

    def __post_init__(self) -> None:
        require_positive("i0", self.i0)
        float(self.alpha)


@dataclass(frozen=True)
class FirmTable:
    """Immutable snapshot of the firm population.

    Arrays are locked read-only; classification returns a new snapshot, so
    tables can be shared freely across threads.
    """

    resilience: np.ndarray
    status: np.ndarray
    immunized: np.ndarray
    distance_to_ponzi: np.ndarray | None = None
    spec: ResilienceSpec | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        for name in ("resilience", "status", "immunized", "distance_to_ponzi"):
            arr = getattr(self, name)
            if arr is not None:
                arr.setflags(write=False)
        if np.any(self.resilience <= 0):
            raise ParameterError("all resiliences must be positive")

    def __len__(self) -> int:
        return int(self.resilience.shape[0])

    @property
    def ids(self) -> np.ndarray:
        return np.arange(len(self))

    def status_counts(self) -> dict[str, int]:
        return {name: int(np.count_nonzero(self.status == code))
                for code, name in enumerate(STATUS_NAMES)}

    def with_status(self, ids: np.ndarray | list[int], code: int) -> "FirmTable":
        status = self.status.copy()
        status[np.asarray(ids, dtype=np.int64)] = code
        return replace(self, status=status)

    def with_immunized(self, ids: np.ndarray | list[int]) -> "FirmTable":
        imm = self.immunized.copy()
        imm[np.asarray(ids, dtype=np.int64)] = True
        return replace(self, immunized=imm)

    def minsky_labels(self, i: float, hedge_margin: float | None = None) -> np.ndarray:
        """Three-way hedge/speculative/ponzi label, derived display metadata.

        hedge iff DP > margin (default 0.5*i), speculative iff 0 < DP <= margin.
        The quantitative model itself only distinguishes ponzi vs non-ponzi.
        """
        require_positive("i", i)
        margin = 0.5 * i if hedge_margin is None else float(hedge_margin)
        dp = self.resilience - i
        labels = np.where(dp > margin, "hedge",
                          np.where(dp > 0, "speculative", "ponzi"))
        return labels


def sample_resiliences(spec: ResilienceSpec) -> FirmTable:
    """Materialize the firm population described by ``spec``.

    Reproducible from ``spec.seed`` in iid_pareto mode; rank_deterministic is
    seed-independent by construction.
    """
    n = spec.n_total
    if spec.mode is ResilienceMode.RANK_DETERMINISTIC:
        ranks = np.arange(1, n + 1, dtype=np.float64)
        r = spec.k * ranks ** (1.0 / spec.beta)
    else:
        rng = np.random.default_rng(spec.seed)
        u = rng.random(n)
        # inverse CDF of P[r < i] = (i/r_max)^beta
        r = spec.r_max * u ** (1.0 / spec.beta)
        r = np.maximum(r, np.finfo(np.float64).tiny)
    return FirmTable(
        resilience=r,
        status=np.zeros(n, dtype=np.int8),
        immunized=np.zeros(n, dtype=bool),
        spec=spec,
    )


def classify_firms(firms: FirmTable, i: float) -> FirmTable:
    """Re-mark every non-failed firm as ponzi (r < i) or viable (r >= i).

    Failure is absorbing here; lowering i below a ponzi firm's resilience
    restores it to viable.  Records distance-to-ponzi DP = r - i for all firms.
    Idempotent at fixed i.
    """
    require_positive("i", i)
    dp = firms.resilience - i
    status = np.where(dp < 0, PONZI, VIABLE).astype(np.int8)
    status[firms.status == FAILED] = FAILED
    return replace(firms, status=status, distance_to_ponzi=dp)


def ponzi_count(i: float, k: float, beta: float) -> float:
    """Continuous aggregate count of firms priced out at rate i: (i/k)^beta.

    Callers clip to n_total as needed; agrees with a rank-deterministic table
    census to within one firm.
    """
    require_positive("i", i)
    require_positive("k", k)
    require_positive("beta", beta)
    return (i / k) ** beta


def interest_from_failures(n_failed: float, params: FeedbackParams) -> float:
    """Rate induced by n_failed defaults: i0 * n_failed^alpha.

    n_failed = 0 returns the pre-shock rate i0 (continuous extension; avoids
    0^alpha singularities for alpha < 0).
    """
    if n_failed < 0:
        raise ParameterError(f"n_failed must be nonnegative, got {n_failed!r}")
    if n_failed == 0:
        return params.i0
    return params.i0 * float(n_failed) ** params.alpha
