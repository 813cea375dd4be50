"""Time-indexed (t, N, i) records shared by every iterative map."""

from __future__ import annotations

import enum
from dataclasses import dataclass

DIVERGENCE_GUARD = 1e12
COLLAPSE_GUARD = 1e-12


class TerminationReason(str, enum.Enum):
    MAX_STEPS = "max_steps"
    CONVERGED = "converged"
    DIVERGED = "diverged"
    COLLAPSED = "collapsed"


@dataclass(frozen=True)
class Trajectory:
    """Ordered (t, N_t, i_t) sequence plus why the iteration stopped.

    ``converged`` means |N_t - N_{t-1}| <= tol * N_t at the last step;
    ``diverged``/``collapsed`` mean the 1e12 / 1e-12 guards fired, turning the
    map's infinities into finite, reportable outcomes.
    """

    steps: tuple[tuple[int, float, float], ...]
    terminated_reason: TerminationReason
    tol: float | None = None

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def final_n(self) -> float:
        return self.steps[-1][1]

    @property
    def final_i(self) -> float:
        return self.steps[-1][2]

    @property
    def n_series(self) -> list[float]:
        return [s[1] for s in self.steps]

    @property
    def i_series(self) -> list[float]:
        return [s[2] for s in self.steps]
