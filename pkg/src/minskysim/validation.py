"""Small argument-checking helpers shared by every module."""

from __future__ import annotations

import math


class ParameterError(ValueError):
    """A scalar parameter is outside its admissible range."""


def require_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ParameterError(f"{name} must be a positive finite real, got {value!r}")
    return value


def require_nonnegative(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0.0:
        raise ParameterError(f"{name} must be a nonnegative finite real, got {value!r}")
    return value


def require_positive_int(name: str, value: int) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ParameterError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def require_in_range(name: str, value: float, lo: float, hi: float,
                     inclusive: tuple[bool, bool] = (False, False)) -> float:
    value = float(value)
    lo_ok = value >= lo if inclusive[0] else value > lo
    hi_ok = value <= hi if inclusive[1] else value < hi
    if not (math.isfinite(value) and lo_ok and hi_ok):
        lob = "[" if inclusive[0] else "("
        hib = "]" if inclusive[1] else ")"
        raise ParameterError(f"{name} must lie in {lob}{lo}, {hi}{hib}, got {value!r}")
    return value
