"""Log-log rate fitting, rate reports and keyed random streams."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


def make_rng(*keys: int) -> np.random.Generator:
    """Counter-based stream keyed by integers, e.g. ``(seed, level, rep)``.

    Streams for distinct keys are independent, so replications can be
    computed in any order or process and still reproduce bit for bit.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in keys])))


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    residual_rms: float
    n_points: int


def fit_rate(pairs: Sequence[tuple[float, float]]) -> FitResult:
    """Least-squares line through ``(log level, log value)``."""
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 3:
        raise ValueError("need at least 3 (level, value) pairs")
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError("levels and values must be finite and strictly positive")
    x, y = np.log(arr[:, 0]), np.log(arr[:, 1])
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    return FitResult(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))), len(x))


@dataclass
class RateReport:
    """Errors per level, with the fitted log-log slope.

    ``spread`` holds a per-level dispersion (standard error for Monte Carlo
    rates, interquartile range for Tikhonov rates) and ``bound`` the
    theoretical bound at that level.
    """

    levels: np.ndarray
    errors: np.ndarray
    spread: np.ndarray
    bound: np.ndarray
    fit: FitResult
    samples: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def slope(self) -> float:
        return self.fit.slope

    @property
    def intercept(self) -> float:
        return self.fit.intercept


def fmt(x) -> str:
    """Stable, round-trippable number formatting for CSV and key=value output."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)
