"""Domain types, configuration and validation shared across the package."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np


ITERATION_SCHEMES = ("refresh", "remainder")
SEASON_REFERENCES = ("robust", "center", "anchor")


class RobustStlError(Exception):
    """Base class for all errors raised by this package."""


class ConfigInvalid(RobustStlError, ValueError):
    pass


class PeriodTooShort(ConfigInvalid):
    pass


class SeriesTooShort(ConfigInvalid):
    pass


class WindowExceedsPeriod(ConfigInvalid):
    pass


class NonPositiveBandwidth(ConfigInvalid):
    pass


class InvalidSeries(RobustStlError, ValueError):
    pass


class DimensionMismatch(RobustStlError, ValueError):
    pass


class LengthMismatch(RobustStlError, ValueError):
    pass


class EmptyWindow(RobustStlError, ValueError):
    pass


class NoValidNeighborhood(RobustStlError, RuntimeError):
    pass


class InvalidSpec(RobustStlError, ValueError):
    pass


class SolverDidNotConverge(RobustStlError, RuntimeError):
    """Raised when the LAD solver exhausts its iteration budget.

    The best iterate found so far is attached as ``solution`` so callers can
    still inspect (or use) it.
    """

    def __init__(self, message: str, solution=None, diagnostics=None):
        super().__init__(message)
        self.solution = solution
        self.diagnostics = diagnostics


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Observations ``y_1..y_N`` together with the seasonal period ``T``."""

    values: np.ndarray
    period: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise InvalidSeries(f"values must be one-dimensional, got shape {values.shape}")
        period = int(self.period)
        if period != self.period:
            raise PeriodTooShort(f"period must be an integer, got {self.period!r}")
        if period < 2:
            raise PeriodTooShort(f"period T={period} must be >= 2")
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise InvalidSeries(
                f"series contains non-finite values at position(s) {(bad + 1).tolist()[:10]} (1-based)"
            )
        n = values.size
        if n < 2 * period + 1:
            raise SeriesTooShort(
                f"series length N={n} is too short for period T={period}; needs N >= 2T+1 = {2 * period + 1}"
            )
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "period", period)

    def __len__(self) -> int:
        return self.values.size

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class DecompositionResult:
    trend: np.ndarray
    seasonal: np.ndarray
    remainder: np.ndarray
    iterations_run: int = 1
    converged: bool = True

    def __post_init__(self):
        for name in ("trend", "seasonal", "remainder"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        n = self.trend.size
        if self.seasonal.size != n or self.remainder.size != n:
            raise LengthMismatch("trend, seasonal and remainder must have equal length")

    def reconstruct(self) -> np.ndarray:
        return self.trend + self.seasonal + self.remainder


@dataclass(frozen=True)
class LadSolverConfig:
    max_iterations: int = 500
    rel_tolerance: float = 1e-6
    abs_tolerance: float = 1e-8

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigInvalid(f"max_iterations must be positive, got {self.max_iterations}")
        if not (self.rel_tolerance > 0 and self.abs_tolerance > 0):
            raise ConfigInvalid("solver tolerances must be positive")


@dataclass(frozen=True)
class RobustStlConfig:
    """All tunables of the decomposition.

    ``None`` for a bandwidth or window means "derive from the data":

    * ``denoise_delta_i`` / ``season_delta_i``: 2.5 times a robust noise-scale
      estimate of the signal being filtered (see
      :func:`robuststl.filters.noise_scale`), computed once per filtering call
      and then held fixed for every point.
    * ``season_half_window``: ``min(5, (T - 1) // 2)`` so that the default is
      legal for every period ``T >= 2``.
    """

    lambda1: float = 10.0
    lambda2: float = 0.5
    denoise_half_window: int = 4
    denoise_delta_d: float = 2.0
    denoise_delta_i: Optional[float] = None
    season_neighborhood_periods: int = 2
    season_half_window: Optional[int] = None
    season_delta_d: float = 2.0
    season_delta_i: Optional[float] = None
    season_reference: str = "robust"
    iteration_scheme: str = "refresh"
    max_outer_iterations: int = 50
    outer_tolerance: float = 1e-5
    solver: LadSolverConfig = field(default_factory=LadSolverConfig)

    def resolved_season_half_window(self, period: int) -> int:
        if self.season_half_window is None:
            return max(0, min(5, (period - 1) // 2))
        return self.season_half_window

    def with_overrides(self, **changes) -> "RobustStlConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)


def validate_config(config: RobustStlConfig, series: TimeSeries) -> RobustStlConfig:
    """Check ``config`` against ``series``; return it unchanged or raise.

    The error class names the violated constraint.
    """
    period, n = series.period, series.n
    if period < 2:
        raise PeriodTooShort(f"period T={period} must be >= 2")
    if n < 2 * period + 1:
        raise SeriesTooShort(f"N={n} < 2T+1={2 * period + 1}")
    if config.lambda1 < 0 or config.lambda2 < 0:
        raise ConfigInvalid(f"penalties must be nonnegative (lambda1={config.lambda1}, lambda2={config.lambda2})")
    if config.denoise_half_window < 0:
        raise ConfigInvalid(f"denoise_half_window must be nonnegative, got {config.denoise_half_window}")
    for name in ("denoise_delta_d", "denoise_delta_i", "season_delta_d", "season_delta_i"):
        value = getattr(config, name)
        if value is not None and not value > 0:
            raise NonPositiveBandwidth(f"{name} must be strictly positive, got {value}")
    if config.season_neighborhood_periods < 1:
        raise ConfigInvalid(
            f"season_neighborhood_periods must be >= 1, got {config.season_neighborhood_periods}"
        )
    h_s = config.resolved_season_half_window(period)
    if h_s < 0:
        raise ConfigInvalid(f"season_half_window must be nonnegative, got {h_s}")
    if 2 * h_s + 1 > period:
        raise WindowExceedsPeriod(
            f"seasonal neighborhood 2*H_s+1 = {2 * h_s + 1} exceeds period T={period}"
        )
    if config.season_reference not in SEASON_REFERENCES:
        raise ConfigInvalid(f"season_reference must be one of {SEASON_REFERENCES}, got {config.season_reference!r}")
    if config.iteration_scheme not in ITERATION_SCHEMES:
        raise ConfigInvalid(f"iteration_scheme must be one of {ITERATION_SCHEMES}, got {config.iteration_scheme!r}")
    if config.max_outer_iterations < 1:
        raise ConfigInvalid(f"max_outer_iterations must be positive, got {config.max_outer_iterations}")
    if not config.outer_tolerance > 0:
        raise ConfigInvalid(f"outer_tolerance must be positive, got {config.outer_tolerance}")
    return config
