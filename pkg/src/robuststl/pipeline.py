"""The full decomposition loop: denoise, relative trend, seasonal filter, adjust, repeat.

The first pass runs the four steps on the input.  Later passes differ by
``iteration_scheme``:

``"refresh"`` (default)
    Denoise the current remainder, fit a relative-trend increment to it and
    add that to the running relative trend.  The season is then re-extracted
    from the denoised input minus the updated relative trend, and the adjust
    step re-centres both.  The trend keeps absorbing level structure the
    previous pass missed, while the season is always a fresh filter output
    rather than a sum of filtered corrections.

``"remainder"``
    Decompose the current remainder with all four steps and add the trend
    and seasonal increments to the running estimates.  Each pass filters the
    remainder's noise into a new seasonal increment, and those increments
    pile up: on the synthetic benchmark the estimates grow without bound
    rather than settle.  Kept for comparison only.

Either way the remainder is recomputed as ``y - trend - seasonal`` after each
pass, so the additive reconstruction is exact throughout.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import filters
from .core import DecompositionResult, RobustStlConfig, SolverDidNotConverge, TimeSeries, validate_config
from .trend import extract_relative_trend

logger = logging.getLogger(__name__)


@dataclass
class IterationRecord:
    trend_change: float
    seasonal_change: float
    solver_objective: float
    tau1: float


@dataclass
class IterationDiagnostics:
    records: list[IterationRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def as_rows(self) -> list[dict]:
        return [
            {"iteration": i + 1, "trend_change": r.trend_change, "seasonal_change": r.seasonal_change,
             "solver_objective": r.solver_objective, "tau1": r.tau1}
            for i, r in enumerate(self.records)
        ]


def adjust(relative_trend, raw_season, y, period: int):
    """Move the mean of the raw season (over whole periods) into the trend.

    Returns ``(trend, seasonal, remainder, tau1)`` with
    ``remainder = y - seasonal - trend``.
    """
    relative_trend = np.asarray(relative_trend, dtype=np.float64)
    raw_season = np.asarray(raw_season, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    whole = period * (y.size // period)
    # mean taken relative to the first sample so a constant season is exact
    tau1 = float(raw_season[0] + np.mean(raw_season[:whole] - raw_season[0]))
    seasonal = raw_season - tau1
    trend = relative_trend + tau1
    remainder = y - seasonal - trend
    return trend, seasonal, remainder, tau1


def _relative_trend(x, period, config):
    return extract_relative_trend(x, period, config.lambda1, config.lambda2, config.solver, return_solution=True)


def _season(detrended, period, config):
    return filters.nonlocal_seasonal_filter(
        detrended, period, config.season_neighborhood_periods,
        config.resolved_season_half_window(period), config.season_delta_d, config.season_delta_i,
        config.season_reference,
    )


def _denoise(x, period, config):
    return filters.denoise(x, config.denoise_half_window, config.denoise_delta_d, config.denoise_delta_i, period)


def decompose(series: TimeSeries, config: RobustStlConfig | None = None):
    """Decompose ``series`` into trend, seasonal and remainder.

    Returns ``(DecompositionResult, IterationDiagnostics)``.  Iteration stops
    once the largest per-pass change of trend or season drops below
    ``outer_tolerance * (1 + max|y|)`` or the pass budget is spent; the
    result's ``converged`` flag tells which.  A :class:`SolverDidNotConverge`
    from the trend step propagates with the diagnostics gathered so far
    attached.
    """
    config = validate_config(config or RobustStlConfig(), series)
    y = np.asarray(series.values, dtype=np.float64)
    period = series.period
    threshold = config.outer_tolerance * (1.0 + float(np.max(np.abs(y))))
    refresh = config.iteration_scheme == "refresh"

    trend = np.zeros_like(y)
    seasonal = np.zeros_like(y)
    remainder = y.copy()
    denoised = _denoise(y, period, config)
    rel_trend = np.zeros_like(y)
    diagnostics = IterationDiagnostics()
    converged = False

    for iteration in range(1, config.max_outer_iterations + 1):
        try:
            if iteration == 1 or refresh:
                source = denoised if iteration == 1 else _denoise(remainder, period, config)
                increment, solution = _relative_trend(source, period, config)
                rel_trend = rel_trend + increment
                new_trend, new_seasonal, _, tau1 = adjust(
                    rel_trend, _season(denoised - rel_trend, period, config), y, period)
            else:
                source = _denoise(remainder, period, config)
                increment, solution = _relative_trend(source, period, config)
                d_trend, d_season, _, tau1 = adjust(
                    increment, _season(source - increment, period, config), remainder, period)
                new_trend, new_seasonal = trend + d_trend, seasonal + d_season
        except SolverDidNotConverge as exc:
            exc.diagnostics = diagnostics
            raise
        change_t = float(np.max(np.abs(new_trend - trend)))
        change_s = float(np.max(np.abs(new_seasonal - seasonal)))
        trend, seasonal = new_trend, new_seasonal
        remainder = y - seasonal - trend
        diagnostics.records.append(IterationRecord(change_t, change_s, solution.objective, tau1))
        logger.debug("pass %d: |dtrend|=%.3g |dseason|=%.3g", iteration, change_t, change_s)
        if max(change_t, change_s) < threshold:
            converged = True
            break

    result = DecompositionResult(trend=trend, seasonal=seasonal, remainder=remainder,
                                 iterations_run=len(diagnostics), converged=converged)
    return result, diagnostics
