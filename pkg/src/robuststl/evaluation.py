"""Scoring against ground truth and a classical moving-average baseline."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DecompositionResult, LengthMismatch, SeriesTooShort, TimeSeries

METRIC_KEYS = ("trend_mse", "trend_mae", "season_mse", "season_mae")


@dataclass(frozen=True)
class MetricReport:
    trend_mse: float
    trend_mae: float
    season_mse: float
    season_mae: float
    trend_residual: np.ndarray
    season_residual: np.ndarray

    def as_dict(self) -> dict[str, float]:
        return {key: getattr(self, key) for key in METRIC_KEYS}

    def to_lines(self) -> list[str]:
        """``key=value`` lines with 10 significant digits."""
        return [f"{key}={value:.10g}" for key, value in self.as_dict().items()]


def _component(obj, name):
    return np.asarray(getattr(obj, name), dtype=np.float64)


def score(result, truth) -> MetricReport:
    """MSE and MAE of trend and season over all points.

    ``result`` and ``truth`` only need ``trend`` and ``seasonal`` attributes,
    so a :class:`~robuststl.synth.GroundTruth` or another
    :class:`~robuststl.core.DecompositionResult` both work as truth.
    """
    est_t, est_s = _component(result, "trend"), _component(result, "seasonal")
    true_t, true_s = _component(truth, "trend"), _component(truth, "seasonal")
    if not est_t.size == est_s.size == true_t.size == true_s.size:
        raise LengthMismatch(
            f"result has {est_t.size} points but truth has {true_t.size}"
        )
    dt = est_t - true_t
    ds = est_s - true_s
    return MetricReport(
        trend_mse=float(np.mean(dt**2)), trend_mae=float(np.mean(np.abs(dt))),
        season_mse=float(np.mean(ds**2)), season_mae=float(np.mean(np.abs(ds))),
        trend_residual=dt, season_residual=ds,
    )


def moving_average_weights(period: int) -> np.ndarray:
    """Centered moving-average weights spanning one period.

    Odd ``period``: ``period`` equal weights.  Even ``period``: the usual
    2xT filter, ``period + 1`` taps with half weight on the two ends.
    """
    if period % 2:
        return np.full(period, 1.0 / period)
    w = np.full(period + 1, 1.0 / period)
    w[0] = w[-1] = 0.5 / period
    return w


def centered_moving_average(values, period: int) -> np.ndarray:
    """Moving average whose window shrinks (and renormalizes) at the edges."""
    y = np.asarray(values, dtype=np.float64)
    w = moving_average_weights(period)
    num = np.convolve(y, w, mode="same")
    den = np.convolve(np.ones_like(y), w, mode="same")
    return num / den


def classical_baseline(series: TimeSeries) -> DecompositionResult:
    """Moving-average trend plus per-phase median season.

    The season is the median of the detrended values at each phase
    ``t mod T``, shifted to zero mean over one period.  The remainder is
    whatever is left, so reconstruction is exact.
    """
    y = np.asarray(series.values, dtype=np.float64)
    period = series.period
    if y.size < 2 * period:
        raise SeriesTooShort(f"baseline needs N >= 2T (N={y.size}, T={period})")
    trend = centered_moving_average(y, period)
    detrended = y - trend
    phase = np.arange(y.size) % period
    profile = np.array([np.median(detrended[phase == p]) for p in range(period)])
    profile -= profile.mean()
    seasonal = profile[phase]
    return DecompositionResult(trend=trend, seasonal=seasonal, remainder=y - trend - seasonal)
