"""Kernel-weighted filtering: bilateral denoising and the non-local seasonal filter.

Indices are 0-based throughout.  Windows are clipped at the series edges and
the weights renormalized over what survives, so every output point is a
convex combination of its inputs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .core import ConfigInvalid, EmptyWindow, NoValidNeighborhood, NonPositiveBandwidth, TimeSeries

# Normal-consistency constant for the median absolute deviation.
_MAD_SCALE = 0.6744897501960817

# Multiplier applied to the robust noise scale when a value bandwidth is left
# to be derived from the data.
DEFAULT_VALUE_BANDWIDTH_FACTOR = 2.5

SEASON_REFERENCES = {
    "robust": _kernels.REF_ROBUST,
    "center": _kernels.REF_CENTER,
    "anchor": _kernels.REF_ANCHOR,
}


@dataclass(frozen=True)
class WeightedNeighborhood:
    indices: np.ndarray
    weights: np.ndarray


def noise_scale(values, period: int | None = None) -> float:
    """Robust standard-deviation estimate of the white-noise part of ``values``.

    With a ``period`` the estimate is the MAD of ``x_t - x_{t-1} - x_{t-T} +
    x_{t-T-1}``: that combination cancels any ``T``-periodic component and
    any linear ramp, and turns level shifts and spikes into a few isolated
    outliers the MAD ignores.  Without one, plain first differences are used.
    Never returns zero: a noise-free signal gets a tiny bandwidth relative to
    its magnitude instead.
    """
    x = np.asarray(values, dtype=np.float64)
    floor = 1e-6 * (1.0 + float(np.max(np.abs(x)))) if x.size else 1e-6
    d = np.diff(x)
    scale = np.sqrt(2.0)
    if period is not None and d.size > period + 1:
        d = d[period:] - d[:-period]
        scale = 2.0
    if d.size < 2:
        return floor
    mad = float(np.median(np.abs(d - np.median(d))))
    return max(mad / (_MAD_SCALE * scale), floor)


def default_value_bandwidth(values, period: int | None = None) -> float:
    return DEFAULT_VALUE_BANDWIDTH_FACTOR * noise_scale(values, period)


def _check_bandwidths(delta_d, delta_i):
    if not (delta_d > 0 and delta_i > 0):
        raise NonPositiveBandwidth(f"bandwidths must be positive (delta_d={delta_d}, delta_i={delta_i})")


def bilateral_weights(center: int, candidate_indices: Sequence[int], values, delta_d: float,
                      delta_i: float, reference: int | None = None) -> WeightedNeighborhood:
    """Normalized bilateral weights of ``candidate_indices`` around ``center``.

    The index kernel measures ``|j - center|``; the value kernel measures
    ``|values[j] - values[reference]|`` with ``reference`` defaulting to
    ``center``.  Log-weights are shifted by their maximum before
    exponentiating, so extreme bandwidth ratios never underflow to 0/0.
    """
    _check_bandwidths(delta_d, delta_i)
    idx = np.asarray(candidate_indices, dtype=np.int64)
    if idx.size == 0:
        raise EmptyWindow("candidate window is empty")
    y = np.asarray(values, dtype=np.float64)
    if idx.min() < 0 or idx.max() >= y.size:
        raise EmptyWindow(f"candidate indices must lie in [0, {y.size - 1}]")
    ref = center if reference is None else reference
    log_w = -((idx - center).astype(np.float64) ** 2) / (2.0 * delta_d**2) - (y[idx] - y[ref]) ** 2 / (2.0 * delta_i**2)
    w = np.exp(log_w - log_w.max())
    return WeightedNeighborhood(indices=idx, weights=w / w.sum())


def denoise(series: TimeSeries | np.ndarray, half_window: int, delta_d: float, delta_i: float | None = None,
            period: int | None = None) -> np.ndarray:
    """Edge-preserving bilateral smoothing over ``t - H .. t + H``.

    ``delta_i=None`` derives the value bandwidth from the data, using
    ``period`` (taken from a :class:`TimeSeries` when not given) to separate
    noise from seasonal structure.
    """
    if isinstance(series, TimeSeries):
        y = series.values
        period = series.period if period is None else period
    else:
        y = np.asarray(series, dtype=np.float64)
    if half_window < 0:
        raise ConfigInvalid(f"half_window must be nonnegative, got {half_window}")
    if delta_i is None:
        delta_i = default_value_bandwidth(y, period)
    _check_bandwidths(delta_d, delta_i)
    if half_window == 0:
        return np.array(y, dtype=np.float64)
    return _kernels.bilateral_filter(y, half_window, delta_d, delta_i)


def seasonal_neighborhood(t: int, n: int, period: int, k_periods: int, half_window: int) -> list[tuple[int, int]]:
    """Enumerate the ``(anchor, j)`` pairs feeding point ``t``.

    Anchors are ``t - k*period`` for ``k = 1..k_periods``; points in the first
    period (no past anchor at all) use the future anchors ``t + k*period``
    instead.  Pairs with ``j`` outside ``[0, n)`` are
    dropped; each ``j`` occurs once per anchor.
    """
    direction = 1 if t - period < 0 else -1
    pairs = []
    for k in range(1, k_periods + 1):
        anchor = t + direction * k * period
        for h in range(-half_window, half_window + 1):
            j = anchor + h
            if 0 <= j < n:
                pairs.append((anchor, j))
    return pairs


def reference_value(t: int, values, period: int, reference: str = "robust") -> float:
    """Value the neighbours of point ``t`` are compared against (``"center"``/``"robust"``)."""
    y = np.asarray(values, dtype=np.float64)
    if reference == "robust":
        local = np.median([y[max(t - 1, 0)], y[t], y[min(t + 1, y.size - 1)]])
        same_phase = y[min(max(t + (period if t - period < 0 else -period), 0), y.size - 1)]
        return float(np.median([y[t], local, same_phase]))
    return float(y[t])


def seasonal_weights(t: int, values, period: int, k_periods: int, half_window: int, delta_d: float,
                     delta_i: float, reference: str = "robust") -> WeightedNeighborhood:
    """Scalar evaluation of the non-local weights for one point."""
    _check_bandwidths(delta_d, delta_i)
    y = np.asarray(values, dtype=np.float64)
    pairs = seasonal_neighborhood(t, y.size, period, k_periods, half_window)
    if not pairs:
        raise NoValidNeighborhood(f"no valid seasonal neighbour for t={t}")
    anchors = np.array([a for a, _ in pairs])
    js = np.array([j for _, j in pairs])
    if reference == "anchor":
        ref = y[np.clip(anchors, 0, y.size - 1)]
    else:
        ref = np.full(js.size, reference_value(t, y, period, reference))
    log_value = -((y[js] - ref) ** 2) / (2.0 * delta_i**2)
    if np.abs(y[js] - ref).min() > _kernels.VALUE_MATCH_SIGMAS * delta_i:
        log_value[:] = 0.0
    log_w = -((js - anchors).astype(np.float64) ** 2) / (2.0 * delta_d**2) + log_value
    w = np.exp(log_w - log_w.max())
    return WeightedNeighborhood(indices=js, weights=w / w.sum())


def nonlocal_seasonal_filter(detrended, period: int, k_periods: int, half_window: int, delta_d: float,
                             delta_i: float | None = None, reference: str = "robust") -> np.ndarray:
    """Weighted average over same-phase neighbourhoods in ``k_periods`` other periods.

    ``reference`` selects what the value kernel compares each neighbour
    against:

    * ``"robust"`` (default): median of three candidates, the point itself,
      the median of the point and its two temporal neighbours, and the
      same-phase value one period away.  An isolated spike at ``t`` is
      outvoted by the other two; a sharp seasonal peak agrees with its
      same-phase value and is kept; a phase shift agrees with its own
      temporal neighbours and is followed;
    * ``"center"``: the point itself;
    * ``"anchor"``: the centre of each neighbourhood (``t - k*T``).

    A point whose reference lies more than ``VALUE_MATCH_SIGMAS * delta_i``
    from every neighbour is averaged with the index kernel alone.
    """
    y = np.asarray(detrended, dtype=np.float64)
    if 2 * half_window + 1 > period:
        raise ConfigInvalid(f"2*H+1 = {2 * half_window + 1} exceeds period {period}")
    if k_periods < 1 or half_window < 0:
        raise ConfigInvalid(f"need K >= 1 and H >= 0 (K={k_periods}, H={half_window})")
    if reference not in SEASON_REFERENCES:
        raise ConfigInvalid(f"reference must be one of {sorted(SEASON_REFERENCES)}, got {reference!r}")
    if delta_i is None:
        delta_i = default_value_bandwidth(y, period)
    _check_bandwidths(delta_d, delta_i)
    try:
        return _kernels.nonlocal_filter(y, period, k_periods, half_window, delta_d, delta_i,
                                        SEASON_REFERENCES[reference])
    except RuntimeError as exc:
        raise NoValidNeighborhood(str(exc)) from None
