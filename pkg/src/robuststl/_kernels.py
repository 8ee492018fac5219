"""Hot numeric kernels, each in a numba and a pure-numpy flavour.

The active backend is picked at import time from ``ROBUSTSTL_BACKEND``
(``numba`` or ``numpy``; default ``numba`` when it imports) and can be
switched at runtime with :func:`set_backend`.  ``ROBUSTSTL_THREADS`` caps
numba's thread pool (``0`` or unset = numba's default).

All index arguments are 0-based.  Filters accumulate deviations from the
centre sample, so a constant input comes back bit-for-bit.  Both flavours must agree to floating
point round-off; ``tests/test_kernels.py`` holds them to that.
"""
from __future__ import annotations

import math
import os
import warnings

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
    # an outdated system TBB only makes numba fall back to another threading layer
    warnings.filterwarnings("ignore", message="The TBB threading layer requires", category=numba.NumbaWarning)
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


# Seasonal no-match gate: when no neighbour lies within this many value
# bandwidths of the reference, the value kernel says nothing useful (it would
# hand all the weight to the least-distant, often anomalous, neighbour), so
# that point is averaged with the index kernel alone.
VALUE_MATCH_SIGMAS = 4.0

# ---------------------------------------------------------------------------
# numpy reference flavour
# ---------------------------------------------------------------------------

def bilateral_filter_numpy(values, half_window, delta_d, delta_i):
    y = np.asarray(values, dtype=np.float64)
    n = y.size
    if half_window == 0:
        return y.copy()
    offsets = np.arange(-half_window, half_window + 1)
    idx = np.arange(n)[:, None] + offsets[None, :]
    valid = (idx >= 0) & (idx < n)
    idx_c = np.clip(idx, 0, n - 1)
    neighbours = y[idx_c]
    log_w = -(offsets[None, :].astype(np.float64) ** 2) / (2.0 * delta_d**2)
    log_w = log_w - (neighbours - y[:, None]) ** 2 / (2.0 * delta_i**2)
    w = np.where(valid, np.exp(log_w), 0.0)
    return y + (w * (neighbours - y[:, None])).sum(axis=1) / w.sum(axis=1)


def _nonlocal_offsets(period, k_periods, half_window):
    k = np.repeat(np.arange(1, k_periods + 1), 2 * half_window + 1)
    h = np.tile(np.arange(-half_window, half_window + 1), k_periods)
    return k, h


REF_CENTER, REF_ANCHOR, REF_ROBUST = 0, 1, 2


def median3_numpy(y):
    """Median of ``y[t-1], y[t], y[t+1]`` with edge samples replicated."""
    padded = np.concatenate(([y[0]], y, [y[-1]]))
    return np.median(np.stack([padded[:-2], padded[1:-1], padded[2:]]), axis=0)


def robust_reference_numpy(y, period):
    """Median of ``y[t]``, its temporal median-of-3 and the same-phase value one period away."""
    t = np.arange(y.size)
    neighbour = y[np.where(t - period < 0, t + period, t - period).clip(0, y.size - 1)]
    return np.median(np.stack([y, median3_numpy(y), neighbour]), axis=0)


def nonlocal_filter_numpy(values, period, k_periods, half_window, delta_d, delta_i, reference_mode):
    y = np.asarray(values, dtype=np.float64)
    n = y.size
    t = np.arange(n)
    k, h = _nonlocal_offsets(period, k_periods, half_window)
    # first period has no past anchor: mirror to future anchors
    direction = np.where(t - period < 0, 1, -1)
    anchors = t[:, None] + direction[:, None] * k[None, :] * period
    j = anchors + h[None, :]
    valid = (j >= 0) & (j < n)
    if not valid.any(axis=1).all():
        raise RuntimeError("point without any valid seasonal neighbour")
    vj = y[np.clip(j, 0, n - 1)]
    if reference_mode == REF_ANCHOR:
        ref = y[np.clip(anchors, 0, n - 1)]
    elif reference_mode == REF_ROBUST:
        ref = np.broadcast_to(robust_reference_numpy(y, period)[:, None], j.shape)
    else:
        ref = np.broadcast_to(y[:, None], j.shape)
    dist = np.where(valid, np.abs(vj - ref), np.inf)
    matched = dist.min(axis=1, keepdims=True) <= VALUE_MATCH_SIGMAS * delta_i
    log_value = np.where(matched, -((vj - ref) ** 2) / (2.0 * delta_i**2), 0.0)
    log_w = -(h[None, :].astype(np.float64) ** 2) / (2.0 * delta_d**2) + log_value
    log_w = np.where(valid, log_w, -np.inf)
    # shift by the row maximum: same normalized weights, no underflow to 0/0
    w = np.exp(log_w - log_w.max(axis=1, keepdims=True))
    return y + (w * (vj - y[:, None])).sum(axis=1) / w.sum(axis=1)


def window_sum_numpy(x, width):
    """``(M x)_r = x_r + ... + x_{r+width-1}`` for every full window."""
    return sliding_window_view(np.asarray(x, dtype=np.float64), width).sum(axis=1)


def window_sum_adjoint_numpy(y, width):
    """Adjoint of :func:`window_sum_numpy`; output length ``len(y) + width - 1``."""
    return np.convolve(np.asarray(y, dtype=np.float64), np.ones(width))


def window_gram_banded_numpy(w, width, ncols):
    """Upper banded storage of ``M^T diag(w) M`` (``scipy.linalg.solveh_banded`` layout).

    Entry ``(i, j)`` with ``i <= j`` and ``j - i < width`` equals the sum of
    ``w_r`` over rows ``r`` whose window covers both columns.
    """
    w = np.asarray(w, dtype=np.float64)
    nrows = w.size
    u = width - 1
    cs = np.concatenate(([0.0], np.cumsum(w)))
    ab = np.zeros((u + 1, ncols))
    cols = np.arange(ncols)
    for d in range(width):
        j = cols[d:]
        i = j - d
        lo = np.maximum(0, j - width + 1)
        hi = np.minimum(i, nrows - 1)
        vals = np.where(hi >= lo, cs[np.maximum(hi + 1, 0)] - cs[np.minimum(lo, nrows)], 0.0)
        ab[u - d, d:] = vals
    return ab


# ---------------------------------------------------------------------------
# numba flavour
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(parallel=True, cache=True)
    def bilateral_filter_numba(values, half_window, delta_d, delta_i):
        n = values.size
        out = np.empty(n)
        inv_d = 1.0 / (2.0 * delta_d * delta_d)
        inv_i = 1.0 / (2.0 * delta_i * delta_i)
        for t in prange(n):
            lo = max(0, t - half_window)
            hi = min(n - 1, t + half_window)
            yt = values[t]
            num = 0.0
            den = 0.0
            for j in range(lo, hi + 1):
                dj = j - t
                dv = values[j] - yt
                w = math.exp(-dj * dj * inv_d - dv * dv * inv_i)
                num += w * dv
                den += w
            out[t] = yt + num / den
        return out

    @njit(cache=True)
    def _median3(a, b, c):
        if a > b:
            a, b = b, a
        if b > c:
            b = c
        return a if a > b else b

    @njit(parallel=True, cache=True)
    def _nonlocal_filter_numba(values, period, k_periods, half_window, delta_d, delta_i, reference_mode, out):
        n = values.size
        inv_d = 1.0 / (2.0 * delta_d * delta_d)
        inv_i = 1.0 / (2.0 * delta_i * delta_i)
        match = VALUE_MATCH_SIGMAS * delta_i
        for t in prange(n):
            direction = -1
            if t - period < 0:
                direction = 1
            if reference_mode == 2:
                local = _median3(values[max(t - 1, 0)], values[t], values[min(t + 1, n - 1)])
                same_phase = values[min(max(t + direction * period, 0), n - 1)]
                center_ref = _median3(values[t], local, same_phase)
            else:
                center_ref = values[t]
            # pass 1: closest value match decides whether the value kernel is used
            closest = np.inf
            for k in range(1, k_periods + 1):
                anchor = t + direction * k * period
                ref = center_ref
                if reference_mode == 1:
                    ref = values[min(max(anchor, 0), n - 1)]
                for h in range(-half_window, half_window + 1):
                    j = anchor + h
                    if 0 <= j < n:
                        closest = min(closest, abs(values[j] - ref))
            inv_v = inv_i
            if closest > match:
                inv_v = 0.0
            # pass 2: largest log-weight, so pass 3 can shift it to exp(0)
            top = -np.inf
            for k in range(1, k_periods + 1):
                anchor = t + direction * k * period
                ref = center_ref
                if reference_mode == 1:
                    ref = values[min(max(anchor, 0), n - 1)]
                for h in range(-half_window, half_window + 1):
                    j = anchor + h
                    if j < 0 or j >= n:
                        continue
                    dv = values[j] - ref
                    lw = -h * h * inv_d - dv * dv * inv_v
                    if lw > top:
                        top = lw
            if top == -np.inf:
                out[t] = np.nan
                continue
            num = 0.0
            den = 0.0
            for k in range(1, k_periods + 1):
                anchor = t + direction * k * period
                ref = center_ref
                if reference_mode == 1:
                    ref = values[min(max(anchor, 0), n - 1)]
                for h in range(-half_window, half_window + 1):
                    j = anchor + h
                    if j < 0 or j >= n:
                        continue
                    dv = values[j] - ref
                    w = math.exp(-h * h * inv_d - dv * dv * inv_v - top)
                    num += w * (values[j] - values[t])
                    den += w
            out[t] = values[t] + num / den

    def nonlocal_filter_numba(values, period, k_periods, half_window, delta_d, delta_i, reference_mode):
        out = np.empty(values.size)
        _nonlocal_filter_numba(
            np.ascontiguousarray(values, dtype=np.float64),
            period, k_periods, half_window, float(delta_d), float(delta_i), int(reference_mode), out,
        )
        if np.isnan(out).any():
            raise RuntimeError("point without any valid seasonal neighbour")
        return out

    @njit(cache=True)
    def window_sum_numba(x, width):
        nrows = x.size - width + 1
        out = np.empty(nrows)
        for r in range(nrows):
            s = 0.0
            for c in range(r, r + width):
                s += x[c]
            out[r] = s
        return out

    @njit(cache=True)
    def window_sum_adjoint_numba(y, width):
        nrows = y.size
        ncols = nrows + width - 1
        out = np.zeros(ncols)
        for r in range(nrows):
            v = y[r]
            for c in range(r, r + width):
                out[c] += v
        return out

    @njit(cache=True)
    def window_gram_banded_numba(w, width, ncols):
        nrows = w.size
        u = width - 1
        cs = np.zeros(nrows + 1)
        for r in range(nrows):
            cs[r + 1] = cs[r] + w[r]
        ab = np.zeros((u + 1, ncols))
        for j in range(ncols):
            for d in range(min(width, j + 1)):
                i = j - d
                lo = max(0, j - width + 1)
                hi = min(i, nrows - 1)
                if hi >= lo:
                    ab[u - d, j] = cs[hi + 1] - cs[lo]
        return ab


_IMPLS = {
    "numpy": {
        "bilateral_filter": bilateral_filter_numpy,
        "nonlocal_filter": nonlocal_filter_numpy,
        "window_sum": window_sum_numpy,
        "window_sum_adjoint": window_sum_adjoint_numpy,
        "window_gram_banded": window_gram_banded_numpy,
    }
}
if HAVE_NUMBA:
    _IMPLS["numba"] = {
        "bilateral_filter": bilateral_filter_numba,
        "nonlocal_filter": nonlocal_filter_numba,
        "window_sum": window_sum_numba,
        "window_sum_adjoint": window_sum_adjoint_numba,
        "window_gram_banded": window_gram_banded_numba,
    }

_active = {}
BACKEND = ""


def available_backends():
    return sorted(_IMPLS)


def set_backend(name: str) -> str:
    """Switch every kernel to ``name`` (``"numba"`` or ``"numpy"``); return the previous backend."""
    global BACKEND
    if name not in _IMPLS:
        raise ValueError(f"unknown or unavailable backend {name!r}; choose from {available_backends()}")
    previous = BACKEND
    _active.update(_IMPLS[name])
    BACKEND = name
    return previous


def _apply_thread_cap():
    raw = os.environ.get("ROBUSTSTL_THREADS", "0").strip() or "0"
    try:
        cap = int(raw)
    except ValueError:
        return
    if HAVE_NUMBA and cap > 0:
        numba.set_num_threads(min(cap, numba.config.NUMBA_NUM_THREADS))


def bilateral_filter(values, half_window, delta_d, delta_i):
    return _active["bilateral_filter"](
        np.ascontiguousarray(values, dtype=np.float64), int(half_window), float(delta_d), float(delta_i)
    )


def nonlocal_filter(values, period, k_periods, half_window, delta_d, delta_i, reference_mode=REF_ROBUST):
    return _active["nonlocal_filter"](
        np.ascontiguousarray(values, dtype=np.float64),
        int(period), int(k_periods), int(half_window), float(delta_d), float(delta_i), int(reference_mode),
    )


def window_sum(x, width):
    return _active["window_sum"](np.ascontiguousarray(x, dtype=np.float64), int(width))


def window_sum_adjoint(y, width):
    return _active["window_sum_adjoint"](np.ascontiguousarray(y, dtype=np.float64), int(width))


def window_gram_banded(w, width, ncols):
    return _active["window_gram_banded"](np.ascontiguousarray(w, dtype=np.float64), int(width), int(ncols))


_default = os.environ.get("ROBUSTSTL_BACKEND", "numba" if HAVE_NUMBA else "numpy").strip().lower()
set_backend(_default if _default in _IMPLS else "numpy")
_apply_thread_cap()
