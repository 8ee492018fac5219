"""Synthetic benchmark: jittered square-wave season, stepwise trend, spikes/dips and noise.

Ground truth is kept component by component so a decomposition can be
scored against it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import InvalidSpec, TimeSeries


@dataclass(frozen=True)
class SyntheticSpec:
    period: int = 50
    num_periods: int = 15
    seasonal_amplitude: float = 1.0
    max_shift: int = 2
    num_level_changes: int = 10
    level_change_magnitude_range: tuple[float, float] = (1.0, 3.0)
    num_anomalies: int = 14
    anomaly_magnitude_range: tuple[float, float] = (2.0, 5.0)
    noise_variance: float = 0.1
    base_level: float = 0.0
    seed: int = 0

    @property
    def length(self) -> int:
        return self.period * self.num_periods

    def validate(self) -> "SyntheticSpec":
        if self.period < 2 or self.num_periods < 3:
            raise InvalidSpec(f"need period >= 2 and num_periods >= 3 (got {self.period}, {self.num_periods})")
        if self.num_level_changes < 0 or self.num_anomalies < 0:
            raise InvalidSpec("counts must be nonnegative")
        if self.num_level_changes + self.num_anomalies >= self.length:
            raise InvalidSpec(
                f"{self.num_level_changes} level changes + {self.num_anomalies} anomalies do not fit in N={self.length}"
            )
        if self.num_level_changes > self.length - 1:
            raise InvalidSpec("more level changes than admissible positions")
        if not 0 <= self.max_shift < self.period / 4:
            raise InvalidSpec(f"max_shift must lie in [0, period/4), got {self.max_shift}")
        if self.noise_variance < 0:
            raise InvalidSpec(f"noise_variance must be nonnegative, got {self.noise_variance}")
        for name in ("level_change_magnitude_range", "anomaly_magnitude_range"):
            lo, hi = getattr(self, name)
            if not 0 <= lo <= hi:
                raise InvalidSpec(f"{name} must satisfy 0 <= low <= high, got {(lo, hi)}")
        return self


@dataclass(frozen=True)
class GroundTruth:
    trend: np.ndarray
    seasonal: np.ndarray
    anomalies: np.ndarray
    noise: np.ndarray
    level_change_points: np.ndarray
    shifts: np.ndarray

    def total(self) -> np.ndarray:
        return self.trend + self.seasonal + self.anomalies + self.noise


def square_wave_template(period: int, amplitude: float) -> np.ndarray:
    """One zero-mean period of a 50% duty square wave.

    The high half sits in the middle (``T/4 <= i < 3T/4``) so both edges are
    interior.  A circular shift by less than ``T/4`` then moves the edges
    without ever splitting a pulse across the period boundary, which would
    otherwise leave one-sample glitches where neighbouring periods are
    shifted differently.
    """
    i = np.arange(period)
    template = np.where((i >= period / 4) & (i < 3 * period / 4), amplitude, -amplitude).astype(np.float64)
    return template - template.mean()


def _signed(rng, count, lo, hi):
    return rng.uniform(lo, hi, count) * rng.choice([-1.0, 1.0], count)


def generate(spec: SyntheticSpec | None = None) -> tuple[TimeSeries, GroundTruth]:
    """Draw one realization of ``spec``; deterministic for a fixed seed."""
    spec = (spec or SyntheticSpec()).validate()
    # one independent stream per component, so specs that differ in a single
    # component (say max_shift) share every other draw
    rng_shift, rng_level, rng_anomaly, rng_noise = (
        np.random.default_rng(child) for child in np.random.SeedSequence(spec.seed).spawn(4))
    n, period = spec.length, spec.period

    template = square_wave_template(period, spec.seasonal_amplitude)
    shifts = rng_shift.integers(-spec.max_shift, spec.max_shift + 1, spec.num_periods)
    seasonal = np.concatenate([np.roll(template, int(s)) for s in shifts])

    change_points = np.sort(rng_level.choice(np.arange(1, n), spec.num_level_changes, replace=False))
    steps = np.zeros(n)
    steps[change_points] = _signed(rng_level, spec.num_level_changes, *spec.level_change_magnitude_range)
    trend = spec.base_level + np.cumsum(steps)

    free = np.setdiff1d(np.arange(n), change_points)
    anomaly_points = rng_anomaly.choice(free, spec.num_anomalies, replace=False)
    anomalies = np.zeros(n)
    anomalies[anomaly_points] = _signed(rng_anomaly, spec.num_anomalies, *spec.anomaly_magnitude_range)

    noise = rng_noise.normal(0.0, np.sqrt(spec.noise_variance), n) if spec.noise_variance > 0 else np.zeros(n)

    truth = GroundTruth(trend=trend, seasonal=seasonal, anomalies=anomalies, noise=noise,
                        level_change_points=change_points, shifts=np.asarray(shifts))
    return TimeSeries(truth.total(), period), truth
