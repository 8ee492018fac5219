"""Acceptance run: one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines are written
straight to the terminal even when output capture is on.
"""
import time

import numpy as np
import pytest

import oracles
from robuststl import filters
from robuststl.core import RobustStlConfig, TimeSeries
from robuststl.evaluation import classical_baseline, score
from robuststl.lad_solver import lp_reference, solve_l1
from robuststl.pipeline import adjust, decompose
from robuststl.synth import SyntheticSpec, generate, square_wave_template
from robuststl.trend import build_system

SEEDS = range(5)
# lambda1, lambda2, K and H as used for the synthetic benchmark
BENCHMARK_CONFIG = RobustStlConfig(lambda1=10.0, lambda2=0.5, season_neighborhood_periods=2, season_half_window=5)


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
        assert ok, detail
    return emit


@pytest.fixture(scope="module")
def benchmark_runs():
    runs = []
    for seed in SEEDS:
        series, truth = generate(SyntheticSpec(seed=seed))
        start = time.perf_counter()
        result, _ = decompose(series, BENCHMARK_CONFIG)
        elapsed = time.perf_counter() - start
        runs.append(dict(seed=seed, ours=score(result, truth), base=score(classical_baseline(series), truth),
                         seconds=elapsed, converged=result.converged))
    return runs


def test_criterion_1_benchmark_accuracy(benchmark_runs, report):
    trend = np.mean([r["ours"].trend_mse for r in benchmark_runs])
    season = np.mean([r["ours"].season_mse for r in benchmark_runs])
    slowest = max(r["seconds"] for r in benchmark_runs)
    ok = trend <= 0.15 and season <= 0.08 and slowest <= 60 and all(r["converged"] for r in benchmark_runs)
    report(1, "synthetic benchmark", ok,
           f"mean trend MSE {trend:.4f} (<= 0.15), mean season MSE {season:.4f} (<= 0.08), "
           f"slowest run {slowest:.2f} s (<= 60)")


def test_criterion_2_beats_baseline(benchmark_runs, report):
    wins = [r["ours"].trend_mse < r["base"].trend_mse and r["ours"].season_mse < r["base"].season_mse
            for r in benchmark_runs]
    detail = ", ".join(
        f"seed {r['seed']}: trend {r['ours'].trend_mse:.3f} vs {r['base'].trend_mse:.3f}, "
        f"season {r['ours'].season_mse:.3f} vs {r['base'].season_mse:.3f}" for r in benchmark_runs)
    report(2, "ranking against the classical baseline", sum(wins) >= 4, f"{sum(wins)}/5 seeds better on both; {detail}")


def test_criterion_3_solver_matches_reference(report):
    rng = np.random.default_rng(2024)
    worst_gap = worst_cert = 0.0
    failures = 0
    for i in range(50):
        a, b = oracles.random_lad_instance(rng, banded=bool(i % 2))
        ours, ref = solve_l1(a, b), lp_reference(a, b)
        gap = abs(ours.objective - ref.objective) / max(abs(ref.objective), 1e-12)
        cert = oracles.subgradient_residual(a, ours.x, b, atol=1e-6) / np.abs(a).sum(axis=0).max()
        worst_gap, worst_cert = max(worst_gap, gap), max(worst_cert, cert)
        failures += gap > 1e-4 or cert > 1e-6
    report(3, "LAD solver against the simplex reference", failures == 0,
           f"50 instances, worst relative objective gap {worst_gap:.2e} (<= 1e-4), "
           f"worst scaled certificate {worst_cert:.2e} (<= 1e-6), failures {failures}")


def test_criterion_4_stacked_system_equals_triple_sum(report):
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(20):
        period = int(rng.integers(2, 11))
        n = int(rng.integers(period + 1, 31))
        l1, l2 = rng.uniform(0, 20, size=2)
        g = rng.normal(size=n - period)
        system = build_system(g, n, period, l1, l2)
        x = rng.normal(size=n - 1)
        expected = oracles.trend_objective_triple_sum(g, x, period, l1, l2)
        dense = system.toarray()
        for value in (system.objective(x), float(np.abs(dense @ x - system.q).sum())):
            worst = max(worst, abs(value - expected) / max(abs(expected), 1e-300))
    report(4, "term-by-term objective equals ||Px - q||_1", worst <= 1e-10, f"worst relative difference {worst:.2e}")


def test_criterion_5_structural_invariants(report):
    rng = np.random.default_rng(5)
    recon = zero_mean = weight_sum = convexity = 0.0
    for _ in range(25):
        period = int(rng.integers(3, 15))
        n = int(rng.integers(2 * period + 1, 9 * period))
        y = np.cumsum(rng.normal(size=n)) + np.tile(rng.normal(size=period), n // period + 1)[:n]
        y[rng.integers(0, n, 2)] += rng.normal(scale=10, size=2)
        scale = 1 + np.abs(y).max()
        result, _ = decompose(TimeSeries(y, period), RobustStlConfig(max_outer_iterations=4))
        recon = max(recon, np.abs(result.reconstruct() - y).max() / (np.finfo(float).eps * scale))
        whole = period * (n // period)
        zero_mean = max(zero_mean, abs(result.seasonal[:whole].mean()) / scale)

        rel = rng.normal(size=n)
        _, seasonal, remainder, _ = adjust(rel, y, y, period)
        zero_mean = max(zero_mean, abs(seasonal[:whole].mean()) / scale)

        h = (period - 1) // 2
        d_d, d_i = rng.uniform(0.3, 3), rng.uniform(0.05, 3)
        smooth = filters.nonlocal_seasonal_filter(y, period, 2, h, d_d, d_i)
        for t in range(n):
            nb = filters.seasonal_weights(t, y, period, 2, h, d_d, d_i)
            weight_sum = max(weight_sum, abs(nb.weights.sum() - 1))
            vals = y[nb.indices]
            convexity = max(convexity, (vals.min() - smooth[t]) / scale, (smooth[t] - vals.max()) / scale)
            window = np.arange(max(0, t - 3), min(n, t + 4))
            bw = filters.bilateral_weights(t, window, y, d_d, d_i)
            weight_sum = max(weight_sum, abs(bw.weights.sum() - 1))
        denoised = filters.denoise(y, 3, d_d, d_i)
        for t in range(n):
            window = y[max(0, t - 3):t + 4]
            convexity = max(convexity, (window.min() - denoised[t]) / scale, (denoised[t] - window.max()) / scale)
    ok = recon <= 4 and zero_mean < 1e-8 and weight_sum <= 1e-12 and convexity <= 1e-12
    report(5, "structural invariants", ok,
           f"reconstruction error {recon:.1f} ulp-scale (<= 4), |seasonal mean| {zero_mean:.1e} (< 1e-8), "
           f"weight-sum error {weight_sum:.1e} (<= 1e-12), scaled convexity excess {convexity:.1e} (<= 1e-12)")


def test_criterion_6_robustness(report):
    spike_trend = []
    spike_share = []
    for seed in SEEDS:
        series, _ = generate(SyntheticSpec(seed=seed))
        base, _ = decompose(series, BENCHMARK_CONFIG)
        y = series.values.copy()
        magnitude = 10 * y.std()
        t = 300 + 37 * seed
        y[t] += magnitude
        spiked, _ = decompose(TimeSeries(y, series.period), BENCHMARK_CONFIG)
        spike_trend.append(np.abs(spiked.trend - base.trend).max() / magnitude)
        spike_share.append((spiked.remainder[t] - base.remainder[t]) / magnitude)

    # per-period shifts of up to 2 samples move edges by up to 4 between
    # neighbouring periods, inside H = 5
    still, jittered = [], []
    for seed in SEEDS:
        common = dict(seed=seed, num_level_changes=0, num_anomalies=0)
        for shift, bucket in ((0, still), (2, jittered)):
            series, truth = generate(SyntheticSpec(max_shift=shift, **common))
            bucket.append(score(decompose(series, BENCHMARK_CONFIG)[0], truth).season_mse)
    ratio = np.mean(jittered) / np.mean(still)
    ok = max(spike_trend) < 0.2 and min(spike_share) >= 0.8 and ratio <= 3
    report(6, "spike robustness and seasonal-shift adaptation", ok,
           f"max trend change {max(spike_trend):.3%} of spike (< 20%), min spike share in remainder "
           f"{min(spike_share):.1%} (>= 80%), jittered/unjittered season MSE {ratio:.2f} (<= 3)")


def test_criterion_7_degenerate_inputs(report):
    period, periods = 50, 15
    n = period * periods
    constant, _ = decompose(TimeSeries(np.full(n, 3.7), period), BENCHMARK_CONFIG)
    constant_err = max(np.abs(constant.trend - 3.7).max(), np.abs(constant.seasonal).max(),
                       np.abs(constant.remainder).max())

    amplitude = 1.0
    wave = np.tile(square_wave_template(period, amplitude), periods)
    periodic, _ = decompose(TimeSeries(wave + 2.0, period), BENCHMARK_CONFIG)
    periodic_err = np.abs(periodic.remainder).max() / amplitude

    ramp = 0.01 * np.arange(n)
    ramped, _ = decompose(TimeSeries(ramp + wave, period), BENCHMARK_CONFIG)
    ramp_err = np.mean(np.abs(ramped.trend - ramp)) / np.ptp(ramp)

    ok = constant_err == 0.0 and periodic_err < 1e-3 and ramp_err < 0.02
    report(7, "degenerate inputs", ok,
           f"constant error {constant_err:g} (== 0), periodic max|r| {periodic_err:.1e} x amplitude (< 1e-3), "
           f"ramp + wave trend MAE {ramp_err:.2%} of range (< 2%)")
