"""``robuststl`` command line: generate, decompose, evaluate.

Exit codes: 0 success, 2 invalid flags or input, 3 I/O failure,
4 outer iterations did not converge (output still written), 5 trend solver
failure, 6 length mismatch between result and truth.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import evaluation, pipeline, synth
from .core import (
    ITERATION_SCHEMES,
    SEASON_REFERENCES,
    LengthMismatch,
    RobustStlConfig,
    RobustStlError,
    SolverDidNotConverge,
    TimeSeries,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NOT_CONVERGED = 4
EXIT_SOLVER = 5
EXIT_LENGTH = 6

class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _fmt(x: float) -> str:
    # repr is the shortest string that parses back to the same double
    return repr(float(x))


def write_table(path, columns: dict[str, np.ndarray], index_name: str = "t") -> None:
    """Write equal-length columns to CSV with a 1-based index column first."""
    names = list(columns)
    n = len(next(iter(columns.values())))
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([index_name, *names])
            for i in range(n):
                writer.writerow([i + 1, *(_fmt(columns[c][i]) for c in names)])
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from None


def read_table(path, required=("value",)) -> dict[str, np.ndarray]:
    """Read a series CSV and check its shape.

    ``t`` must run 1, 2, ... without gaps and every cell must be a finite
    number; the first offending row is named in the error.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from None
    if not rows:
        raise CliError(f"{path}: file is empty", EXIT_USAGE)
    header = [h.strip() for h in rows[0]]
    missing = [c for c in ("t", *required) if c not in header]
    if missing:
        raise CliError(f"{path}: missing column(s) {missing}; header is {header}", EXIT_USAGE)
    data = {name: [] for name in header}
    for line_no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise CliError(f"{path}: row {line_no} has {len(row)} cells, expected {len(header)}", EXIT_USAGE)
        for name, cell in zip(header, row):
            try:
                value = float(cell)
            except ValueError:
                value = math.nan
            if not math.isfinite(value):
                raise CliError(f"{path}: row {line_no}, column {name!r}: {cell!r} is not a finite number",
                               EXIT_USAGE)
            data[name].append(value)
    columns = {name: np.asarray(values, dtype=np.float64) for name, values in data.items()}
    t = columns["t"]
    expected = np.arange(1, t.size + 1)
    if t.size == 0:
        raise CliError(f"{path}: no data rows", EXIT_USAGE)
    if not np.array_equal(t, expected):
        bad = int(np.flatnonzero(t != expected)[0])
        raise CliError(f"{path}: row {bad + 2}: t={t[bad]:g}, expected {bad + 1} (t must be 1, 2, 3, ...)",
                       EXIT_USAGE)
    return columns


def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LOW,HIGH, got {text!r}") from None
    return lo, hi


def cmd_generate(args) -> int:
    defaults = synth.SyntheticSpec()
    spec = synth.SyntheticSpec(
        period=args.period, num_periods=args.periods, seed=args.seed,
        seasonal_amplitude=args.amplitude, max_shift=args.max_shift,
        num_level_changes=args.level_changes,
        level_change_magnitude_range=args.level_range or defaults.level_change_magnitude_range,
        num_anomalies=args.anomalies,
        anomaly_magnitude_range=args.anomaly_range or defaults.anomaly_magnitude_range,
        noise_variance=args.noise_variance, base_level=args.base_level,
    )
    series, truth = synth.generate(spec)
    write_table(args.out, {
        "value": series.values, "trend": truth.trend, "seasonal": truth.seasonal,
        "anomaly": truth.anomalies, "noise": truth.noise,
    })
    print(f"wrote {series.n} rows to {args.out}")
    return EXIT_OK


def _config_from_args(args) -> RobustStlConfig:
    return RobustStlConfig().with_overrides(
        lambda1=args.lambda1, lambda2=args.lambda2,
        season_neighborhood_periods=args.season_k, season_half_window=args.season_h,
        season_delta_d=args.season_delta_d, season_delta_i=args.season_delta_i,
        season_reference=args.season_reference,
        denoise_half_window=args.denoise_h, denoise_delta_d=args.denoise_delta_d,
        denoise_delta_i=args.denoise_delta_i,
        iteration_scheme=args.scheme, max_outer_iterations=args.max_iterations,
        outer_tolerance=args.tolerance,
    )


def cmd_decompose(args) -> int:
    table = read_table(args.input)
    series = TimeSeries(table["value"], args.period)
    config = _config_from_args(args)
    try:
        result, diagnostics = pipeline.decompose(series, config)
    except SolverDidNotConverge as exc:
        raise CliError(f"trend solver failed: {exc}", EXIT_SOLVER) from None

    columns = {"value": series.values, "trend": result.trend, "seasonal": result.seasonal,
               "remainder": result.remainder}
    if args.baseline == "classical":
        base = evaluation.classical_baseline(series)
        columns.update(baseline_trend=base.trend, baseline_seasonal=base.seasonal,
                       baseline_remainder=base.remainder)
    write_table(args.out, columns)
    if args.diagnostics:
        rows = diagnostics.as_rows()
        write_table(args.diagnostics,
                    {key: np.array([r[key] for r in rows]) for key in rows[0] if key != "iteration"},
                    index_name="iteration")

    print(f"iterations={result.iterations_run}")
    print(f"converged={str(result.converged).lower()}")
    if not result.converged:
        print(f"outer iterations did not converge within {config.max_outer_iterations} passes; "
              f"output written to {args.out}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_evaluate(args) -> int:
    result = read_table(args.result, required=("trend", "seasonal"))
    truth = read_table(args.truth, required=("trend", "seasonal"))
    est = SimpleNamespace(trend=result["trend"], seasonal=result["seasonal"])
    ref = SimpleNamespace(trend=truth["trend"], seasonal=truth["seasonal"])
    try:
        report = evaluation.score(est, ref)
    except LengthMismatch as exc:
        raise CliError(str(exc), EXIT_LENGTH) from None
    for line in report.to_lines():
        print(line)
    if "baseline_trend" in result and "baseline_seasonal" in result:
        base = evaluation.score(
            SimpleNamespace(trend=result["baseline_trend"], seasonal=result["baseline_seasonal"]), ref)
        for line in base.to_lines():
            print(f"baseline_{line}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robuststl", description="Robust seasonal-trend decomposition.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-pass progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    defaults = synth.SyntheticSpec()
    gen = sub.add_parser("generate", help="write a synthetic series with ground truth")
    gen.add_argument("--period", type=int, default=defaults.period)
    gen.add_argument("--periods", type=int, default=defaults.num_periods)
    gen.add_argument("--seed", type=int, default=defaults.seed)
    gen.add_argument("--amplitude", type=float, default=defaults.seasonal_amplitude)
    gen.add_argument("--max-shift", type=int, default=defaults.max_shift)
    gen.add_argument("--level-changes", type=int, default=defaults.num_level_changes)
    gen.add_argument("--level-range", type=_range, metavar="LOW,HIGH")
    gen.add_argument("--anomalies", type=int, default=defaults.num_anomalies)
    gen.add_argument("--anomaly-range", type=_range, metavar="LOW,HIGH")
    gen.add_argument("--noise-variance", type=float, default=defaults.noise_variance)
    gen.add_argument("--base-level", type=float, default=defaults.base_level)
    gen.add_argument("--out", required=True, type=Path)
    gen.set_defaults(func=cmd_generate)

    dec = sub.add_parser("decompose", help="decompose a series CSV")
    dec.add_argument("--in", dest="input", required=True, type=Path)
    dec.add_argument("--period", required=True, type=int)
    dec.add_argument("--out", required=True, type=Path)
    dec.add_argument("--diagnostics", type=Path, help="also write per-pass diagnostics CSV")
    dec.add_argument("--lambda1", type=float)
    dec.add_argument("--lambda2", type=float)
    dec.add_argument("--season-k", type=int, help="number of previous periods searched")
    dec.add_argument("--season-h", type=int, help="half-width of each seasonal neighbourhood")
    dec.add_argument("--season-delta-d", type=float)
    dec.add_argument("--season-delta-i", type=float)
    dec.add_argument("--season-reference", choices=SEASON_REFERENCES)
    dec.add_argument("--denoise-h", type=int)
    dec.add_argument("--denoise-delta-d", type=float)
    dec.add_argument("--denoise-delta-i", type=float)
    dec.add_argument("--scheme", choices=ITERATION_SCHEMES)
    dec.add_argument("--max-iterations", type=int)
    dec.add_argument("--tolerance", type=float)
    dec.add_argument("--baseline", choices=("classical",), help="add a baseline decomposition side by side")
    dec.set_defaults(func=cmd_decompose)

    ev = sub.add_parser("evaluate", help="score a decomposition against ground truth")
    ev.add_argument("--result", required=True, type=Path)
    ev.add_argument("--truth", required=True, type=Path)
    ev.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except RobustStlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LENGTH if isinstance(exc, LengthMismatch) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
