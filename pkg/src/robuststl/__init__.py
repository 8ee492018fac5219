"""Robust seasonal-trend decomposition of long, noisy time series.

>>> from robuststl import SyntheticSpec, generate, decompose, score
>>> series, truth = generate(SyntheticSpec(seed=1))
>>> result, diagnostics = decompose(series)
>>> report = score(result, truth)
"""
from ._kernels import available_backends, set_backend
from .core import (
    ConfigInvalid,
    DecompositionResult,
    DimensionMismatch,
    EmptyWindow,
    InvalidSeries,
    InvalidSpec,
    LadSolverConfig,
    LengthMismatch,
    NonPositiveBandwidth,
    NoValidNeighborhood,
    PeriodTooShort,
    RobustStlConfig,
    RobustStlError,
    SeriesTooShort,
    SolverDidNotConverge,
    TimeSeries,
    WindowExceedsPeriod,
    validate_config,
)
from .evaluation import MetricReport, classical_baseline, score
from .filters import denoise, nonlocal_seasonal_filter
from .lad_solver import LadSolution, lp_reference, solve_l1
from .pipeline import IterationDiagnostics, adjust, decompose
from .synth import GroundTruth, SyntheticSpec, generate
from .trend import build_system, extract_relative_trend, seasonal_difference

__version__ = "0.1.0"

__all__ = [
    "ConfigInvalid", "DecompositionResult", "DimensionMismatch", "EmptyWindow", "GroundTruth",
    "InvalidSeries", "InvalidSpec", "IterationDiagnostics", "LadSolution", "LadSolverConfig",
    "LengthMismatch", "MetricReport", "NoValidNeighborhood", "NonPositiveBandwidth", "PeriodTooShort",
    "RobustStlConfig", "RobustStlError", "SeriesTooShort", "SolverDidNotConverge", "SyntheticSpec",
    "TimeSeries", "WindowExceedsPeriod", "adjust", "available_backends", "build_system",
    "classical_baseline", "decompose", "denoise", "extract_relative_trend", "generate", "lp_reference",
    "nonlocal_seasonal_filter", "score", "seasonal_difference", "set_backend", "solve_l1",
    "validate_config",
]
