"""Seasonal differencing and the single l1 objective for the trend's first difference.

The stacked system is

    P = [ M ; lambda1 * I ; lambda2 * D ],   q = [ g ; 0 ]

where row ``r`` of ``M`` sums ``T`` consecutive first differences and ``D``
takes adjacent differences.  ``P`` is never formed densely: products go
through sliding-window sums and the normal matrix is assembled directly in
banded storage.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

from . import _kernels
from .core import DimensionMismatch, LadSolverConfig, SeriesTooShort
from .lad_solver import LadSolution, solve_l1


def seasonal_difference(y_prime, period: int) -> np.ndarray:
    """``g_i = y'_{i+T} - y'_i`` for every ``i`` with a full period behind it."""
    y = np.asarray(y_prime, dtype=np.float64)
    if y.size < period + 1:
        raise SeriesTooShort(f"need at least T+1={period + 1} samples, got {y.size}")
    return y[period:] - y[:-period]


@dataclass(frozen=True)
class SparseLinearSystem:
    """Structured ``(P, q)`` pair; implements the operator interface of :func:`solve_l1`."""

    g: np.ndarray
    n: int
    period: int
    lambda1: float
    lambda2: float

    @property
    def ncols(self) -> int:
        return self.n - 1

    @property
    def shape(self) -> tuple[int, int]:
        return (3 * self.n - self.period - 3, self.n - 1)

    @property
    def q(self) -> np.ndarray:
        return np.concatenate([self.g, np.zeros(2 * self.n - 3)])

    @property
    def nnz(self) -> int:
        return (self.n - self.period) * self.period + (self.n - 1) + 2 * (self.n - 2)

    def _split(self, y):
        nm = self.n - self.period
        return y[:nm], y[nm:nm + self.n - 1], y[nm + self.n - 1:]

    def matvec(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.concatenate([
            _kernels.window_sum(x, self.period),
            self.lambda1 * x,
            self.lambda2 * (x[:-1] - x[1:]),
        ])

    def rmatvec(self, y):
        ym, yi, yd = self._split(np.asarray(y, dtype=np.float64))
        out = _kernels.window_sum_adjoint(ym, self.period) + self.lambda1 * yi
        out[:-1] += self.lambda2 * yd
        out[1:] -= self.lambda2 * yd
        return out

    def column_abs_sums(self):
        c = np.arange(self.ncols)
        nrows = self.n - self.period
        cover = np.minimum(c, nrows - 1) - np.maximum(0, c - self.period + 1) + 1
        d_touch = np.full(self.ncols, 2.0)
        d_touch[[0, -1]] = 1.0
        return np.maximum(cover, 0) + abs(self.lambda1) + abs(self.lambda2) * d_touch

    def factor_gram(self, w, ridge):
        wm, wi, wd = self._split(np.asarray(w, dtype=np.float64))
        u = self.period - 1
        ab = _kernels.window_gram_banded(wm, self.period, self.ncols)
        diag = self.lambda1**2 * wi + ridge
        diag[:-1] += self.lambda2**2 * wd
        diag[1:] += self.lambda2**2 * wd
        ab[u] += diag
        ab[u - 1, 1:] -= self.lambda2**2 * wd
        chol = scipy.linalg.cholesky_banded(ab, lower=False, check_finite=False)
        return lambda rhs: scipy.linalg.cho_solve_banded((chol, False), rhs, check_finite=False)

    def objective(self, x) -> float:
        return float(np.abs(self.matvec(x) - self.q).sum())

    def to_sparse(self) -> scipy.sparse.csr_matrix:
        nm, nc, t = self.n - self.period, self.ncols, self.period
        rows = np.repeat(np.arange(nm), t)
        cols = (np.arange(nm)[:, None] + np.arange(t)[None, :]).ravel()
        m_block = scipy.sparse.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(nm, nc))
        i_block = self.lambda1 * scipy.sparse.identity(nc, format="csr")
        d_block = scipy.sparse.diags([np.ones(nc - 1), -np.ones(nc - 1)], [0, 1], shape=(nc - 1, nc))
        return scipy.sparse.vstack([m_block, i_block, self.lambda2 * d_block]).tocsr()

    def toarray(self) -> np.ndarray:
        return self.to_sparse().toarray()


def build_system(g, n: int, period: int, lambda1: float, lambda2: float) -> SparseLinearSystem:
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 1 or g.size != n - period:
        raise DimensionMismatch(f"g must have length N-T = {n - period}, got {g.shape}")
    if n < 3:
        raise DimensionMismatch(f"need N >= 3, got {n}")
    g = g.copy()
    g.setflags(write=False)
    return SparseLinearSystem(g=g, n=int(n), period=int(period), lambda1=float(lambda1), lambda2=float(lambda2))


def relative_trend_from_differences(diffs) -> np.ndarray:
    """Cumulate first differences into a trend anchored at zero for the first sample."""
    return np.concatenate([[0.0], np.cumsum(diffs)])


def extract_relative_trend(y_prime, period: int, lambda1: float, lambda2: float,
                           solver_config: LadSolverConfig | None = None, return_solution: bool = False):
    """Robust trend of ``y_prime`` relative to its first sample.

    Solves the l1 problem for the trend's first differences and cumulates
    them.  The detrended signal is ``y_prime - result``.  With
    ``return_solution=True`` returns ``(relative_trend, LadSolution)``.
    """
    y = np.asarray(y_prime, dtype=np.float64)
    g = seasonal_difference(y, period)
    system = build_system(g, y.size, period, lambda1, lambda2)
    solution: LadSolution = solve_l1(system, system.q, solver_config)
    trend = relative_trend_from_differences(solution.x)
    if return_solution:
        return trend, solution
    return trend
