"""Least-absolute-deviations solver: minimize ``||A x - b||_1``.

:func:`solve_l1` is a Mehrotra predictor-corrector interior point method on
the LP ``min 1'u  s.t.  -u <= A x - b <= u``.  Each Newton step reduces to
one weighted normal-equation solve ``A' W A dx = rhs``; the operator decides
how to factor it, which is what lets the trend system use a banded Cholesky.

:func:`lp_reference` is an independent dense full-tableau simplex on the same
LP, meant for tests and debugging of small problems.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .core import DimensionMismatch, LadSolverConfig, RobustStlError, SolverDidNotConverge

logger = logging.getLogger(__name__)


class Unbounded(RobustStlError, RuntimeError):
    pass


class Infeasible(RobustStlError, RuntimeError):
    pass


@dataclass(frozen=True)
class LadSolution:
    x: np.ndarray
    objective: float
    iterations: int
    converged: bool
    residual_history: list = field(default_factory=list)
    dual: Optional[np.ndarray] = None


class DenseOperator:
    """Adapter giving a dense matrix the operator interface used by :func:`solve_l1`."""

    def __init__(self, matrix):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        self.shape = self.matrix.shape

    def matvec(self, x):
        return self.matrix @ x

    def rmatvec(self, y):
        return self.matrix.T @ y

    def column_abs_sums(self):
        return np.abs(self.matrix).sum(axis=0)

    def factor_gram(self, w, ridge) -> Callable[[np.ndarray], np.ndarray]:
        a = self.matrix
        gram = (a.T * w) @ a
        gram[np.diag_indices_from(gram)] += ridge
        cho = scipy.linalg.cho_factor(gram, check_finite=False)
        return lambda rhs: scipy.linalg.cho_solve(cho, rhs, check_finite=False)

    def toarray(self):
        return self.matrix


class SparseOperator:
    """Adapter for ``scipy.sparse`` matrices; factors the normal matrix with SuperLU."""

    def __init__(self, matrix):
        self.matrix = scipy.sparse.csr_matrix(matrix, dtype=np.float64)
        self.shape = self.matrix.shape

    def matvec(self, x):
        return self.matrix @ x

    def rmatvec(self, y):
        return self.matrix.T @ y

    def column_abs_sums(self):
        return np.asarray(abs(self.matrix).sum(axis=0)).ravel()

    def factor_gram(self, w, ridge):
        a = self.matrix
        gram = (a.T @ scipy.sparse.diags(w) @ a).tocsc()
        gram = gram + ridge * scipy.sparse.identity(self.shape[1], format="csc")
        return scipy.sparse.linalg.factorized(gram.tocsc())

    def toarray(self):
        return self.matrix.toarray()


def as_operator(a):
    """Wrap ``a`` for :func:`solve_l1` unless it already speaks the operator interface."""
    if hasattr(a, "factor_gram") and hasattr(a, "matvec"):
        return a
    if scipy.sparse.issparse(a):
        return SparseOperator(a)
    return DenseOperator(a)


def l1_objective(a, x, b) -> float:
    op = as_operator(a)
    return float(np.abs(op.matvec(np.asarray(x, dtype=np.float64)) - b).sum())


def _max_step(v, dv):
    neg = dv < 0
    if not neg.any():
        return 1.0
    return min(1.0, float(np.min(-v[neg] / dv[neg])))


def _polish(op, b, x, objective, z):
    """Snap a converged iterate onto a nearby vertex.

    A vertex has at least ``n`` zero residuals, and rows whose dual lies
    strictly inside (-1, 1) have zero residual at the optimum.  Two guesses at
    the zero set are tried: the ``n`` smallest residuals, and those plus the
    dual-interior rows.  Each is fitted exactly in the least-squares sense
    while the other rows barely move; the best candidate is kept only if it
    is no worse than ``x``.
    """
    m, n = op.shape
    r = op.matvec(x) - b
    smallest = np.zeros(m, dtype=bool)
    smallest[np.argsort(np.abs(r), kind="stable")[:n]] = True
    interior = smallest | (np.abs(z) < 1.0 - 1e-3)
    colscale = max(float(np.max(op.column_abs_sums())), 1.0)
    best_x, best = x, objective
    for free in (smallest, interior):
        try:
            solve = op.factor_gram(np.where(free, 1.0, 1e-8), 1e-14 * colscale)
            candidate = x + solve(op.rmatvec(np.where(free, -r, 0.0)))
        except (np.linalg.LinAlgError, RuntimeError, ValueError):
            continue
        value = float(np.abs(op.matvec(candidate) - b).sum())
        if np.isfinite(value) and value <= best:
            best_x, best = candidate, value
        if free is smallest and interior.sum() == n:
            break
    return best_x, best


def solve_l1(a, b, config: LadSolverConfig | None = None) -> LadSolution:
    """Minimize ``||A x - b||_1`` starting from ``x = 0``.

    ``a`` may be a dense array, a ``scipy.sparse`` matrix, or any object with
    ``shape``, ``matvec``, ``rmatvec``, ``column_abs_sums`` and
    ``factor_gram(w, ridge)``.

    Convergence means the duality gap is below
    ``rel_tolerance * objective + abs_tolerance`` and the dual iterate is
    feasible to ``rel_tolerance`` relative to the column scale.  The returned
    ``x`` is the best iterate seen, so the objective is never worse than at
    ``x = 0``.  Raises :class:`SolverDidNotConverge` (carrying that best
    iterate) when the iteration budget runs out.
    """
    config = config or LadSolverConfig()
    op = as_operator(a)
    b = np.asarray(b, dtype=np.float64).ravel()
    m, n = op.shape
    if b.size != m:
        raise DimensionMismatch(f"b has length {b.size}, operator has {m} rows")
    if not np.all(np.isfinite(b)):
        raise ValueError("b must be finite")

    x = np.zeros(n)
    best_x, best_obj = x.copy(), float(np.abs(b).sum())
    history = [best_obj]
    if best_obj == 0.0 or n == 0:
        return LadSolution(x=x, objective=best_obj, iterations=0, converged=True,
                           residual_history=history, dual=np.zeros(m))

    colscale = max(float(np.max(op.column_abs_sums())), 1.0)
    bscale = max(float(np.max(np.abs(b))), np.finfo(float).tiny)
    r = op.matvec(x) - b
    u = np.abs(r) + bscale
    lam1 = np.full(m, 0.5)
    lam2 = np.full(m, 0.5)
    converged = False
    iterations = 0

    for iterations in range(1, config.max_iterations + 1):
        r = op.matvec(x) - b
        s1 = u - r
        s2 = u + r
        if not (np.all(s1 > 0) and np.all(s2 > 0) and np.all(lam1 > 0) and np.all(lam2 > 0)):
            # slacks rounded to zero: no further progress is possible in floating point
            break
        z = lam1 - lam2
        ra = 1.0 - lam1 - lam2
        rb = -op.rmatvec(z)
        mu = (s1 @ lam1 + s2 @ lam2) / (2 * m)

        d1 = lam1 / s1
        d2 = lam2 / s2
        e = d1 + d2
        f = d1 - d2
        w = 4.0 * d1 * d2 / e
        ridge = 1e-13 * max(float(np.max(w)), 1.0) * colscale
        try:
            solve = op.factor_gram(w, ridge)
        except (np.linalg.LinAlgError, RuntimeError):
            solve = op.factor_gram(w, ridge * 1e6)

        def newton(c1, c2):
            h = c1 / s1 + c2 / s2 - ra
            rhs = rb - op.rmatvec(c1 / s1 - c2 / s2 - f * h / e)
            dx = solve(rhs)
            adx = op.matvec(dx)
            du = (h + f * adx) / e
            ds1 = du - adx
            ds2 = du + adx
            dl1 = (c1 - lam1 * ds1) / s1
            dl2 = (c2 - lam2 * ds2) / s2
            return dx, du, ds1, ds2, dl1, dl2

        # predictor
        dx, du, ds1, ds2, dl1, dl2 = newton(-s1 * lam1, -s2 * lam2)
        ap = min(_max_step(s1, ds1), _max_step(s2, ds2))
        ad = min(_max_step(lam1, dl1), _max_step(lam2, dl2))
        mu_aff = ((s1 + ap * ds1) @ (lam1 + ad * dl1) + (s2 + ap * ds2) @ (lam2 + ad * dl2)) / (2 * m)
        sigma = (mu_aff / mu) ** 3
        # corrector
        c1 = sigma * mu - s1 * lam1 - ds1 * dl1
        c2 = sigma * mu - s2 * lam2 - ds2 * dl2
        dx, du, ds1, ds2, dl1, dl2 = newton(c1, c2)
        ap = 0.99 * min(_max_step(s1, ds1), _max_step(s2, ds2))
        ad = 0.99 * min(_max_step(lam1, dl1), _max_step(lam2, dl2))

        if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(du))):
            break
        x = x + ap * dx
        u = u + ap * du
        lam1 = lam1 + ad * dl1
        lam2 = lam2 + ad * dl2

        r = op.matvec(x) - b
        obj = float(np.abs(r).sum())
        if obj < best_obj:
            best_obj, best_x = obj, x.copy()
        history.append(best_obj)

        z = np.clip(lam1 - lam2, -1.0, 1.0)
        gap = obj - float(r @ z)
        infeas = float(np.max(np.abs(op.rmatvec(z)))) if n else 0.0
        if gap <= config.rel_tolerance * obj + config.abs_tolerance and infeas <= config.rel_tolerance * colscale:
            converged = True
            break

    z = np.clip(lam1 - lam2, -1.0, 1.0)
    if converged or iterations < config.max_iterations:
        best_x, best_obj = _polish(op, b, best_x, best_obj, z)
    if not converged and iterations < config.max_iterations:
        # stopped at the floating-point floor; the polished vertex may still pass
        r = op.matvec(best_x) - b
        gap = best_obj - float(r @ z)
        infeas = float(np.max(np.abs(op.rmatvec(z))))
        converged = gap <= config.rel_tolerance * best_obj + config.abs_tolerance and \
            infeas <= config.rel_tolerance * colscale
    solution = LadSolution(x=best_x, objective=best_obj, iterations=iterations, converged=converged,
                           residual_history=history, dual=z)
    if not converged:
        reason = ("iteration budget spent" if iterations >= config.max_iterations
                  else "stalled at floating-point precision before reaching the tolerance")
        raise SolverDidNotConverge(
            f"LAD solver stopped after {iterations} iterations, {reason} (objective {best_obj:.6g})",
            solution=solution,
        )
    logger.debug("solve_l1: %d iterations, objective %.10g", iterations, best_obj)
    return solution


def lp_reference(a, b, max_pivots: int = 100_000) -> LadSolution:
    """Exact LAD optimum of a small dense problem via full-tableau simplex.

    Standard form: ``A x+ - A x- - p + q = b`` with all variables nonnegative
    and cost ``sum(p + q)``.  Choosing ``q_i`` (or ``p_i`` for negative
    ``b_i``) as the starting basis makes the first tableau feasible, so no
    phase one is needed.  Bland's rule prevents cycling.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.asarray(b, dtype=np.float64).ravel()
    m, n = a.shape
    if b.size != m:
        raise DimensionMismatch(f"b has length {b.size}, A has {m} rows")
    nv = 2 * n + 2 * m
    eye = np.eye(m)
    tab = np.hstack([a, -a, -eye, eye, b[:, None]])
    cost = np.concatenate([np.zeros(2 * n), np.ones(2 * m)])
    basis = np.empty(m, dtype=np.int64)
    for i in range(m):
        if b[i] >= 0:
            basis[i] = 2 * n + m + i
        else:
            tab[i] = -tab[i]
            basis[i] = 2 * n + i
    if np.any(tab[:, -1] < 0):
        raise Infeasible("starting basis is not feasible")

    scale = max(1.0, float(np.max(np.abs(tab))))
    eps = 1e-11 * scale
    pivots = 0
    while True:
        reduced = cost - cost[basis] @ tab[:, :nv]
        candidates = np.flatnonzero(reduced < -eps)
        if candidates.size == 0:
            break
        if pivots >= max_pivots:
            raise RuntimeError(f"simplex exceeded {max_pivots} pivots")
        col = int(candidates[0])
        column = tab[:, col]
        rows = np.flatnonzero(column > eps)
        if rows.size == 0:
            raise Unbounded("LP unbounded; impossible for an l1 objective")
        ratios = tab[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + eps * max(1.0, abs(best))]
        row = int(ties[np.argmin(basis[ties])])
        tab[row] /= tab[row, col]
        others = np.arange(m) != row
        tab[others] -= np.outer(tab[others, col], tab[row])
        basis[row] = col
        pivots += 1

    values = np.zeros(nv)
    values[basis] = tab[:, -1]
    x = values[:n] - values[n:2 * n]
    objective = float(np.abs(a @ x - b).sum())
    return LadSolution(x=x, objective=objective, iterations=pivots, converged=True,
                       residual_history=[objective])
