"""Newton-Raphson driver and the sparse direct solve behind it."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)


class SingularMatrixError(np.linalg.LinAlgError):
    def __init__(self, message: str, pivot: int | None = None):
        super().__init__(message)
        self.pivot = pivot


class NewtonWarning(UserWarning):
    pass


@dataclass
class LinearSystem:
    matrix: sp.spmatrix | np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        n, m = self.matrix.shape
        if n != m:
            raise ValueError(f"matrix must be square, got {self.matrix.shape}")
        if np.shape(self.rhs) != (n,):
            raise ValueError(f"rhs shape {np.shape(self.rhs)} does not match matrix {n}x{n}")


def _locate_pivot(matrix) -> int | None:
    """Index of the first vanishing pivot of a dense LU, for error reports."""
    if matrix.shape[0] > 4000:
        return None
    dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
    _, info = scipy.linalg.lapack.dgetrf(dense)[1:]
    return int(info) - 1 if info > 0 else None


def solve_linear(system: LinearSystem) -> np.ndarray:
    """Sparse LU (SuperLU, partial pivoting) solve of ``system``."""
    a = sp.csc_matrix(system.matrix)
    b = np.asarray(system.rhs, dtype=float)
    if a.shape[0] == 0:
        return np.zeros(0)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", spla.MatrixRankWarning)
            lu = spla.splu(a, permc_spec="COLAMD", diag_pivot_thresh=1.0)
    except (RuntimeError, spla.MatrixRankWarning) as exc:
        pivot = _locate_pivot(a)
        raise SingularMatrixError(f"singular matrix ({exc}); pivot={pivot}", pivot) from exc
    x = lu.solve(b)
    if not np.all(np.isfinite(x)):
        pivot = _locate_pivot(a)
        raise SingularMatrixError(f"non-finite solution; pivot={pivot}", pivot)
    return x


@dataclass
class NewtonReport:
    iterations: int = 0
    residual_history: list[float] = field(default_factory=list)
    converged: bool = False
    stagnated: bool = False
    halvings: int = 0


def _trial(residual_fn, x, dx, step):
    # an ArithmeticError (e.g. a degenerate dual-to-primal map) counts as an infinite residual
    x_new = x + step * dx
    try:
        r_new = np.asarray(residual_fn(x_new))
    except ArithmeticError as exc:
        return x_new, None, np.inf, exc
    return x_new, r_new, float(np.max(np.abs(r_new))), None


def newton_solve(
    residual_fn: Callable[[np.ndarray], np.ndarray],
    jacobian_fn: Callable[[np.ndarray], sp.spmatrix | np.ndarray],
    init: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 50,
    stagnation_window: int = 5,
    stagnation_factor: float = 1e-3,
    growth_guard: float = 10.0,
    max_halvings: int = 10,
) -> tuple[np.ndarray, NewtonReport]:
    """Plain Newton iteration ``J dD = -R``, ``D <- D + dD``.

    Convergence is declared when ``max|R| < tol``. A run whose residual
    max-norm fails to drop by ``stagnation_factor`` over ``stagnation_window``
    iterations is also accepted, with ``report.stagnated`` set (this is the
    rounding floor for large penalty coefficients). If a full step grows the
    residual by more than ``growth_guard`` (or leaves the domain of the
    residual) the step is halved.
    """
    x = np.array(init, dtype=float, copy=True)
    report = NewtonReport()
    r = np.asarray(residual_fn(x))
    d = float(np.max(np.abs(r))) if r.size else 0.0
    report.residual_history.append(d)
    while True:
        if d < tol:
            report.converged = True
            return x, report
        hist = report.residual_history
        if len(hist) > stagnation_window and d > stagnation_factor * hist[-1 - stagnation_window]:
            report.converged = True
            report.stagnated = True
            warnings.warn(f"Newton stagnated at max|R|={d:.3e} (tol={tol:.1e})", NewtonWarning, stacklevel=2)
            return x, report
        if report.iterations >= max_iter:
            return x, report

        jac = jacobian_fn(x)
        dx = solve_linear(LinearSystem(jac, -r))
        step = 1.0
        x_new, r_new, d_new, err = _trial(residual_fn, x, dx, step)
        while not (d_new <= growth_guard * d) and report.halvings < max_halvings:
            step *= 0.5
            report.halvings += 1
            x_new, r_new, d_new, err = _trial(residual_fn, x, dx, step)
        if err is not None:
            raise err
        x, r, d = x_new, r_new, d_new
        report.iterations += 1
        report.residual_history.append(d)
        log.debug("newton it=%d max|R|=%.3e step=%.3g", report.iterations, d, step)
