"""Dual solution of the circle-line intersection problem.

Primal system: ``x² + y² = 1`` and ``x = α``. With multipliers ``(λ, γ)`` and
the quadratic potential ``½(x − x̄)² + ½(y − ȳ)²`` the dual-to-primal map is

    x = (x̄ − γ)/(2λ + 1),   y = ȳ/(2λ + 1),

and the extrema of the dual objective are available in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


class NoSolutionError(ValueError):
    """The line misses the circle (``|α| > 1``) or the base state admits no extremum."""


class DegenerateBaseStateError(ValueError):
    """``ȳ = 0`` with ``|α| < 1``: the dual problem does not define primal points."""


@dataclass(frozen=True)
class CircleLineProblem:
    alpha: float
    xbar: float = 0.0
    ybar: float = 1.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.alpha, self.xbar, self.ybar)):
            raise ValueError("alpha, xbar and ybar must be finite")


@dataclass(frozen=True)
class CircleLineSolution:
    lam: float
    gamma: float
    x: float
    y: float
    family: bool = False  # True: λ is arbitrary (≠ −1/2); the entry is one member


def dtp(problem: CircleLineProblem, lam: float, gamma: float) -> tuple[float, float]:
    d = 2.0 * lam + 1.0
    if d == 0.0:
        raise ZeroDivisionError("dual-to-primal map undefined at lambda = -1/2")
    return (problem.xbar - gamma) / d, problem.ybar / d


def dual_objective(problem: CircleLineProblem, lam: float, gamma: float) -> float:
    x, y = dtp(problem, lam, gamma)
    return (lam * (x * x + y * y - 1.0) + gamma * (x - problem.alpha)
            + 0.5 * (x - problem.xbar) ** 2 + 0.5 * (y - problem.ybar) ** 2)


def family_member(problem: CircleLineProblem, lam: float) -> CircleLineSolution:
    """Member of the ``|α| = 1, ȳ = 0`` family for a given ``λ ≠ −1/2``."""
    if abs(abs(problem.alpha) - 1.0) > 1e-14 or problem.ybar != 0.0:
        raise ValueError("one-parameter family exists only for |alpha| = 1 and ybar = 0")
    if lam == -0.5:
        raise ValueError("lambda = -1/2 is excluded")
    gamma = problem.xbar - problem.alpha * (2.0 * lam + 1.0)
    x, y = dtp(problem, lam, gamma)
    return CircleLineSolution(lam, gamma, x, y, family=True)


def solve_circle_line(problem: CircleLineProblem) -> list[CircleLineSolution]:
    """Extrema of the dual objective and their primal images."""
    a, ybar = problem.alpha, problem.ybar
    if abs(a) > 1.0:
        raise NoSolutionError(f"|alpha| = {abs(a):g} > 1: the line does not meet the circle")
    if abs(a) == 1.0:
        if ybar != 0.0:
            raise NoSolutionError("|alpha| = 1 admits dual extrema only for ybar = 0")
        return [family_member(problem, 0.0)]
    if ybar == 0.0:
        raise DegenerateBaseStateError("ybar = 0 with |alpha| < 1 gives no primal solution")
    root = abs(ybar) / math.sqrt(1.0 - a * a)
    out = []
    for sign in (1.0, -1.0):
        lam = 0.5 * (sign * root - 1.0)
        gamma = problem.xbar - a * (2.0 * lam + 1.0)
        x, y = dtp(problem, lam, gamma)
        out.append(CircleLineSolution(lam, gamma, x, y))
    return out
