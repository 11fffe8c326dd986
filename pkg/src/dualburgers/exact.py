"""Benchmark problems, their exact entropy solutions and shock diagnostics.

All five presets live on ``x ∈ (0, 1)`` with ``Y(0, 0) = 0``. ``Y`` is the
spatial antiderivative of ``u`` and is normalized so that ``Y_0(0) = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

KINDS = ("fan", "shock", "double_shock", "half_nwave", "nwave")

X0 = 0.25
L0 = 0.25
H0 = 2.0
T_MERGE = 0.5
T_FOCUS = 1.0 / (4.0 * H0)


def _arr(x):
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class Problem:
    """Initial/boundary data of a Burgers problem, with optional oracles."""

    name: str
    u0: Callable
    Y0: Callable
    ul: Callable
    Yl: Callable
    exact_u: Callable | None = None
    exact_Y: Callable | None = None
    breakpoints: tuple[float, ...] = ()
    lipschitz: float = 1.0
    kinks: Callable | None = None
    shocks: Callable | None = None

    def discontinuities(self, t: float) -> list[float]:
        return list(self.kinks(t)) if self.kinks is not None else []

    def shock_positions(self, t: float) -> list[float]:
        return list(self.shocks(t)) if self.shocks is not None else []


@dataclass(frozen=True)
class BenchmarkKind:
    name: str
    x0: float = X0
    l0: float = L0
    h0: float = H0

    def __post_init__(self):
        if self.name not in KINDS:
            raise ValueError(f"unknown benchmark {self.name!r}; choose from {KINDS}")

    @property
    def problem(self) -> Problem:
        return PRESETS[self.name]()


# -- initial data ------------------------------------------------------------

def _u0(kind: str, x):
    x = _arr(x)
    if kind == "fan":
        return np.where(x < 0.5, 0.0, 1.0)
    if kind == "shock":
        return np.where(x < 0.5, 1.0, 0.0)
    if kind == "double_shock":
        return np.select([x < 0.25, x < 0.5], [1.0, 0.5], 0.0)
    if kind == "half_nwave":
        inside = (x >= X0) & (x < X0 + L0)
        return np.where(inside, H0 / L0 * (x - X0), 0.0)
    if kind == "nwave":
        inside = (x >= 0.25) & (x < 0.75)
        return np.where(inside, -4.0 * H0 * (x - 0.5), 0.0)
    raise ValueError(f"unknown benchmark {kind!r}")


def _Y0(kind: str, x):
    x = _arr(x)
    if kind == "fan":
        return np.where(x < 0.5, 0.0, x - 0.5)
    if kind == "shock":
        return np.where(x < 0.5, x, 0.5)
    if kind == "double_shock":
        return np.select([x < 0.25, x < 0.5], [x, 0.5 * x + 0.125], 0.375)
    if kind == "half_nwave":
        mid = H0 / L0 * ((x * x + X0 * X0) / 2.0 - X0 * x)
        return np.select([x < X0, x < X0 + L0], [0.0, mid], H0 * L0 / 2.0)
    if kind == "nwave":
        inside = (x >= 0.25) & (x < 0.75)
        return np.where(inside, -2.0 * H0 * (x * x - x) - 3.0 * H0 / 8.0, 0.0)
    raise ValueError(f"unknown benchmark {kind!r}")


# -- exact entropy solutions -------------------------------------------------

def _half_nwave_lh(t):
    l = np.sqrt(H0 * L0 * t + L0 * L0)
    return l, H0 * L0 / l


def _positive_time(t):
    t = _arr(t)
    if np.any(t <= 0):
        raise ValueError("exact solutions are evaluated for t > 0")
    return t


def exact_u(kind, x, t):
    """Entropy solution ``u(x, t)`` of the preset ``kind`` (name or BenchmarkKind)."""
    kind = getattr(kind, "name", kind)
    x = _arr(x)
    t = _positive_time(t)
    x, t = np.broadcast_arrays(x, t)
    if kind == "fan":
        return np.select([x < 0.5, x < 0.5 + t], [0.0, (x - 0.5) / t], 1.0)
    if kind == "shock":
        return np.where(x < 0.5 + t / 2.0, 1.0, 0.0)
    if kind == "double_shock":
        before = np.select([x < 0.25 + 0.75 * t, x < 0.5 + 0.25 * t], [1.0, 0.5], 0.0)
        after = np.where(x < 0.625 + 0.5 * (t - T_MERGE), 1.0, 0.0)
        return np.where(t < T_MERGE, before, after)
    if kind == "half_nwave":
        l, h = _half_nwave_lh(t)
        inside = (x >= X0) & (x < X0 + l)
        return np.where(inside, h / l * (x - X0), 0.0)
    if kind == "nwave":
        region1 = (x - 2 * t - 0.25 >= 0) & (x + 2 * t - 0.75 <= 0)
        region2 = (x >= 0.25) & (x < 0.5) & (x - 2 * t - 0.25 <= 0)
        region3 = (x > 0.5) & (x <= 0.75) & (x + 2 * t - 0.75 >= 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.select([region1, region2, region3],
                             [8 * (x - 0.5) / (8 * t - 1), (x - 0.25) / t, (x - 0.75) / t], 0.0)
    raise ValueError(f"unknown benchmark {kind!r}")


def exact_Y(kind, x, t):
    """Antiderivative ``Y(x, t)`` of the entropy solution, ``Y_0(0) = 0``."""
    kind = getattr(kind, "name", kind)
    x = _arr(x)
    t = _positive_time(t)
    x, t = np.broadcast_arrays(x, t)
    if kind == "fan":
        mid = x * x / (2 * t) - 0.5 * x / t + 1.0 / (8 * t)
        return np.select([x < 0.5, x < 0.5 + t], [0.0, mid], x - 0.5 - t / 2.0)
    if kind == "shock":
        return np.where(x < 0.5 + t / 2.0, x - t / 2.0, 0.5)
    if kind == "double_shock":
        before = np.select([x < 0.25 + 0.75 * t, x < 0.5 + 0.25 * t],
                           [x - t / 2.0, x / 2.0 + 0.125 - t / 8.0], 0.375)
        # merged shock travels at 1/2, where x - t/2 meets 0.375
        after = np.where(x < 0.625 + 0.5 * (t - T_MERGE), x - t / 2.0, 0.375)
        return np.where(t < T_MERGE, before, after)
    if kind == "half_nwave":
        l, h = _half_nwave_lh(t)
        mid = h / l * ((x * x + X0 * X0) / 2.0 - X0 * x)
        return np.select([x < X0, x < X0 + l], [0.0, mid], H0 * L0 / 2.0)
    if kind == "nwave":
        with np.errstate(divide="ignore", invalid="ignore"):
            left_fan = (2 * x * x - x) / (4 * t) + 1.0 / (32 * t)
            right_fan = (2 * x * x - 3 * x) / (4 * t) + 9.0 / (32 * t)
            middle = 4 * (x * x - x) / (8 * t - 1) + (8 * t + 3) / (4 * (8 * t - 1))
        before = np.select([(x >= 0.25) & (x < 0.25 + H0 * t),
                            (x >= 0.25 + H0 * t) & (x < 0.75 - H0 * t),
                            (x >= 0.75 - H0 * t) & (x < 0.75)],
                           [left_fan, middle, right_fan], 0.0)
        after = np.select([(x >= 0.25) & (x < 0.5), (x >= 0.5) & (x < 0.75)], [left_fan, right_fan], 0.0)
        return np.where(t < T_FOCUS, before, after)
    raise ValueError(f"unknown benchmark {kind!r}")


def _kinks(kind: str, t: float) -> list[float]:
    if kind == "fan":
        return [0.5, 0.5 + t]
    if kind == "shock":
        return [0.5 + t / 2]
    if kind == "double_shock":
        if t < T_MERGE:
            return [0.25 + 0.75 * t, 0.5 + 0.25 * t]
        return [0.625 + 0.5 * (t - T_MERGE)]
    if kind == "half_nwave":
        return [X0, X0 + math.sqrt(H0 * L0 * t + L0 * L0)]
    if kind == "nwave":
        if t < T_FOCUS:
            return [0.25, 0.25 + 2 * t, 0.75 - 2 * t, 0.75]
        return [0.25, 0.5, 0.75]
    raise ValueError(kind)


def shock_positions(kind, t: float) -> list[float]:
    """Locations of the exact shocks (not weak kinks) at time ``t``."""
    kind = getattr(kind, "name", kind)
    if kind == "fan":
        return []
    if kind == "shock":
        return [0.5 + t / 2]
    if kind == "double_shock":
        return _kinks(kind, t)
    if kind == "half_nwave":
        return [X0 + math.sqrt(H0 * L0 * t + L0 * L0)]
    if kind == "nwave":
        return [0.5] if t >= T_FOCUS else []
    raise ValueError(f"unknown benchmark {kind!r}")


_BREAKPOINTS = {
    "fan": (0.5,),
    "shock": (0.5,),
    "double_shock": (0.25, 0.5),
    "half_nwave": (X0, X0 + L0),
    "nwave": (0.25, 0.75),
}
_LIPSCHITZ = {"fan": 1.0, "shock": 1.0, "double_shock": 1.0, "half_nwave": H0, "nwave": H0}
# Y on the left boundary, consistent with the exact solution at x = 0
_YL = {
    "fan": lambda t: np.zeros_like(_arr(t)),
    "shock": lambda t: -_arr(t) / 2.0,
    "double_shock": lambda t: -_arr(t) / 2.0,
    "half_nwave": lambda t: np.zeros_like(_arr(t)),
    "nwave": lambda t: np.zeros_like(_arr(t)),
}
_UL = {
    "fan": 0.0, "shock": 1.0, "double_shock": 1.0, "half_nwave": 0.0, "nwave": 0.0,
}


def preset(kind: str) -> Problem:
    if kind not in KINDS:
        raise ValueError(f"unknown benchmark {kind!r}; choose from {KINDS}")
    ul = _UL[kind]
    return Problem(
        name=kind,
        u0=lambda x: _u0(kind, x),
        Y0=lambda x: _Y0(kind, x),
        ul=lambda t: np.full_like(_arr(t), ul),
        Yl=_YL[kind],
        exact_u=lambda x, t: exact_u(kind, x, t),
        exact_Y=lambda x, t: exact_Y(kind, x, t),
        breakpoints=_BREAKPOINTS[kind],
        lipschitz=_LIPSCHITZ[kind],
        kinks=lambda t: _kinks(kind, t),
        shocks=lambda t: shock_positions(kind, t),
    )


PRESETS = {k: (lambda k=k: preset(k)) for k in KINDS}


def constant_problem(c: float) -> Problem:
    """Uniform state ``u ≡ c``; an exact solution of both forms."""
    return Problem(
        name=f"constant({c:g})",
        u0=lambda x: np.full_like(_arr(x), c),
        Y0=lambda x: c * _arr(x),
        ul=lambda t: np.full_like(_arr(t), c),
        Yl=lambda t: -0.5 * c * c * _arr(t),
        exact_u=lambda x, t: np.full(np.broadcast(_arr(x), _arr(t)).shape, float(c)),
        exact_Y=lambda x, t: c * _arr(x) - 0.5 * c * c * _arr(t),
        lipschitz=abs(c) + 1e-12,
    )


def get_problem(problem) -> Problem:
    if isinstance(problem, Problem):
        return problem
    if isinstance(problem, BenchmarkKind):
        return preset(problem.name)
    return preset(str(problem))


# -- viscous (Hopf-Cole) formulae ---------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
SHIFT_CUTOFF = 46.0


class QuadratureError(RuntimeError):
    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


def _hopf_cole_chunk(prob: Problem, nu: float, x: np.ndarray, t: np.ndarray,
                     rtol: float, max_panels: int):
    # ψ(y) = Y0(y) + (x-y)^2/(2t); the integrand is exp(-ψ/(2ν))
    lip = prob.lipschitz
    cut = 2.0 * nu * SHIFT_CUTOFF
    width = 4.0 * t * lip + 2.0 * np.sqrt(2.0 * t * cut) + 1e-9
    grid = np.linspace(-1.0, 1.0, 801)
    ys = x[:, None] + width[:, None] * grid[None, :]
    psi = prob.Y0(ys) + (x[:, None] - ys) ** 2 / (2.0 * t[:, None])
    inside = psi - psi.min(axis=1, keepdims=True) < cut
    first = np.argmax(inside, axis=1)
    last = grid.size - 1 - np.argmax(inside[:, ::-1], axis=1)
    first = np.maximum(first - 1, 0)
    last = np.minimum(last + 1, grid.size - 1)
    rows = np.arange(x.size)
    y_lo = ys[rows, first]
    y_hi = ys[rows, last]

    bp = np.asarray(prob.breakpoints, dtype=float)
    edges = np.concatenate([y_lo[:, None], np.clip(bp[None, :], y_lo[:, None], y_hi[:, None]), y_hi[:, None]], axis=1)
    edges.sort(axis=1)

    def integrate(panels: int):
        frac = np.linspace(0.0, 1.0, panels + 1)
        a = edges[:, :-1, None] + (edges[:, 1:] - edges[:, :-1])[:, :, None] * frac[None, None, :-1]
        h = (edges[:, 1:] - edges[:, :-1])[:, :, None] / panels
        a = a.reshape(x.size, -1)
        h = np.repeat(h, panels, axis=2).reshape(x.size, -1)
        nodes = a[:, :, None] + 0.5 * h[:, :, None] * (_GL_X[None, None, :] + 1.0)
        w = 0.5 * h[:, :, None] * _GL_W[None, None, :]
        nodes = nodes.reshape(x.size, -1)
        w = w.reshape(x.size, -1)
        phi = -prob.Y0(nodes) / (2 * nu) - (x[:, None] - nodes) ** 2 / (4 * nu * t[:, None])
        m = phi.max(axis=1)
        e = w * np.exp(phi - m[:, None])
        i0 = e.sum(axis=1)
        i1 = (e * (x[:, None] - nodes)).sum(axis=1) / t
        return m, i0, i1

    panels = 2
    m, i0, i1 = integrate(panels)
    while True:
        panels *= 2
        m2, i0b, i1b = integrate(panels)
        # both refinements share the same shift only approximately; compare in log space
        log_a = m + np.log(i0)
        log_b = m2 + np.log(i0b)
        u_a = i1 / i0
        u_b = i1b / i0b
        err_y = np.max(np.abs(np.expm1(log_b - log_a))) if x.size else 0.0
        err_u = np.max(np.abs(u_b - u_a) / np.maximum(1.0, np.abs(u_b))) if x.size else 0.0
        m, i0, i1 = m2, i0b, i1b
        if max(err_y, err_u) <= rtol:
            break
        if panels >= max_panels:
            raise QuadratureError(f"Hopf-Cole quadrature reached {panels} panels with relative "
                                  f"change {max(err_y, err_u):.2e} > {rtol:.1e}", max(err_y, err_u))
    log_norm = np.log(2.0 * np.sqrt(np.pi * nu * t))
    Y = -2.0 * nu * (m + np.log(i0) - log_norm)
    return Y, i1 / i0


def viscous_solution(kind, nu: float, x, t, rtol: float = 1e-8, max_panels: int = 4096,
                     chunk: int = 2048) -> tuple[np.ndarray, np.ndarray]:
    """``(Y, u)`` of viscous Burgers from the Hopf-Cole formulae at ``(x, t)``."""
    if not nu > 0:
        raise ValueError("nu must be positive")
    prob = get_problem(kind)
    x = _arr(x)
    t = _positive_time(t)
    x, t = np.broadcast_arrays(x, t)
    shape = x.shape
    xf = x.ravel()
    tf = t.ravel()
    Y = np.empty(xf.size)
    u = np.empty(xf.size)
    for s in range(0, xf.size, chunk):
        sl = slice(s, s + chunk)
        Y[sl], u[sl] = _hopf_cole_chunk(prob, nu, xf[sl], tf[sl], rtol, max_panels)
    return Y.reshape(shape), u.reshape(shape)


def viscous_Y(kind, nu, x, t):
    return viscous_solution(kind, nu, x, t)[0]


def viscous_u(kind, nu, x, t):
    return viscous_solution(kind, nu, x, t)[1]


# -- shock diagnostics ---------------------------------------------------------

def rankine_hugoniot_speed(u_minus: float, u_plus: float) -> float:
    """Shock speed ``(F+ - F-)/(u+ - u-)`` for the flux ``u^2/2``."""
    if u_minus == u_plus:
        raise ValueError("no jump: u_minus == u_plus")
    return 0.5 * (u_minus + u_plus)


@dataclass
class Shock:
    position: float
    u_minus: float
    u_plus: float

    @property
    def speed(self) -> float:
        return rankine_hugoniot_speed(self.u_minus, self.u_plus)


def detect_shocks(x: np.ndarray, u: np.ndarray, window: tuple[float, float] = (-np.inf, np.inf),
                  min_jump: float = 0.2, span: int = 3, plateau: int = 3) -> list[Shock]:
    """Locate decreasing jumps in a sampled profile.

    A shock is a run where ``u`` drops by at least ``min_jump`` across
    ``span`` consecutive intervals. Its states ``u∓`` are medians of
    ``plateau`` samples on either side of the run and its position is the
    crossing of the midpoint value ``(u- + u+)/2`` inside the run. Runs that
    overlap are merged.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    n = x.size
    if n < span + 2:
        return []
    drop = u[:-span] - u[span:]
    flagged = drop >= min_jump
    shocks: list[Shock] = []
    k = 0
    while k < flagged.size:
        if not flagged[k]:
            k += 1
            continue
        start = k
        while k + 1 < flagged.size and flagged[k + 1]:
            k += 1
        lo, hi = start, k + span  # sample indices bracketing the run
        k += 1
        u_minus = float(np.median(u[max(0, lo - plateau + 1):lo + 1]))
        u_plus = float(np.median(u[hi:min(n, hi + plateau)]))
        if u_minus - u_plus < min_jump:
            continue
        mid = 0.5 * (u_minus + u_plus)
        seg_u = u[lo:hi + 1]
        seg_x = x[lo:hi + 1]
        below = np.flatnonzero((seg_u[:-1] >= mid) & (seg_u[1:] < mid))
        if below.size == 0:
            continue
        # pick the crossing with the steepest drop
        j = below[np.argmax(seg_u[below] - seg_u[below + 1])]
        x0, x1, v0, v1 = seg_x[j], seg_x[j + 1], seg_u[j], seg_u[j + 1]
        pos = x0 + (v0 - mid) / (v0 - v1) * (x1 - x0)
        if window[0] <= pos <= window[1]:
            shocks.append(Shock(float(pos), u_minus, u_plus))
    return shocks


@dataclass
class ShockDiagnostics:
    times: np.ndarray
    positions: np.ndarray
    speeds: np.ndarray
    rh_speeds: np.ndarray
    counts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __len__(self):
        return self.times.size

    def fitted_speed(self, t_min: float = -np.inf, t_max: float = np.inf) -> float:
        sel = (self.times >= t_min) & (self.times <= t_max)
        if sel.sum() < 2:
            raise ValueError("not enough samples to fit a speed")
        return float(np.polyfit(self.times[sel], self.positions[sel], 1)[0])


def centered_speeds(times: np.ndarray, positions: np.ndarray) -> np.ndarray:
    if times.size < 2:
        return np.full(times.size, np.nan)
    return np.gradient(positions, times)


def shock_diagnostics(profiles: Sequence[tuple[float, np.ndarray, np.ndarray]],
                      window: tuple[float, float] = (-np.inf, np.inf), **kwargs) -> ShockDiagnostics:
    """Track the strongest shock through ``(t, x, u)`` profiles."""
    times, pos, rh, counts = [], [], [], []
    for t, x, u in profiles:
        found = detect_shocks(x, u, window, **kwargs)
        if not found:
            continue
        best = max(found, key=lambda s: s.u_minus - s.u_plus)
        times.append(t)
        pos.append(best.position)
        rh.append(best.speed)
        counts.append(len(found))
    times = np.array(times)
    pos = np.array(pos)
    return ShockDiagnostics(times, pos, centered_speeds(times, pos), np.array(rh), np.array(counts, dtype=int))


def estimate_shock_trajectory(trajectory, window: tuple[float, float] = (-np.inf, np.inf), **kwargs) -> ShockDiagnostics:
    """Shock track along the cutoff lines of a conservation-form trajectory."""
    return shock_diagnostics(trajectory.cutoff_profiles(), window, **kwargs)


def conserved_integral(x_gauss: np.ndarray, values: np.ndarray) -> float:
    """Two-point Gauss approximation of ``∫ u dx`` from Gauss-line samples.

    ``x_gauss`` are the Gauss abscissae (two per element, as produced by the
    mesh); the element lengths are recovered from them.
    """
    g = np.asarray(x_gauss, dtype=float).reshape(-1, 2)
    h = (g[:, 1] - g[:, 0]) * math.sqrt(3.0)
    v = np.asarray(values, dtype=float).reshape(-1, 2)
    return float(np.sum(0.5 * h * v.sum(axis=1)))
