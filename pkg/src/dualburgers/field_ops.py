"""One-dimensional field operations on a timeline.

Smoothing (Galerkin solve of ``u - η u'' = f``), L2 projection onto the
continuous piecewise-linear space, slope extraction from a nodal line, and
the Gauss-pair averaging used for plotting.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import GAUSS_FRACTIONS

DEFAULT_ETA = 1e-4


@dataclass
class LineSamples:
    positions: np.ndarray
    values: np.ndarray
    boundary_values: tuple[float | None, float | None] | None = None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.positions.shape != self.values.shape:
            raise ValueError("positions and values must align")
        if np.any(np.diff(self.positions) <= 0):
            raise ValueError("sample positions must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("sample values must be finite")


@dataclass
class NodalLine:
    node_positions: np.ndarray
    nodal_values: np.ndarray

    def __post_init__(self):
        self.node_positions = np.asarray(self.node_positions, dtype=float)
        self.nodal_values = np.asarray(self.nodal_values, dtype=float)
        if self.node_positions.shape != self.nodal_values.shape:
            raise ValueError("one value per node required")

    def __call__(self, x) -> np.ndarray:
        return np.interp(x, self.node_positions, self.nodal_values)

    def at_gauss(self) -> np.ndarray:
        """Interpolant evaluated at the two Gauss abscissae of every element."""
        v = self.nodal_values
        f = np.array(GAUSS_FRACTIONS)
        return (v[:-1, None] * (1.0 - f) + v[1:, None] * f).ravel()


def _line_matrices(nodes: np.ndarray) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Consistent mass and stiffness matrices of linear elements on ``nodes``."""
    h = np.diff(nodes)
    n = nodes.size
    me = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    ke = np.array([[1.0, -1.0], [-1.0, 1.0]])
    rows = np.array([0, 0, 1, 1])
    cols = np.array([0, 1, 0, 1])
    base = np.arange(n - 1)[:, None]
    r = (base + rows[None, :]).ravel()
    c = (base + cols[None, :]).ravel()
    m = sp.coo_matrix(((h[:, None] * me.ravel()[None, :]).ravel(), (r, c)), shape=(n, n)).tocsr()
    k = sp.coo_matrix(((ke.ravel()[None, :] / h[:, None]).ravel(), (r, c)), shape=(n, n)).tocsr()
    return m, k


def _gauss_load(nodes: np.ndarray, gauss_values: np.ndarray) -> np.ndarray:
    """``∫ f N^A dx`` with ``f`` given at the element Gauss abscissae."""
    h = np.diff(nodes)
    f = np.array(GAUSS_FRACTIONS)
    s = np.asarray(gauss_values, dtype=float).reshape(h.size, 2)
    b = np.zeros(nodes.size)
    b[:-1] += 0.5 * h * (s @ (1.0 - f))
    b[1:] += 0.5 * h * (s @ f)
    return b


def _check_gauss_positions(samples: LineSamples, nodes: np.ndarray) -> None:
    f = np.array(GAUSS_FRACTIONS)
    expected = (nodes[:-1, None] + np.diff(nodes)[:, None] * f).ravel()
    if samples.positions.shape != expected.shape or not np.allclose(samples.positions, expected, rtol=0, atol=1e-12):
        raise ValueError("sample positions must be the Gauss abscissae of the line mesh")


def _constrained_solve(a: sp.csr_matrix, b: np.ndarray, fixed: dict[int, float]) -> np.ndarray:
    n = b.size
    u = np.zeros(n)
    idx = np.array(sorted(fixed), dtype=int)
    free = np.setdiff1d(np.arange(n), idx)
    if idx.size:
        u[idx] = [fixed[i] for i in idx]
    rhs = b[free] - a[free][:, idx] @ u[idx] if idx.size else b[free]
    sub = sp.csc_matrix(a[free][:, free])
    try:
        u[free] = spla.splu(sub).solve(rhs)
    except RuntimeError as exc:
        raise np.linalg.LinAlgError(f"line system is singular: {exc}") from exc
    return u


def smooth(samples: LineSamples, eta: float = DEFAULT_ETA, nodes: np.ndarray | None = None) -> NodalLine:
    """Galerkin solution of ``u - η u'' = f`` on the line mesh.

    Dirichlet values come from ``samples.boundary_values`` where given; a
    missing side falls back to the mean of the two Gauss samples of the end
    element. When ``nodes`` is omitted the mesh is recovered from the Gauss
    abscissae (two per element).
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    if nodes is None:
        nodes = nodes_from_gauss(samples.positions)
    nodes = np.asarray(nodes, dtype=float)
    if nodes.size < 3:
        raise ValueError("smoothing needs at least two elements")
    _check_gauss_positions(samples, nodes)
    left, right = samples.boundary_values or (None, None)
    if left is None:
        left = 0.5 * (samples.values[0] + samples.values[1])
    if right is None:
        right = 0.5 * (samples.values[-2] + samples.values[-1])
    m, k = _line_matrices(nodes)
    b = _gauss_load(nodes, samples.values)
    u = _constrained_solve((m + eta * k).tocsr(), b, {0: float(left), nodes.size - 1: float(right)})
    return NodalLine(nodes, u)


def l2_project_line(samples: LineSamples, line_mesh: np.ndarray,
                    constraints: dict[int, float] | None = None) -> NodalLine:
    """L2 projection of Gauss-sampled data onto continuous P1 on ``line_mesh``.

    ``constraints`` maps node index to a known value; those nodes are removed
    from the system and take the given value.
    """
    nodes = np.asarray(line_mesh, dtype=float)
    _check_gauss_positions(samples, nodes)
    m, _ = _line_matrices(nodes)
    b = _gauss_load(nodes, samples.values)
    fixed = {int(k) % nodes.size: float(v) for k, v in (constraints or {}).items()}
    return NodalLine(nodes, _constrained_solve(m, b, fixed))


def differentiate_nodal(line: NodalLine) -> np.ndarray:
    """Elementwise slope of the interpolant, repeated at both Gauss points."""
    slopes = np.diff(line.nodal_values) / np.diff(line.node_positions)
    return np.repeat(slopes, 2)


def nodes_from_gauss(gauss_x: np.ndarray) -> np.ndarray:
    """Recover a uniform or non-uniform line mesh from its Gauss abscissae."""
    g = np.asarray(gauss_x, dtype=float).reshape(-1, 2)
    f0, f1 = GAUSS_FRACTIONS
    h = (g[:, 1] - g[:, 0]) / (f1 - f0)
    lo = g[:, 0] - f0 * h
    return np.append(lo, lo[-1] + h[-1])


def pair_average(values: np.ndarray) -> np.ndarray:
    """Mean of the two Gauss values of each element along the last axis."""
    v = np.asarray(values, dtype=float)
    return v.reshape(*v.shape[:-1], -1, 2).mean(axis=-1)


def gauss_line_average(stage) -> list[tuple[float, np.ndarray, np.ndarray]]:
    """Plot samples of a stage's retained Gauss timelines.

    Returns a list of ``(t, x_centers, averaged_values)`` with one value per
    element crossed by the timeline. ``stage`` is a :class:`StageResult`.
    """
    mesh = stage.mesh
    out = []
    for row in stage.retained_rows:
        out.append((float(mesh.gauss_t[row]), mesh.x_centers, pair_average(stage.primal_u[row])))
    return out
