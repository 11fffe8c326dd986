"""Structured space-time mesh, bilinear shape functions and Gauss bookkeeping.

Conventions used throughout the package:

* nodes are numbered row-major in x, bottom-to-top in t: ``node = j*(nx+1) + i``
* element ``e = j*nx + i`` has nodes (counterclockwise from bottom-left)
  ``(i, j), (i+1, j), (i+1, j+1), (i, j+1)``
* reference element is ``[-1, 1]^2`` with ``xi`` along x and ``eta`` along t
* the four Gauss points of an element are ordered ``q = 2*a + b`` where ``a``
  indexes the time abscissa and ``b`` the space abscissa

Gauss-point fields are stored on a "Gauss grid" of shape ``(2*nt, 2*nx)``:
row ``2*j + a`` is a Gauss timeline and column ``2*i + b`` a spatial Gauss
abscissa, so one row is directly the set of samples on a Gauss timeline.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np

GAUSS_ABSCISSA = 1.0 / np.sqrt(3.0)
# offsets of the two Gauss abscissae as a fraction of the element length
GAUSS_FRACTIONS = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))

_REF_NODES = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


@dataclass(frozen=True)
class QuadRule:
    """Tensor 2x2 Gauss rule on the reference square."""

    points: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss2x2(cls) -> "QuadRule":
        s = np.array([-GAUSS_ABSCISSA, GAUSS_ABSCISSA])
        pts = np.array([[s[b], s[a]] for a in range(2) for b in range(2)])
        return cls(points=pts, weights=np.ones(4))


def shape_eval(ref_xi) -> tuple[np.ndarray, np.ndarray]:
    """Bilinear basis values and reference gradients at ``(xi, eta)``.

    Returns ``(values[4], grads[4, 2])`` with ``grads[:, 0] = dN/dxi`` and
    ``grads[:, 1] = dN/deta``.
    """
    xi, eta = float(ref_xi[0]), float(ref_xi[1])
    sx, se = _REF_NODES[:, 0], _REF_NODES[:, 1]
    values = 0.25 * (1.0 + sx * xi) * (1.0 + se * eta)
    grads = np.empty((4, 2))
    grads[:, 0] = 0.25 * sx * (1.0 + se * eta)
    grads[:, 1] = 0.25 * se * (1.0 + sx * xi)
    return values, grads


@dataclass(frozen=True)
class Timeline:
    kind: Literal["nodal", "gauss"]
    time: float
    sample_x: np.ndarray


@dataclass(frozen=True, eq=False)
class Mesh:
    nx: int
    nt: int
    x_range: tuple[float, float]
    t_range: tuple[float, float]
    node_coords: np.ndarray = field(repr=False)
    element_connectivity: np.ndarray = field(repr=False)
    element_size: tuple[float, float]

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.nt + 1)

    @property
    def n_elements(self) -> int:
        return self.nx * self.nt

    @property
    def hx(self) -> float:
        return self.element_size[0]

    @property
    def te(self) -> float:
        return self.element_size[1]

    def node_id(self, i, j):
        return j * (self.nx + 1) + i

    @cached_property
    def left_nodes(self) -> np.ndarray:
        return self.node_id(0, np.arange(self.nt + 1))

    @cached_property
    def right_nodes(self) -> np.ndarray:
        return self.node_id(self.nx, np.arange(self.nt + 1))

    @cached_property
    def bottom_nodes(self) -> np.ndarray:
        return self.node_id(np.arange(self.nx + 1), 0)

    @cached_property
    def top_nodes(self) -> np.ndarray:
        return self.node_id(np.arange(self.nx + 1), self.nt)

    @cached_property
    def x_nodes(self) -> np.ndarray:
        lo, hi = self.x_range
        return lo + np.arange(self.nx + 1) * self.hx

    @cached_property
    def t_nodes(self) -> np.ndarray:
        lo, hi = self.t_range
        return lo + np.arange(self.nt + 1) * self.te

    @cached_property
    def gauss_x(self) -> np.ndarray:
        """Spatial Gauss abscissae, one pair per element column, increasing."""
        f = np.array(GAUSS_FRACTIONS)
        return (self.x_nodes[:-1, None] + self.hx * f[None, :]).ravel()

    @cached_property
    def gauss_t(self) -> np.ndarray:
        """Gauss timeline times, one pair per element row, increasing."""
        f = np.array(GAUSS_FRACTIONS)
        return (self.t_nodes[:-1, None] + self.te * f[None, :]).ravel()

    @property
    def x_centers(self) -> np.ndarray:
        return self.x_nodes[:-1] + 0.5 * self.hx

    def grid_to_elements(self, grid: np.ndarray) -> np.ndarray:
        """Gauss grid ``(2nt, 2nx)`` -> per-element array ``(ne, 4)``."""
        g = np.asarray(grid).reshape(self.nt, 2, self.nx, 2)
        return g.transpose(0, 2, 1, 3).reshape(self.n_elements, 4)

    def elements_to_grid(self, values: np.ndarray) -> np.ndarray:
        v = np.asarray(values).reshape(self.nt, self.nx, 2, 2)
        return v.transpose(0, 2, 1, 3).reshape(2 * self.nt, 2 * self.nx)

    @cached_property
    def reference_tables(self) -> dict[str, np.ndarray]:
        """Shape values and physical gradients at the four Gauss points.

        The mesh is uniform, so one table serves every element. Keys:
        ``N``, ``dNdx``, ``dNdt`` with shape ``(4 quad points, 4 nodes)`` and
        ``wdet`` the quadrature weight times the Jacobian determinant.
        """
        rule = QuadRule.gauss2x2()
        n = np.empty((4, 4))
        dx = np.empty((4, 4))
        dt = np.empty((4, 4))
        for q, pt in enumerate(rule.points):
            vals, grads = shape_eval(pt)
            n[q] = vals
            dx[q] = grads[:, 0] * 2.0 / self.hx
            dt[q] = grads[:, 1] * 2.0 / self.te
        wdet = rule.weights[0] * self.hx * self.te / 4.0
        return {"N": n, "dNdx": dx, "dNdt": dt, "wdet": np.array(wdet)}


def build_mesh(nx: int, nt: int, x_range, t_range) -> Mesh:
    if int(nx) != nx or int(nt) != nt or nx < 1 or nt < 1:
        raise ValueError(f"element counts must be positive integers, got nx={nx}, nt={nt}")
    nx, nt = int(nx), int(nt)
    x_lo, x_hi = map(float, x_range)
    t_lo, t_hi = map(float, t_range)
    if not (x_hi > x_lo) or not (t_hi > t_lo):
        raise ValueError(f"degenerate interval: x={x_range}, t={t_range}")
    hx = (x_hi - x_lo) / nx
    te = (t_hi - t_lo) / nt

    i = np.arange(nx + 1)
    j = np.arange(nt + 1)
    xs = x_lo + i * hx
    ts = t_lo + j * te
    coords = np.empty(((nx + 1) * (nt + 1), 2))
    coords[:, 0] = np.tile(xs, nt + 1)
    coords[:, 1] = np.repeat(ts, nx + 1)

    ei, ej = np.meshgrid(np.arange(nx), np.arange(nt))
    base = (ej * (nx + 1) + ei).ravel()
    conn = np.stack([base, base + 1, base + nx + 2, base + nx + 1], axis=1)
    return Mesh(nx, nt, (x_lo, x_hi), (t_lo, t_hi), coords, conn.astype(np.int64), (hx, te))


def gauss_timelines(mesh: Mesh) -> list[Timeline]:
    return [Timeline("gauss", float(t), mesh.gauss_x) for t in mesh.gauss_t]


def nodal_timelines(mesh: Mesh) -> list[Timeline]:
    return [Timeline("nodal", float(t), mesh.x_nodes) for t in mesh.t_nodes]
