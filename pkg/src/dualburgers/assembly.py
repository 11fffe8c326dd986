"""Dof numbering, Dirichlet elimination and the free-dof CSR pattern."""
from __future__ import annotations

from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh, GAUSS_FRACTIONS


class DtPDegeneracyError(ArithmeticError):
    """The dual-to-primal map hit a vanishing denominator."""

    def __init__(self, message: str, element: int, gauss_point: int, where: tuple[float, float]):
        super().__init__(message)
        self.element = element
        self.gauss_point = gauss_point
        self.where = where


def check_denominator(mesh: Mesh, den: np.ndarray, beta: float, guard: float = 1e-8) -> None:
    bad = den <= beta * guard
    if np.any(bad):
        e, q = np.unravel_index(int(np.argmax(bad)), den.shape)
        j, i = divmod(int(e), mesh.nx)
        a, b = divmod(int(q), 2)
        x = mesh.gauss_x[2 * i + b]
        t = mesh.gauss_t[2 * j + a]
        raise DtPDegeneracyError(
            f"DtP denominator {den[e, q]:.3e} <= {beta * guard:.3e} at element {e}, "
            f"Gauss point {q} (x={x:.6g}, t={t:.6g})", int(e), int(q), (float(x), float(t)))


class DofSystem:
    """Dof layout for ``ncomp`` interleaved fields per node with fixed dofs.

    Global dof of component ``c`` at node ``A`` is ``ncomp*A + c``.
    """

    def __init__(self, mesh: Mesh, ncomp: int, fixed: np.ndarray):
        self.mesh = mesh
        self.ncomp = ncomp
        self.n_dofs = mesh.n_nodes * ncomp
        fixed = np.asarray(fixed, dtype=bool)
        if fixed.shape != (self.n_dofs,):
            raise ValueError("fixed mask has wrong length")
        self.fixed = fixed
        self.free = np.flatnonzero(~fixed)
        self.full_to_free = np.full(self.n_dofs, -1, dtype=np.int64)
        self.full_to_free[self.free] = np.arange(self.free.size)
        conn = mesh.element_connectivity
        self.emap = (conn[:, :, None] * ncomp + np.arange(ncomp)[None, None, :]).reshape(
            mesh.n_elements, 4 * ncomp).astype(np.int64)
        self._build_pattern()

    @property
    def n_free(self) -> int:
        return self.free.size

    def _build_pattern(self) -> None:
        nd = self.emap.shape[1]
        rows = np.repeat(self.emap, nd, axis=1).ravel()
        cols = np.tile(self.emap, (1, nd)).ravel()
        fr = self.full_to_free[rows]
        fc = self.full_to_free[cols]
        keep = (fr >= 0) & (fc >= 0)
        nf = self.n_free
        key = fr[keep] * nf + fc[keep]
        uniq, inv = np.unique(key, return_inverse=True)
        jmap = np.full(rows.size, -1, dtype=np.int64)
        jmap[keep] = inv
        self.jmap = jmap
        r = uniq // nf
        self.indices = (uniq % nf).astype(np.int32)
        self.indptr = np.searchsorted(r, np.arange(nf + 1)).astype(np.int32)
        self.nnz = uniq.size

    def matrix(self, data: np.ndarray) -> sp.csr_matrix:
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n_free, self.n_free))

    def expand(self, free_values: np.ndarray, fixed_values: np.ndarray) -> np.ndarray:
        full = np.array(fixed_values, dtype=float, copy=True)
        full[self.free] = free_values
        return full

    def element_values(self, full: np.ndarray) -> np.ndarray:
        return full[self.emap]


def edge_load(mesh: Mesh, edge: str, samples: np.ndarray) -> np.ndarray:
    """Nodal load ``∫ f N^A ds`` along the bottom or left edge.

    ``samples`` are the values of ``f`` at the 2-point Gauss abscissae of each
    edge segment (``mesh.gauss_x`` for the bottom, ``mesh.gauss_t`` for the
    left edge). Returned vector is indexed by node.
    """
    samples = np.asarray(samples, dtype=float)
    f = np.array(GAUSS_FRACTIONS)
    shape_lo = 1.0 - f  # weight of the lower-coordinate node
    shape_hi = f
    load = np.zeros(mesh.n_nodes)
    if edge == "bottom":
        n_seg, h, nodes = mesh.nx, mesh.hx, mesh.bottom_nodes
    elif edge == "left":
        n_seg, h, nodes = mesh.nt, mesh.te, mesh.left_nodes
    elif edge == "right":
        n_seg, h, nodes = mesh.nt, mesh.te, mesh.right_nodes
    else:
        raise ValueError(f"unknown edge {edge!r}")
    s = samples.reshape(n_seg, 2)
    w = 0.5 * h
    lo = w * (s @ shape_lo)
    hi = w * (s @ shape_hi)
    np.add.at(load, nodes[:-1], lo)
    np.add.at(load, nodes[1:], hi)
    return load


def edge_trace(mesh: Mesh, edge: str, nodal: np.ndarray) -> np.ndarray:
    """Values of a nodal field at the edge Gauss abscissae (for functionals)."""
    nodes = {"bottom": mesh.bottom_nodes, "left": mesh.left_nodes, "right": mesh.right_nodes}[edge]
    v = np.asarray(nodal)[nodes]
    f = np.array(GAUSS_FRACTIONS)
    return (v[:-1, None] * (1.0 - f)[None, :] + v[1:, None] * f[None, :]).ravel()
