"""Dual formulation of inviscid Burgers in conservation form.

The primal field is recovered from the dual field ``λ`` through

    û = ū + (ū ∂xλ + ∂tλ) / (β_u − ∂xλ)

and the discrete residual is the gradient of the dual functional with
respect to the free nodal values of ``λ`` (all nodes except the top and
right boundaries, where ``λ`` is prescribed).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from . import kernels
from .assembly import DofSystem, DtPDegeneracyError, check_denominator, edge_load, edge_trace
from .mesh import Mesh

DEGENERACY_GUARD = 1e-8


@dataclass
class BurgersBase:
    """Base state ``ū`` on the Gauss grid ``(2nt, 2nx)`` (a ``(2nx,)`` row is
    broadcast over the stage) and the penalty ``β_u``."""

    ubar_at_gauss: np.ndarray
    beta_u: float = 1e6

    def __post_init__(self):
        if not self.beta_u > 0:
            raise ValueError("beta_u must be positive")
        if not np.all(np.isfinite(self.ubar_at_gauss)):
            raise ValueError("base state has non-finite values")


@dataclass
class BurgersProblemData:
    u0_at_gauss: np.ndarray
    ul_of_t: Callable[[np.ndarray], np.ndarray]
    flux_sign: int = 1


@dataclass
class BurgersDualState:
    lambda_nodal: np.ndarray
    dirichlet_mask: np.ndarray = field(default=None)


def dirichlet_mask(mesh: Mesh) -> np.ndarray:
    mask = np.zeros(mesh.n_nodes, dtype=bool)
    mask[mesh.top_nodes] = True
    mask[mesh.right_nodes] = True
    return mask


def dtp_map(dt_lambda, dx_lambda, ubar, beta_u):
    den = beta_u - np.asarray(dx_lambda, dtype=float)
    if np.any(den <= beta_u * DEGENERACY_GUARD):
        raise DtPDegeneracyError(f"β_u − ∂xλ = {np.min(den):.3e} is not positive", -1, -1, (np.nan, np.nan))
    return ubar + (ubar * dx_lambda + dt_lambda) / den


def ellipticity_matrix(dx_lambda: float, u_hat: float, beta_u: float) -> np.ndarray:
    """Coefficient matrix ``A_ij = ∂F_i/∂(∇λ)_j`` (index 1 = t, 2 = x)."""
    den = beta_u - dx_lambda
    if not den > 0:
        raise ValueError("β_u − ∂xλ must be positive")
    return np.array([[1.0, u_hat], [u_hat, u_hat * u_hat]]) / den


def _grid(mesh: Mesh, values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.shape == (2 * mesh.nx,):
        v = np.broadcast_to(v, (2 * mesh.nt, 2 * mesh.nx))
    if v.shape != (2 * mesh.nt, 2 * mesh.nx):
        raise ValueError(f"Gauss field has shape {v.shape}, expected {(2 * mesh.nt, 2 * mesh.nx)}")
    return v


class BurgersDualProblem:
    """Assembler for one stage; caches the sparsity pattern and edge loads."""

    def __init__(self, mesh: Mesh, base: BurgersBase, data: BurgersProblemData,
                 lambda_top=0.0, lambda_right=0.0, mask: np.ndarray | None = None,
                 dofs: DofSystem | None = None):
        self.mesh = mesh
        self.base = base
        self.data = data
        self.mask = dirichlet_mask(mesh) if mask is None else np.asarray(mask, dtype=bool)
        # a DofSystem depends only on topology, so stages of equal size may share one
        self.dofs = dofs if dofs is not None else DofSystem(mesh, 1, self.mask)
        self.ubar_e = mesh.grid_to_elements(_grid(mesh, base.ubar_at_gauss))
        self.tables = mesh.reference_tables

        self.fixed_values = np.zeros(mesh.n_nodes)
        xt = mesh.node_coords
        self.fixed_values[mesh.top_nodes] = _eval(lambda_top, xt[mesh.top_nodes, 0])
        self.fixed_values[mesh.right_nodes] = _eval(lambda_right, xt[mesh.right_nodes, 1])

        u0 = np.asarray(data.u0_at_gauss, dtype=float)
        if u0.shape != (2 * mesh.nx,) or not np.all(np.isfinite(u0)):
            raise ValueError("u0 must be finite and sampled at the bottom-edge Gauss points")
        self.ul_gauss = np.asarray(data.ul_of_t(mesh.gauss_t), dtype=float) * np.ones(2 * mesh.nt)
        self.load = edge_load(mesh, "bottom", u0) + edge_load(mesh, "left", 0.5 * self.ul_gauss ** 2)

    # free <-> full
    def full(self, free_values: np.ndarray) -> np.ndarray:
        return self.dofs.expand(free_values, self.fixed_values)

    def zero_state(self) -> np.ndarray:
        return np.zeros(self.dofs.n_free)

    def _assemble(self, lam_full: np.ndarray, want_jac: bool):
        d = self.dofs
        out = kernels.burgers_assemble(d.element_values(lam_full), self.ubar_e, self.base.beta_u,
                                       self.tables, d.emap, d.jmap, d.n_dofs, d.nnz, want_jac)
        check_denominator(self.mesh, out[1], self.base.beta_u, DEGENERACY_GUARD)
        return out

    def residual(self, free_values: np.ndarray) -> np.ndarray:
        _, _, res, _ = self._assemble(self.full(free_values), False)
        return (res - self.load)[self.dofs.free]

    def jacobian(self, free_values: np.ndarray) -> sp.csr_matrix:
        _, _, _, data = self._assemble(self.full(free_values), True)
        return self.dofs.matrix(data)

    def primal(self, free_values: np.ndarray) -> np.ndarray:
        """û on the Gauss grid."""
        uhat, _, _, _ = self._assemble(self.full(free_values), False)
        return self.mesh.elements_to_grid(uhat)

    def gradients(self, lam_full: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        t = self.tables
        lam_e = self.dofs.element_values(lam_full)
        return lam_e @ t["dNdt"].T, lam_e @ t["dNdx"].T

    def functional(self, free_values: np.ndarray) -> float:
        lam = self.full(free_values)
        dtl, dxl = self.gradients(lam)
        den = self.base.beta_u - dxl
        check_denominator(self.mesh, den, self.base.beta_u, DEGENERACY_GUARD)
        ub = self.ubar_e
        k = -1.0 / (2.0 * den)
        bulk = k * (dtl + ub * dxl) ** 2 - (ub * dtl + 0.5 * ub * ub * dxl)
        value = float(self.tables["wdet"]) * bulk.sum()
        m = self.mesh
        value -= 0.5 * m.hx * np.dot(self.data.u0_at_gauss, edge_trace(m, "bottom", lam))
        value -= 0.5 * m.te * np.dot(0.5 * self.ul_gauss ** 2, edge_trace(m, "left", lam))
        return value


def _eval(value, coords):
    if callable(value):
        return np.asarray(value(coords), dtype=float) * np.ones_like(coords)
    return np.full_like(coords, float(value))


def _problem(state: BurgersDualState, base, data, mesh) -> tuple[BurgersDualProblem, np.ndarray]:
    mask = dirichlet_mask(mesh) if state.dirichlet_mask is None else state.dirichlet_mask
    lam = np.asarray(state.lambda_nodal, dtype=float)
    prob = BurgersDualProblem(mesh, base, data, mask=mask)
    prob.fixed_values = lam.copy()
    return prob, lam[prob.dofs.free]


def assemble_residual(state: BurgersDualState, base: BurgersBase, data: BurgersProblemData, mesh: Mesh) -> np.ndarray:
    prob, free = _problem(state, base, data, mesh)
    return prob.residual(free)


def assemble_jacobian(state: BurgersDualState, base: BurgersBase, data: BurgersProblemData, mesh: Mesh) -> sp.csr_matrix:
    prob, free = _problem(state, base, data, mesh)
    return prob.jacobian(free)


def dual_functional_value(state: BurgersDualState, base: BurgersBase, data: BurgersProblemData, mesh: Mesh) -> float:
    prob, free = _problem(state, base, data, mesh)
    return prob.functional(free)
