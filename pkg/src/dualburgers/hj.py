"""Dual formulation of Burgers in Hamilton-Jacobi form.

Dual fields ``(λ, γ)`` are interleaved per node. The primal pair follows from

    Ŷ = Ȳ + (∂tλ + ∂xγ) / β_Y
    û = ū + (γ − λ ū − ν ∂xλ) / (β_u + λ)

``λ`` is prescribed on the top edge and ``γ`` on the right edge. On the
lateral edges ``λ`` is left free by default; ``lateral="fixed"`` pins it.
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
LATERAL_POLICIES = ("free", "fixed")


@dataclass
class HJBase:
    """Base states ``(Ȳ, ū)`` on the Gauss grid and penalties ``β_Y, β_u``."""

    ybar_at_gauss: np.ndarray
    ubar_at_gauss: np.ndarray
    beta_y: float = 1.0
    beta_u: float = 1.0

    def __post_init__(self):
        if not (self.beta_y > 0 and self.beta_u > 0):
            raise ValueError("beta_y and beta_u must be positive")
        for v in (self.ybar_at_gauss, self.ubar_at_gauss):
            if not np.all(np.isfinite(v)):
                raise ValueError("base state has non-finite values")


@dataclass
class HJProblemData:
    Y0_at_gauss: np.ndarray
    Yl_of_t: Callable[[np.ndarray], np.ndarray]
    nu: float = 0.0
    f_left: Callable[[np.ndarray], np.ndarray] | None = None
    f_right: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("nu must be non-negative")


@dataclass
class HJDualState:
    dual_nodal: np.ndarray  # (n_nodes, 2): columns λ, γ
    dirichlet_mask: np.ndarray = field(default=None)


def dirichlet_mask_hj(mesh: Mesh, lateral: str = "free") -> np.ndarray:
    if lateral not in LATERAL_POLICIES:
        raise ValueError(f"lateral policy must be one of {LATERAL_POLICIES}")
    mask = np.zeros((mesh.n_nodes, 2), dtype=bool)
    mask[mesh.top_nodes, 0] = True
    mask[mesh.right_nodes, 1] = True
    if lateral == "fixed":
        mask[mesh.left_nodes, 0] = True
        mask[mesh.right_nodes, 0] = True
    return mask.ravel()


def dtp_map_hj(lam, gam, dt_lambda, dx_lambda, dx_gamma, ybar, ubar, beta_y, beta_u, nu=0.0):
    den = beta_u + np.asarray(lam, dtype=float)
    if np.any(den <= beta_u * DEGENERACY_GUARD):
        raise DtPDegeneracyError(f"β_u + λ = {np.min(den):.3e} is not positive", -1, -1, (np.nan, np.nan))
    yhat = ybar + (np.asarray(dt_lambda) + dx_gamma) / beta_y
    uhat = ubar + (gam - lam * ubar - nu * np.asarray(dx_lambda)) / den
    return yhat, uhat


def ellipticity_tensor(lam: float, beta_y: float, beta_u: float, nu: float = 0.0) -> np.ndarray:
    """``𝔸_{iαjβ} = ∂F_{iα}/∂(∇d)_{jβ}`` for ``d = (λ, γ)``, ``α = t, x``.

    The returned array is ``(2, 2, 2, 2)``; flattening ``(i, α)`` gives the
    4x4 matrix whose positive semi-definiteness is the ellipticity condition.
    """
    den = beta_u + lam
    if not den > 0:
        raise ValueError("β_u + λ must be positive")
    a = np.zeros((2, 2, 2, 2))
    a[0, 0, 0, 0] = a[0, 0, 1, 1] = a[1, 1, 0, 0] = a[1, 1, 1, 1] = 1.0 / beta_y
    a[0, 1, 0, 1] = nu * nu / den
    return a


def _grid(mesh: Mesh, values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.shape == (2 * mesh.nx,):
        v = np.broadcast_to(v, (2 * mesh.nt, 2 * mesh.nx))
    if v.shape != (2 * mesh.nt, 2 * mesh.nx):
        raise ValueError(f"Gauss field has shape {v.shape}, expected {(2 * mesh.nt, 2 * mesh.nx)}")
    return v


def _eval(value, coords):
    if value is None:
        return np.zeros_like(coords)
    if callable(value):
        return np.asarray(value(coords), dtype=float) * np.ones_like(coords)
    return np.full_like(coords, float(value))


class HJDualProblem:
    """Assembler for one HJ stage."""

    def __init__(self, mesh: Mesh, base: HJBase, data: HJProblemData, lambda_top=0.0,
                 gamma_right=0.0, lateral: str = "free", mask: np.ndarray | None = None,
                 dofs: DofSystem | None = None):
        self.mesh = mesh
        self.base = base
        self.data = data
        self.mask = dirichlet_mask_hj(mesh, lateral) if mask is None else np.asarray(mask, dtype=bool)
        # a DofSystem depends only on topology, so stages of equal size may share one
        self.dofs = dofs if dofs is not None else DofSystem(mesh, 2, self.mask)
        self.ybar_e = mesh.grid_to_elements(_grid(mesh, base.ybar_at_gauss))
        self.ubar_e = mesh.grid_to_elements(_grid(mesh, base.ubar_at_gauss))
        self.tables = mesh.reference_tables

        fixed = np.zeros((mesh.n_nodes, 2))
        xt = mesh.node_coords
        fixed[mesh.top_nodes, 0] = _eval(lambda_top, xt[mesh.top_nodes, 0])
        fixed[mesh.right_nodes, 1] = _eval(gamma_right, xt[mesh.right_nodes, 1])
        self.fixed_values = fixed.ravel()

        y0 = np.asarray(data.Y0_at_gauss, dtype=float)
        if y0.shape != (2 * mesh.nx,) or not np.all(np.isfinite(y0)):
            raise ValueError("Y0 must be finite and sampled at the bottom-edge Gauss points")
        self.y0 = y0
        tg = mesh.gauss_t
        self.yl_gauss = _eval(data.Yl_of_t, tg)
        self.f_left = _eval(data.f_left, tg)
        self.f_right = _eval(data.f_right, tg)
        load = np.zeros((mesh.n_nodes, 2))
        load[:, 0] = (edge_load(mesh, "bottom", y0) + edge_load(mesh, "right", self.f_right)
                      - edge_load(mesh, "left", self.f_left))
        load[:, 1] = edge_load(mesh, "left", self.yl_gauss)
        self.load = load.ravel()

    def full(self, free_values: np.ndarray) -> np.ndarray:
        return self.dofs.expand(free_values, self.fixed_values)

    def zero_state(self) -> np.ndarray:
        return np.zeros(self.dofs.n_free)

    def _assemble(self, full: np.ndarray, want_jac: bool):
        d = self.dofs
        b = self.base
        out = kernels.hj_assemble(d.element_values(full), self.ybar_e, self.ubar_e, b.beta_y, b.beta_u,
                                  self.data.nu, self.tables, d.emap, d.jmap, d.n_dofs, d.nnz, want_jac)
        check_denominator(self.mesh, out[2], b.beta_u, DEGENERACY_GUARD)
        return out

    def residual(self, free_values: np.ndarray) -> np.ndarray:
        res = self._assemble(self.full(free_values), False)[3]
        return (res - self.load)[self.dofs.free]

    def jacobian(self, free_values: np.ndarray) -> sp.csr_matrix:
        data = self._assemble(self.full(free_values), True)[4]
        return self.dofs.matrix(data)

    def primal(self, free_values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``(Ŷ, û)`` on the Gauss grid."""
        yhat, uhat = self._assemble(self.full(free_values), False)[:2]
        return self.mesh.elements_to_grid(yhat), self.mesh.elements_to_grid(uhat)

    def fields(self, full: np.ndarray) -> dict[str, np.ndarray]:
        """Element-Gauss values and gradients of ``λ`` and ``γ``."""
        t = self.tables
        d_e = self.dofs.element_values(full)
        lam_e, gam_e = d_e[:, 0::2], d_e[:, 1::2]
        return {"lam": lam_e @ t["N"].T, "gam": gam_e @ t["N"].T, "dtl": lam_e @ t["dNdt"].T,
                "dxl": lam_e @ t["dNdx"].T, "dxg": gam_e @ t["dNdx"].T}

    def functional(self, free_values: np.ndarray) -> float:
        full = self.full(free_values)
        f = self.fields(full)
        b = self.base
        nu = self.data.nu
        den = b.beta_u + f["lam"]
        check_denominator(self.mesh, den, b.beta_u, DEGENERACY_GUARD)
        yb, ub = self.ybar_e, self.ubar_e
        div = f["dtl"] + f["dxg"]
        flux = nu * f["dxl"] + ub * f["lam"] - f["gam"]
        bulk = (-div ** 2 / (2 * b.beta_y) - flux ** 2 / (2 * den) - yb * div
                + ub * (0.5 * f["lam"] * ub - f["gam"] + nu * f["dxl"]))
        value = float(self.tables["wdet"]) * bulk.sum()
        m = self.mesh
        lam_n = full.reshape(-1, 2)[:, 0]
        gam_n = full.reshape(-1, 2)[:, 1]
        value -= 0.5 * m.hx * np.dot(self.y0, edge_trace(m, "bottom", lam_n))
        value -= 0.5 * m.te * np.dot(self.yl_gauss, edge_trace(m, "left", gam_n))
        value -= 0.5 * m.te * np.dot(self.f_right, edge_trace(m, "right", lam_n))
        value += 0.5 * m.te * np.dot(self.f_left, edge_trace(m, "left", lam_n))
        return value


def _problem(state: HJDualState, base, data, mesh) -> tuple[HJDualProblem, np.ndarray]:
    mask = dirichlet_mask_hj(mesh) if state.dirichlet_mask is None else state.dirichlet_mask
    d = np.asarray(state.dual_nodal, dtype=float).ravel()
    prob = HJDualProblem(mesh, base, data, mask=mask)
    prob.fixed_values = d.copy()
    return prob, d[prob.dofs.free]


def assemble_residual_hj(state: HJDualState, base: HJBase, data: HJProblemData, mesh: Mesh) -> np.ndarray:
    prob, free = _problem(state, base, data, mesh)
    return prob.residual(free)


def assemble_jacobian_hj(state: HJDualState, base: HJBase, data: HJProblemData, mesh: Mesh) -> sp.csr_matrix:
    prob, free = _problem(state, base, data, mesh)
    return prob.jacobian(free)


def dual_functional_value_hj(state: HJDualState, base: HJBase, data: HJProblemData, mesh: Mesh) -> float:
    prob, free = _problem(state, base, data, mesh)
    return prob.functional(free)
