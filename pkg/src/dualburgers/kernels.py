"""Element-level residual/Jacobian kernels for both dual formulations.

Each kernel exists twice: an ``@njit`` element loop that scatters straight
into the global residual and the CSR data array, and a vectorized numpy
version built from ``einsum`` and ``bincount``. :mod:`dualburgers._accel`
picks one. Both accumulate in a fixed order, so results are reproducible.

Shared argument conventions
---------------------------
``dofs_e``   (ne, nd)     element dof values
``base``     (ne, 4, k)   base-state values at the Gauss points
``N, dNdx, dNdt`` (4, 4)  reference tables, ``[q, a]``
``wdet``     float        quadrature weight times Jacobian determinant
``emap``     (ne, nd)     element dof -> global dof
``jmap``     (ne*nd*nd,)  element matrix entry -> CSR data slot, -1 if dropped
"""
from __future__ import annotations

import numpy as np

from . import _accel
from ._accel import njit


# -- conservation form -------------------------------------------------------

@njit(cache=True)
def _burgers_numba(lam_e, ubar, beta, N, dNdx, dNdt, wdet, emap, jmap,
                   n_dofs, nnz, want_jac):
    ne = lam_e.shape[0]
    uhat = np.empty((ne, 4))
    den = np.empty((ne, 4))
    res = np.zeros(n_dofs)
    data = np.zeros(nnz)
    test = np.empty(4)
    trial = np.empty(4)
    for e in range(ne):
        for q in range(4):
            dtl = 0.0
            dxl = 0.0
            for a in range(4):
                dtl += dNdt[q, a] * lam_e[e, a]
                dxl += dNdx[q, a] * lam_e[e, a]
            d = beta - dxl
            ub = ubar[e, q]
            u = ub + (ub * dxl + dtl) / d
            uhat[e, q] = u
            den[e, q] = d
            for a in range(4):
                res[emap[e, a]] += wdet * (-u * dNdt[q, a] - 0.5 * u * u * dNdx[q, a])
            if want_jac:
                for a in range(4):
                    test[a] = -dNdt[q, a] - u * dNdx[q, a]
                    trial[a] = (dNdt[q, a] + u * dNdx[q, a]) / d
                base_k = e * 16
                for a in range(4):
                    for b in range(4):
                        slot = jmap[base_k + 4 * a + b]
                        if slot >= 0:
                            data[slot] += wdet * test[a] * trial[b]
    return uhat, den, res, data


def _burgers_numpy(lam_e, ubar, beta, N, dNdx, dNdt, wdet, emap, jmap,
                   n_dofs, nnz, want_jac):
    dtl = lam_e @ dNdt.T
    dxl = lam_e @ dNdx.T
    den = beta - dxl
    uhat = ubar + (ubar * dxl + dtl) / den
    re = wdet * (-(uhat @ dNdt) - (0.5 * uhat * uhat) @ dNdx)
    res = np.bincount(emap.ravel(), weights=re.ravel(), minlength=n_dofs)
    data = np.zeros(nnz)
    if want_jac:
        test = -dNdt[None] - uhat[:, :, None] * dNdx[None]
        trial = (dNdt[None] + uhat[:, :, None] * dNdx[None]) / den[:, :, None]
        ke = wdet * np.einsum("eqa,eqb->eab", test, trial)
        keep = jmap >= 0
        data = np.bincount(jmap[keep], weights=ke.ravel()[keep], minlength=nnz)
    return uhat, den, res, data


def burgers_assemble(lam_e, ubar, beta, tables, emap, jmap, n_dofs, nnz, want_jac=True):
    """Volume terms of the conservation-form dual residual and Jacobian.

    Returns ``(uhat, den, residual_full, jac_data)``; ``den = beta - d_x lambda``.
    """
    fn = _burgers_numba if _accel.backend() == "numba" else _burgers_numpy
    return fn(np.ascontiguousarray(lam_e, dtype=np.float64), np.ascontiguousarray(ubar, dtype=np.float64),
              float(beta), tables["N"], tables["dNdx"], tables["dNdt"], float(tables["wdet"]),
              emap, jmap, int(n_dofs), int(nnz), bool(want_jac))


# -- Hamilton-Jacobi form ----------------------------------------------------

@njit(cache=True)
def _hj_numba(d_e, ybar, ubar, beta_y, beta_u, nu, N, dNdx, dNdt, wdet, emap, jmap,
              n_dofs, nnz, want_jac):
    ne = d_e.shape[0]
    yhat = np.empty((ne, 4))
    uhat = np.empty((ne, 4))
    den = np.empty((ne, 4))
    res = np.zeros(n_dofs)
    data = np.zeros(nnz)
    ty = np.empty(8)
    tu = np.empty(8)
    sy = np.empty(8)
    su = np.empty(8)
    for e in range(ne):
        for q in range(4):
            lam = 0.0
            gam = 0.0
            dtl = 0.0
            dxl = 0.0
            dxg = 0.0
            for a in range(4):
                la = d_e[e, 2 * a]
                ga = d_e[e, 2 * a + 1]
                lam += N[q, a] * la
                gam += N[q, a] * ga
                dtl += dNdt[q, a] * la
                dxl += dNdx[q, a] * la
                dxg += dNdx[q, a] * ga
            ub = ubar[e, q]
            y = ybar[e, q] + (dtl + dxg) / beta_y
            d = beta_u + lam
            u = ub + (gam - lam * ub - nu * dxl) / d
            yhat[e, q] = y
            uhat[e, q] = u
            den[e, q] = d
            for a in range(4):
                res[emap[e, 2 * a]] += wdet * (-y * dNdt[q, a] + 0.5 * u * u * N[q, a] + nu * u * dNdx[q, a])
                res[emap[e, 2 * a + 1]] += wdet * (-y * dNdx[q, a] - u * N[q, a])
            if want_jac:
                for a in range(4):
                    ty[2 * a] = -dNdt[q, a]
                    ty[2 * a + 1] = -dNdx[q, a]
                    tu[2 * a] = u * N[q, a] + nu * dNdx[q, a]
                    tu[2 * a + 1] = -N[q, a]
                    sy[2 * a] = dNdt[q, a] / beta_y
                    sy[2 * a + 1] = dNdx[q, a] / beta_y
                    su[2 * a] = -(u * N[q, a] + nu * dNdx[q, a]) / d
                    su[2 * a + 1] = N[q, a] / d
                base_k = e * 64
                for r in range(8):
                    for c in range(8):
                        slot = jmap[base_k + 8 * r + c]
                        if slot >= 0:
                            data[slot] += wdet * (ty[r] * sy[c] + tu[r] * su[c])
    return yhat, uhat, den, res, data


def _hj_numpy(d_e, ybar, ubar, beta_y, beta_u, nu, N, dNdx, dNdt, wdet, emap, jmap,
              n_dofs, nnz, want_jac):
    lam_e = d_e[:, 0::2]
    gam_e = d_e[:, 1::2]
    lam = lam_e @ N.T
    gam = gam_e @ N.T
    dtl = lam_e @ dNdt.T
    dxl = lam_e @ dNdx.T
    dxg = gam_e @ dNdx.T
    yhat = ybar + (dtl + dxg) / beta_y
    den = beta_u + lam
    uhat = ubar + (gam - lam * ubar - nu * dxl) / den
    ne = d_e.shape[0]
    re = np.empty((ne, 8))
    re[:, 0::2] = wdet * (-(yhat @ dNdt) + (0.5 * uhat * uhat) @ N + (nu * uhat) @ dNdx)
    re[:, 1::2] = wdet * (-(yhat @ dNdx) - uhat @ N)
    res = np.bincount(emap.ravel(), weights=re.ravel(), minlength=n_dofs)
    data = np.zeros(nnz)
    if want_jac:
        u3 = uhat[:, :, None]
        d3 = den[:, :, None]
        ty = np.empty((ne, 4, 8))
        tu = np.empty((ne, 4, 8))
        sy = np.empty((ne, 4, 8))
        su = np.empty((ne, 4, 8))
        ty[:, :, 0::2] = -dNdt[None]
        ty[:, :, 1::2] = -dNdx[None]
        tu[:, :, 0::2] = u3 * N[None] + nu * dNdx[None]
        tu[:, :, 1::2] = -N[None]
        sy[:, :, 0::2] = dNdt[None] / beta_y
        sy[:, :, 1::2] = dNdx[None] / beta_y
        su[:, :, 0::2] = -tu[:, :, 0::2] / d3
        su[:, :, 1::2] = N[None] / d3
        ke = wdet * (np.einsum("eqr,eqc->erc", ty, sy) + np.einsum("eqr,eqc->erc", tu, su))
        keep = jmap >= 0
        data = np.bincount(jmap[keep], weights=ke.ravel()[keep], minlength=nnz)
    return yhat, uhat, den, res, data


def hj_assemble(d_e, ybar, ubar, beta_y, beta_u, nu, tables, emap, jmap, n_dofs, nnz, want_jac=True):
    """Volume terms of the HJ dual residual and Jacobian (dofs interleaved λ, γ).

    Returns ``(yhat, uhat, den, residual_full, jac_data)``; ``den = beta_u + lambda``.
    """
    fn = _hj_numba if _accel.backend() == "numba" else _hj_numpy
    return fn(np.ascontiguousarray(d_e, dtype=np.float64),
              np.ascontiguousarray(ybar, dtype=np.float64), np.ascontiguousarray(ubar, dtype=np.float64),
              float(beta_y), float(beta_u), float(nu),
              tables["N"], tables["dNdx"], tables["dNdt"], float(tables["wdet"]),
              emap, jmap, int(n_dofs), int(nnz), bool(want_jac))
