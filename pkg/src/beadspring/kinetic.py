"""Implicit Fokker-Planck step for the normalized density, and Kramers stress.

One step solves the linear system obtained by freezing the cut-off drag
factor beta^L_delta at the outer fixed-point iterate: the bilinear form
combines the drag-weighted mass term, center-of-mass diffusion in x,
flux-form convection by the slab-averaged drag response, and the
Rouse-coupled configuration diffusion.  Testing with the constant function
reproduces the weighted-mass balance exactly, which is what makes the
per-step mass ledger an identity rather than an estimate.

Linear solves are matrix-free Krylov iterations preconditioned by an exact
per-cell spectral factorization of the mass + configuration-diffusion block.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .momentum import SolverError
from .grids import _apply_along_axis


class NegativityError(RuntimeError):
    """Raised when the kinetic field drops below the monitored floor."""


# ---------------------------------------------------------------------------
# spectral preconditioner for mass + q-diffusion blocks
# ---------------------------------------------------------------------------

class SpectralQPreconditioner:
    """Exact inverse of cell-diagonal mass plus per-spring q-stiffness.

    The preconditioned operator drops the x-coupling (small: epsilon-scaled
    diffusion plus dt-scaled convection) and the Rouse cross terms, both of
    which are dominated by the retained block thanks to the positive
    definiteness of the Rouse matrix.
    """

    def __init__(self, cfg, alpha_cells, q_coefs):
        self.cfg = cfg
        self.alpha = np.asarray(alpha_cells, dtype=float)
        basis = _spectral_basis(cfg)
        lam_total = np.zeros(tuple(cfg.local_n))
        for i in range(cfg.K):
            shape = [1] * cfg.K
            shape[i] = cfg.local_n[i]
            lam_total = lam_total + q_coefs[i] * basis[i][0].reshape(shape)
        denom = self.alpha[:, None] + lam_total.ravel()[None, :]
        self._inv = 1.0 / denom
        self._fwd = [b[1] for b in basis]   # V^T D^{-1/2}

    def apply(self, x):
        cfg = self.cfg
        nc = self.alpha.shape[0]
        t = x.reshape((nc,) + tuple(cfg.local_n))
        for i in range(cfg.K):
            t = _apply_along_axis(self._fwd[i], t, 1 + i)
        t = t.reshape(nc, cfg.nq) * self._inv
        t = t.reshape((nc,) + tuple(cfg.local_n))
        for i in range(cfg.K):
            t = _apply_along_axis(self._fwd[i].T, t, 1 + i)
        return t.reshape(nc * cfg.nq)


def _spectral_basis(cfg):
    """Per-spring (eigenvalues, V^T D^{-1/2}) of the weighted local stiffness."""
    cache = getattr(cfg, "_spectral_cache", None)
    if cache is None:
        cache = []
        for i in range(cfg.K):
            w = cfg._local_w[i]
            s = cfg.local_stiffness(i)
            d_isqrt = 1.0 / np.sqrt(w)
            s_tilde = d_isqrt[:, None] * s * d_isqrt[None, :]
            s_tilde = 0.5 * (s_tilde + s_tilde.T)
            lam, vec = np.linalg.eigh(s_tilde)
            lam = np.maximum(lam, 0.0)
            cache.append((lam, vec.T * d_isqrt[None, :]))
        cfg._spectral_cache = cache
    return cache


# ---------------------------------------------------------------------------
# the assembled kinetic operator
# ---------------------------------------------------------------------------

class KineticOperator:
    """Matrix-free action of the kinetic bilinear form.

    a(psi, phi) = sum_c mass_c sum_k w_k psi phi
                + sum_k w_k (x_matrix form on cells)
                + q_coef * sum_c (Rouse-coupled q-stiffness form)

    ``rouse=None`` selects the identity coupling (used by the initial-data
    smoothing); otherwise the full A_ij coupling is applied.
    """

    def __init__(self, grid, cfg, mass_cells, x_matrix, q_coef, rouse=None):
        self.grid = grid
        self.cfg = cfg
        self.mass = np.ravel(np.asarray(mass_cells, dtype=float))
        self.xmat = x_matrix.tocsr() if x_matrix is not None else None
        self.q_coef = float(q_coef)
        self.rouse = rouse
        alpha = self.mass.copy()
        if self.xmat is not None:
            alpha = alpha + np.maximum(self.xmat.diagonal(), 0.0)
        if rouse is None:
            q_coefs = [self.q_coef] * cfg.K
        else:
            q_coefs = [self.q_coef * rouse.a[i, i] for i in range(cfg.K)]
        self.precond = SpectralQPreconditioner(cfg, alpha, q_coefs)

    def apply(self, psi):
        """psi shape (ncells, nq) -> operator action, same shape."""
        cfg = self.cfg
        out = self.mass[:, None] * (psi * cfg.w[None, :])
        if self.xmat is not None:
            out = out + (self.xmat @ psi) * cfg.w[None, :]
        if self.rouse is None:
            out = out + self.q_coef * cfg.apply_iso_diffusion(psi)
        else:
            out = out + self.q_coef * cfg.apply_rouse_diffusion(psi, self.rouse)
        return out

    def solve(self, rhs, x0=None, tol=1e-11, maxiter=400):
        """Krylov solve to relative residual ``tol``; raises SolverError."""
        grid, cfg = self.grid, self.cfg
        n = grid.ncells * cfg.nq
        shape2 = (grid.ncells, cfg.nq)

        def mv(x):
            return self.apply(x.reshape(shape2)).ravel()

        lin = spla.LinearOperator((n, n), matvec=mv)
        pre = spla.LinearOperator((n, n), matvec=self.precond.apply)
        b = np.ravel(rhs)
        bnorm = float(np.linalg.norm(b))
        if bnorm == 0.0:
            return np.zeros(shape2)
        x0v = None if x0 is None else np.ravel(x0).copy()
        sol, info = spla.bicgstab(lin, b, x0=x0v, M=pre, rtol=tol, atol=0.0,
                                  maxiter=maxiter)
        if info != 0:
            sol, info = spla.gmres(lin, b, x0=x0v, M=pre, rtol=tol, atol=0.0,
                                   restart=60, maxiter=maxiter)
        res = float(np.linalg.norm(mv(sol) - b)) / bnorm
        if info != 0 or res > 50.0 * tol:
            raise SolverError(
                f"kinetic solve stagnated: info={info}, relative residual={res:.3e}")
        return sol.reshape(shape2)


# ---------------------------------------------------------------------------
# step assembly
# ---------------------------------------------------------------------------

def convection_matrix(grid, zeta_avg, w_prev):
    """Flux-form convection by the slab-averaged drag response."""
    coeff = grid.rho_to_faces(zeta_avg)
    cu, cv = grid.split(coeff * w_prev)
    return grid.scalar_flux_convection(cu, cv)


def drag_load(grid, cfg, sigma_cells, zeta_end, beta_field, dt):
    """Right-side drag functional with the cut-off factor frozen.

    dt * sum_i int M [sigma q_i] zeta(rho^n) beta . grad_{q_i} phi

    ``sigma_cells`` is the velocity gradient per cell: arrays
    (s_xx, s_xy, s_yx, s_yy); ``beta_field`` the frozen nodal cut-off values.
    """
    sxx, sxy, syx, syy = [np.ravel(s) for s in sigma_cells]
    zeta = np.ravel(zeta_end)
    out = np.zeros((grid.ncells, cfg.nq))
    scale = dt * grid.vol
    for i in range(cfg.K):
        qx, qy = cfg.qx[i], cfg.qy[i]
        common = cfg.w[None, :] * beta_field * (scale * zeta)[:, None]
        bx = common * (sxx[:, None] * qx[None, :] + sxy[:, None] * qy[None, :])
        by = common * (syx[:, None] * qx[None, :] + syy[:, None] * qy[None, :])
        out += cfg.grad_q_adjoint(bx, by, i)
    return out


def drag_form(grid, cfg, sigma_cells, zeta_cells, drag_frozen, phi):
    """int M sum_i [sigma q_i] zeta drag . grad_{q_i} phi  dq dx."""
    sxx, sxy, syx, syy = [np.ravel(s) for s in sigma_cells]
    trace = np.max(np.abs(sxx + syy))
    if trace > 1e-10:
        raise ValueError(f"velocity gradient must be trace-free per cell "
                         f"(max |tr sigma| = {trace:.2e})")
    zeta = np.ravel(zeta_cells)
    total = 0.0
    for i in range(cfg.K):
        qx, qy = cfg.qx[i], cfg.qy[i]
        gx, gy = cfg.grad_q(phi, i)
        sx = sxx[:, None] * qx[None, :] + sxy[:, None] * qy[None, :]
        sy = syx[:, None] * qx[None, :] + syy[:, None] * qy[None, :]
        integrand = drag_frozen * (sx * gx + sy * gy)
        total += float(np.sum(zeta * (integrand @ cfg.w)))
    return grid.vol * total


def fokker_planck_operator(grid, cfg, responses, w_prev, params):
    """Assemble the kinetic operator of one implicit step."""
    dt = params.dt
    mass = np.ravel(responses.zeta_end) * grid.vol
    xmat = dt * params.epsilon * grid.scalar_stiffness()
    if np.any(w_prev != 0.0):
        xmat = xmat + dt * convection_matrix(grid, responses.zeta_avg, w_prev)
    q_coef = dt * grid.vol / (4.0 * params.lam)
    return KineticOperator(grid, cfg, mass, xmat, q_coef, rouse=params.rouse)


def fokker_planck_step(grid, cfg, psi_prev, sigma_cells, responses, drag_frozen,
                       w_prev, params, x0=None):
    """One linear kinetic solve with the drag factor frozen at ``drag_frozen``.

    ``sigma_cells`` is the gradient of the *new* velocity iterate; convection
    uses the previous velocity ``w_prev``.  Returns the new nodal field.
    """
    op = fokker_planck_operator(grid, cfg, responses, w_prev, params)
    rhs = (np.ravel(responses.zeta_prev) * grid.vol)[:, None] \
        * (psi_prev * cfg.w[None, :])
    rhs = rhs + drag_load(grid, cfg, sigma_cells, responses.zeta_end,
                          drag_frozen, params.dt)
    guess = psi_prev if x0 is None else x0
    return op.solve(rhs, x0=guess, tol=params.solver_tol)


# ---------------------------------------------------------------------------
# Kramers stress
# ---------------------------------------------------------------------------

def kramers_C(grid, cfg, psi, zeta_cells, i):
    """C_i(x) = int M zeta psi U_i' q_i q_i^T dq as three cell arrays."""
    zeta = np.ravel(zeta_cells)
    qx, qy = cfg.qx[i], cfg.qy[i]
    wu = cfg.w_u[i]
    cxx = zeta * (psi @ (wu * qx * qx))
    cyy = zeta * (psi @ (wu * qy * qy))
    cxy = zeta * (psi @ (wu * qx * qy))
    shape = (grid.nx, grid.ny)
    return cxx.reshape(shape), cyy.reshape(shape), cxy.reshape(shape)


def polymer_density(grid, cfg, psi, zeta_cells):
    """Number density of chains: int M zeta psi dq per cell."""
    return (np.ravel(zeta_cells) * (psi @ cfg.w)).reshape(grid.nx, grid.ny)


def kramers_stress(grid, cfg, psi, zeta_cells, k):
    """tau = k (sum_i C_i - K rho_poly I); symmetric by construction."""
    cxx = np.zeros((grid.nx, grid.ny))
    cyy = np.zeros((grid.nx, grid.ny))
    cxy = np.zeros((grid.nx, grid.ny))
    for i in range(cfg.K):
        a, b, c = kramers_C(grid, cfg, psi, zeta_cells, i)
        cxx += a
        cyy += b
        cxy += c
    rho_p = polymer_density(grid, cfg, psi, zeta_cells)
    txx = k * (cxx - cfg.K * rho_p)
    tyy = k * (cyy - cfg.K * rho_p)
    txy = k * cxy
    return txx, tyy, txy


def weighted_mass(grid, cfg, psi, zeta_cells):
    """int M zeta psi dq dx; conserved exactly by every kinetic step."""
    return grid.vol * float(np.sum(np.ravel(zeta_cells) * (psi @ cfg.w)))


def lambda_field(grid, cfg, psi):
    """lambda(x) = int M psi dq per cell."""
    return (psi @ cfg.w).reshape(grid.nx, grid.ny)


def second_moment(cfg, psi_cell):
    """int M psi q_1 q_1^T dq of a single-cell field (shear oracle observable)."""
    qx, qy = cfg.qx[0], cfg.qy[0]
    w = cfg.w
    return np.array([
        [float(np.sum(w * psi_cell * qx * qx)), float(np.sum(w * psi_cell * qx * qy))],
        [float(np.sum(w * psi_cell * qy * qx)), float(np.sum(w * psi_cell * qy * qy))],
    ])
