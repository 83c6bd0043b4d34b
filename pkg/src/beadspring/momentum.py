"""One implicit velocity step on the discretely divergence-free space.

The bilinear form combines the endpoint-density mass term
(rho^n + rho^{n-1})/2, the implicit variable-viscosity strain form, and the
antisymmetrized convection weighted by the slab-averaged density.  Pressure
enters as a Lagrange multiplier on the MAC grid and is eliminated through a
saddle-point solve regularized by a rank-one pressure-mean term, so every
accepted velocity is discretely divergence-free to solver precision and
pressure is never exported.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SolverError(RuntimeError):
    """Raised when a linear solve fails or stagnates."""


def advection_matrix(grid, w_adv):
    """Central-difference operator w -> (u_adv . grad) w on the face dofs.

    The advecting velocity is interpolated to the other component's faces by
    4-point averaging; wall values enter as tangential ghost reflection.
    """
    u, v = grid.split(w_adv)
    nx, ny = grid.nx, grid.ny
    rows, cols, vals = [], [], []

    def emit(r, c, x):
        rows.append(np.ravel(r))
        cols.append(np.ravel(c))
        vals.append(np.ravel(x))

    if grid.bc == "periodic":
        iu = np.arange(nx * ny).reshape(nx, ny)
        iv = grid.nu + iu
        vf = 0.25 * (v + np.roll(v, 1, 0) + np.roll(v, -1, 1)
                     + np.roll(np.roll(v, 1, 0), -1, 1))
        emit(iu, np.roll(iu, -1, 0), u / (2 * grid.dx))
        emit(iu, np.roll(iu, 1, 0), -u / (2 * grid.dx))
        emit(iu, np.roll(iu, -1, 1), vf / (2 * grid.dy))
        emit(iu, np.roll(iu, 1, 1), -vf / (2 * grid.dy))
        uf = 0.25 * (u + np.roll(u, -1, 0) + np.roll(u, 1, 1)
                     + np.roll(np.roll(u, -1, 0), 1, 1))
        emit(iv, np.roll(iv, -1, 1), v / (2 * grid.dy))
        emit(iv, np.roll(iv, 1, 1), -v / (2 * grid.dy))
        emit(iv, np.roll(iv, -1, 0), uf / (2 * grid.dx))
        emit(iv, np.roll(iv, 1, 0), -uf / (2 * grid.dx))
    else:
        iu = np.arange(grid.nu).reshape(grid.ushape)      # i = 1..nx-1 rows
        iv = grid.nu + np.arange(grid.nv).reshape(grid.vshape)
        v_ext = np.zeros((nx, ny + 1))
        v_ext[:, 1:ny] = v
        # v at u-face (i, j), i = 1..nx-1
        vf = 0.25 * (v_ext[1:, :-1] + v_ext[:-1, :-1]
                     + v_ext[1:, 1:] + v_ext[:-1, 1:])
        cdx, cdy = 1.0 / (2 * grid.dx), 1.0 / (2 * grid.dy)
        emit(iu[:-1, :], iu[1:, :], (u * cdx)[:-1, :])       # east neighbour
        emit(iu[1:, :], iu[:-1, :], (-u * cdx)[1:, :])       # west neighbour
        emit(iu[:, :-1], iu[:, 1:], (vf * cdy)[:, :-1])      # north
        emit(iu[:, -1], iu[:, -1], (-vf * cdy)[:, -1])       # top wall ghost
        emit(iu[:, 1:], iu[:, :-1], (-vf * cdy)[:, 1:])      # south
        emit(iu[:, 0], iu[:, 0], (vf * cdy)[:, 0])           # bottom wall ghost
        u_ext = np.zeros((nx + 1, ny))
        u_ext[1:nx, :] = u
        uf = 0.25 * (u_ext[:-1, 1:] + u_ext[1:, 1:]
                     + u_ext[:-1, :-1] + u_ext[1:, :-1])
        emit(iv[:, :-1], iv[:, 1:], (v * cdy)[:, :-1])
        emit(iv[:, 1:], iv[:, :-1], (-v * cdy)[:, 1:])
        emit(iv[:-1, :], iv[1:, :], (uf * cdx)[:-1, :])
        emit(iv[-1, :], iv[-1, :], (-uf * cdx)[-1, :])       # right wall ghost
        emit(iv[1:, :], iv[:-1, :], (-uf * cdx)[1:, :])
        emit(iv[0, :], iv[0, :], (uf * cdx)[0, :])           # left wall ghost

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return sp.csr_matrix((vals, (rows, cols)), shape=(grid.ndof, grid.ndof))


def skew_convection_matrix(grid, rho_avg, w_adv, dt):
    """(dt/2) [ int rho (u.grad)w1 . w2 - int rho (u.grad)w2 . w1 ].

    Antisymmetric by construction: C + C^T = 0 exactly.
    """
    if not np.any(np.asarray(w_adv) != 0.0):
        return sp.csr_matrix((grid.ndof, grid.ndof))
    adv = advection_matrix(grid, w_adv)
    m_rho = sp.diags(grid.rho_to_faces(rho_avg) * grid.vol)
    half = 0.5 * dt * (m_rho @ adv)
    c = half - half.T
    return c.tocsr()


def _pressure_gauge(grid):
    """Sparse gauge block pinning the constant pressure mode.

    The discrete divergence rows sum to zero over the cells, so penalizing a
    single pressure dof keeps every divergence constraint exact while fixing
    the additive constant.
    """
    reg = sp.lil_matrix((grid.ncells, grid.ncells))
    reg[0, 0] = -grid.vol
    return reg.tocsr()


class MomentumOperator:
    """Assembled momentum bilinear form and its saddle-point factorization."""

    def __init__(self, grid, slab, responses, w_prev, dt):
        self.grid = grid
        self.dt = dt
        rho_face_mid = grid.rho_to_faces(0.5 * (slab.rho_end + slab.rho_prev))
        self.mass_diag = rho_face_mid * grid.vol
        self.visc = dt * grid.viscous_stiffness(responses.mu_end)
        self.conv = skew_convection_matrix(grid, slab.rho_avg, w_prev, dt)
        self.bmat = (sp.diags(self.mass_diag) + self.visc + self.conv).tocsr()
        self.mass_prev_diag = grid.rho_to_faces(slab.rho_prev) * grid.vol
        self.rho_end_faces = grid.rho_to_faces(slab.rho_end)
        self._lu = None

    def _kkt(self):
        g = self.grid
        dv = sp.diags(np.full(g.ncells, g.vol)) @ g.div_matrix
        kkt = sp.bmat([[self.bmat, dv.T], [dv, _pressure_gauge(g)]],
                      format="csc")
        return kkt

    def factorize(self):
        if self._lu is None:
            try:
                self._lu = spla.splu(self._kkt())
            except RuntimeError as exc:
                raise SolverError(f"saddle-point factorization failed: {exc}")
        return self._lu

    def solve(self, load):
        """Velocity solving b(u, w) = load . w over the divergence-free space."""
        g = self.grid
        lu = self.factorize()
        rhs = np.concatenate([load, np.zeros(g.ncells)])
        sol = lu.solve(rhs)
        if not np.all(np.isfinite(sol)):
            raise SolverError("saddle-point solve returned non-finite values")
        return sol[:g.ndof]


def stress_load(grid, dt, k, c_xx, c_yy, c_xy):
    """- dt k sum_i int C_i : grad w, assembled through the strain extractors."""
    return -dt * k * grid.strain_work_vector(c_xx, c_yy, c_xy)


def momentum_step(op, w_prev, f_vec=None, stress_vec=None):
    """Solve the implicit velocity update.

    ``f_vec`` is the slab-averaged body force sampled on the faces;
    ``stress_vec`` the assembled Kramers stress load (with its -dt k factor).
    """
    load = op.mass_prev_diag * w_prev
    if f_vec is not None:
        load = load + op.dt * op.rho_end_faces * op.grid.vol * f_vec
    if stress_vec is not None:
        load = load + stress_vec
    return op.solve(load)


def body_force_average(grid, f, t0, t1, nsub=8):
    """Slab average (1/dt) int f dt sampled at the velocity faces.

    ``f(x, y, t)`` returns the two force components; the time integral uses
    the trapezoidal rule over ``nsub`` subintervals (exact for linear-in-t).
    """
    xu, yu = grid.uface_coords()
    xv, yv = grid.vface_coords()
    ts = np.linspace(t0, t1, nsub + 1)
    wts = np.full(nsub + 1, 1.0 / nsub)
    wts[0] *= 0.5
    wts[-1] *= 0.5
    fu = np.zeros(grid.ushape)
    fv = np.zeros(grid.vshape)
    for t, wt in zip(ts, wts):
        fxu, _ = f(xu, yu, t)
        _, fyv = f(xv, yv, t)
        fu += wt * fxu
        fv += wt * fyv
    return grid.join(fu, fv)


def smooth_initial_velocity(grid, rho0, w_raw, dt):
    """Elliptic projection of the initial velocity onto the solenoidal space.

    Solves int [rho0 u0 . v + dt grad u0 : grad v] = int rho0 u_raw . v over
    discretely divergence-free v.  Returns (u0, energy_lhs, energy_rhs) where
    energy_lhs <= energy_rhs is the projection energy bound; the bound is
    verified and a SolverError raised if it fails beyond tolerance.
    """
    mass = sp.diags(grid.rho_to_faces(rho0) * grid.vol)
    bmat = (mass + dt * grid.gradient_stiffness).tocsr()
    dv = sp.diags(np.full(grid.ncells, grid.vol)) @ grid.div_matrix
    kkt = sp.bmat([[bmat, dv.T], [dv, _pressure_gauge(grid)]], format="csc")
    load = mass @ np.asarray(w_raw, dtype=float)
    try:
        sol = spla.splu(kkt).solve(np.concatenate([load, np.zeros(grid.ncells)]))
    except RuntimeError as exc:
        raise SolverError(f"initial-velocity projection failed: {exc}")
    w0 = sol[:grid.ndof]
    lhs = float(w0 @ (mass @ w0) + dt * w0 @ (grid.gradient_stiffness @ w0))
    rhs = float(np.asarray(w_raw) @ (mass @ np.asarray(w_raw)))
    if lhs > rhs * (1.0 + 1e-10) + 1e-14:
        raise SolverError(
            f"initial-velocity energy bound violated: {lhs} > {rhs}")
    return w0, lhs, rhs
