"""Independent reference computations (oracles) used for verification.

Each oracle compares a solver path against an independent reference: the
momentum step against a manufactured solution, the kinetic step against the
closed second-moment ODE of the Hookean dumbbell, and the density transport
against exact translation.  These are the routines behind the ``oracle``
command and the convergence acceptance tests.
"""

import math

import numpy as np
from scipy.integrate import solve_ivp

from . import density as density_mod
from . import diagnostics as diag_mod
from . import grids
from . import kinetic as kinetic_mod
from . import laws
from . import momentum as momentum_mod
from . import stepper


# ---------------------------------------------------------------------------
# manufactured solution for the momentum step (Taylor-Green with forcing)
# ---------------------------------------------------------------------------

def taylor_green(x, y):
    two_pi = 2.0 * math.pi
    return (-np.cos(two_pi * x) * np.sin(two_pi * y),
            np.sin(two_pi * x) * np.cos(two_pi * y))


def mms_velocity(x, y, t, g):
    u, v = taylor_green(x, y)
    return g(t) * u, g(t) * v


def mms_force(g, gp):
    """Body force making g(t) * TaylorGreen solve the momentum equation.

    rho = 1, mu = 1: f = du/dt + (u.grad)u - div D(u), with
    div D = (1/2) Laplacian for solenoidal fields.
    """
    four_pi2 = 4.0 * math.pi ** 2

    def f(x, y, t):
        u, v = taylor_green(x, y)
        coef = gp(t) + four_pi2 * g(t)
        conv = -math.pi * g(t) ** 2
        return (coef * u + conv * np.sin(4 * math.pi * x),
                coef * v + conv * np.sin(4 * math.pi * y))

    return f


def _project_exact(grid, g, t):
    xu, yu = grid.uface_coords()
    xv, yv = grid.vface_coords()
    u, _ = mms_velocity(xu, yu, t, g)
    _, v = mms_velocity(xv, yv, t, g)
    return grid.join(u, v)


def _mms_run(grid, nsteps, dt, g, gp, nsub=64):
    """Drive the momentum step alone (no polymer) from the exact start."""
    f = mms_force(g, gp)
    curves = laws.ResponseCurves.constant(mu=1.0, zeta=1.0, rho_min=0.5,
                                          rho_max=2.0)
    rho = np.ones((grid.nx, grid.ny))
    w = _project_exact(grid, g, 0.0)
    for n in range(1, nsteps + 1):
        slab = density_mod.advance_density(grid, rho, w, dt)
        resp = density_mod.eval_response_averages(slab, curves)
        op = momentum_mod.MomentumOperator(grid, slab, resp, w, dt)
        f_vec = momentum_mod.body_force_average(grid, f, (n - 1) * dt, n * dt,
                                                nsub=nsub)
        w = momentum_mod.momentum_step(op, w, f_vec=f_vec)
        rho = slab.rho_end
    return w


def _face_l2_error(grid, w, w_ref):
    d = w - w_ref
    return math.sqrt(grid.vol * float(np.sum(d * d)))


def mms_time_study(n_space=32, T=0.5, steps=(4, 8, 16), ref_steps=256):
    """First-order-in-dt error decay at fixed spatial resolution.

    The error is measured against a small-dt run on the same grid, which
    isolates the time-discretization error from the (fixed) spatial one.
    """
    g = lambda t: 1.0 + 0.5 * math.sin(4.0 * t)
    gp = lambda t: 2.0 * math.cos(4.0 * t)
    grid = grids.PhysGrid(n_space, n_space, bc="periodic")
    ref = _mms_run(grid, ref_steps, T / ref_steps, g, gp)
    errs = []
    for n in steps:
        w = _mms_run(grid, n, T / n, g, gp)
        errs.append(_face_l2_error(grid, w, ref))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
    return errs, orders


def mms_space_study(ns=(16, 32, 64), dt=0.25, settle_tol=1e-12, max_steps=400):
    """Second-order-in-dx error of the discrete steady state."""
    g = lambda t: 1.0
    gp = lambda t: 0.0
    f = mms_force(g, gp)
    curves = laws.ResponseCurves.constant(mu=1.0, zeta=1.0, rho_min=0.5,
                                          rho_max=2.0)
    errs = []
    for n in ns:
        grid = grids.PhysGrid(n, n, bc="periodic")
        rho = np.ones((n, n))
        w = _project_exact(grid, g, 0.0)
        f_vec = momentum_mod.body_force_average(grid, f, 0.0, dt)
        for _ in range(max_steps):
            slab = density_mod.advance_density(grid, rho, w, dt)
            resp = density_mod.eval_response_averages(slab, curves)
            op = momentum_mod.MomentumOperator(grid, slab, resp, w, dt)
            w_new = momentum_mod.momentum_step(op, w, f_vec=f_vec)
            change = _face_l2_error(grid, w_new, w)
            w = w_new
            if change <= settle_tol:
                break
        errs.append(_face_l2_error(grid, w, _project_exact(grid, g, 0.0)))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
    return errs, orders


# ---------------------------------------------------------------------------
# Hookean shear: closed moment ODE
# ---------------------------------------------------------------------------

def moment_ode_reference(kappa, lam, T):
    """Solve dS/dt = kappa S + S kappa^T + (I - S)/lam from S(0) = I."""
    kappa = np.asarray(kappa, dtype=float)

    def rhs(_, y):
        s = y.reshape(2, 2)
        ds = kappa @ s + s @ kappa.T + (np.eye(2) - s) / lam
        return ds.ravel()

    return solve_ivp(rhs, [0.0, T], np.eye(2).ravel(), rtol=1e-10, atol=1e-12,
                     dense_output=True)


def hookean_shear_oracle(dt=1e-3, T=5.0, lam=1.0, kappa12=1.0, nr=12,
                         ntheta=16, s_max=12.5, L=1e4, sample_every=100):
    """Run the single-cell kinetic step under constant shear vs the moment ODE.

    Returns (times, numeric moments, reference moments, max relative error).
    """
    law = laws.SpringLaw("hookean")
    cfg = grids.ConfigGrid([law], nr=nr, ntheta=ntheta, s_max=s_max)
    grid = grids.PhysGrid(1, 1, bc="periodic")
    curves = laws.ResponseCurves.constant()
    rouse = laws.rouse_linear_chain(1)
    nsteps = int(round(T / dt))
    params = stepper.SchemeParams(
        T=T, N=nsteps, L=L, delta=1e-7,
        epsilon=stepper.default_epsilon(1, lam), lam=lam, k=1.0,
        rouse=rouse, curves=curves, psi_negativity_floor=-math.inf)
    kappa = np.array([[0.0, kappa12], [0.0, 0.0]])
    sol = moment_ode_reference(kappa, lam, T)

    times, nums, refs = [], [], []
    state_box = {}

    def on_step(state, slab, report):
        if state.n % sample_every == 0 and state.n > 0:
            t = state.n * params.dt
            s_num = kinetic_mod.second_moment(cfg, state.psi[0])
            times.append(t)
            nums.append(s_num)
            refs.append(sol.sol(t).reshape(2, 2))
        state_box["state"] = state

    psi0 = np.ones((1, cfg.nq))
    stepper.run(grid, cfg, params, np.ones((1, 1)), grid.zeros_velocity(),
                psi0, prescribed_sigma=kappa, on_step=on_step)
    errs = [np.max(np.abs(a - b)) / np.max(np.abs(b))
            for a, b in zip(nums, refs)]
    return times, nums, refs, max(errs)


# ---------------------------------------------------------------------------
# density transport: exact translation
# ---------------------------------------------------------------------------

def density_translation_study(ns=(32, 64), dt=0.25, width=0.15):
    """Advect a smooth bump by a uniform periodic velocity; compare shifts.

    Returns the L1 errors per level; the upwind scheme is first order, so
    each doubling should roughly halve the error.
    """
    errs = []
    for n in ns:
        grid = grids.PhysGrid(n, n, bc="periodic")
        xc, yc = grid.cell_centers()

        def bump(x):
            return 1.0 + np.exp(-((np.minimum(np.abs(x - 0.5),
                                              1.0 - np.abs(x - 0.5))) / width) ** 2)

        rho0 = bump(xc)
        u = np.ones(grid.ushape)
        v = np.zeros(grid.vshape)
        w = grid.join(u, v)
        slab = density_mod.advance_density(grid, rho0, w, dt)
        ref = bump((xc - dt) % 1.0)
        errs.append(grid.vol * float(np.sum(np.abs(slab.rho_end - ref))))
    ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    return errs, ratios
