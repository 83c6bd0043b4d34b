"""Bound-preserving transport of the solvent density over one time slab.

The continuity equation is integrated with the velocity frozen at the
previous time level, using donor-cell upwinding in deviation form: every
substep writes each new cell value as a convex combination of the old
stencil values, so the initial-data bounds are preserved exactly and
constants are transported without drift.  Slab time-averages (of the
density and of any response curve of it) are accumulated by the trapezoidal
rule over the substeps.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class DensitySlab:
    """Density data of one slab [t_{n-1}, t_n]."""

    rho_prev: np.ndarray      # slab start, shape (nx, ny)
    rho_end: np.ndarray       # slab end
    rho_avg: np.ndarray       # slab time-average of rho
    dt: float
    substeps: int
    snapshots: np.ndarray     # (substeps + 1, nx, ny), for response averages


@dataclass
class ResponseAverages:
    """Curve evaluations on one slab used by the momentum and kinetic steps."""

    mu_end: np.ndarray        # mu(rho^n)
    zeta_end: np.ndarray      # zeta(rho^n)
    zeta_prev: np.ndarray     # zeta(rho^{n-1})
    zeta_avg: np.ndarray      # slab time-average of zeta(rho), not zeta(average)


def cfl_substeps(grid, w, dt):
    """Substep count guaranteeing a Courant number of at most 1/2."""
    u, v = grid.split(w)
    umax = 0.0
    if u.size:
        umax = max(umax, float(np.max(np.abs(u))))
    if v.size:
        umax = max(umax, float(np.max(np.abs(v))))
    h = min(grid.dx, grid.dy)
    return max(1, int(math.ceil(2.0 * dt * umax / h)))


def advance_density(grid, rho_prev, w_prev, dt, substeps=None):
    """Integrate d rho/dt + div(u rho) = 0 over one slab of length dt.

    Parameters
    ----------
    rho_prev : (nx, ny) array within the admissible density range
    w_prev : velocity dof vector, discretely divergence-free
    substeps : optional override of the CFL-derived substep count

    Returns a :class:`DensitySlab`.  NaNs in the input raise ValueError.
    """
    rho = np.asarray(rho_prev, dtype=float).reshape(grid.nx, grid.ny).copy()
    if not np.all(np.isfinite(rho)):
        raise ValueError("density input contains non-finite values")
    w = np.asarray(w_prev, dtype=float)
    if not np.all(np.isfinite(w)):
        raise ValueError("velocity input contains non-finite values")

    m = cfl_substeps(grid, w, dt) if substeps is None else max(1, int(substeps))
    dts = dt / m
    u, v = grid.split(w)

    # inflow face coefficients, fixed over the slab (velocity is frozen)
    if grid.bc == "periodic":
        uw = u                       # face at x = i dx, west of cell i
        ue = np.roll(u, -1, axis=0)  # east face of cell i
        vs = v
        vn = np.roll(v, -1, axis=1)
        roll = True
    else:
        uw = np.zeros((grid.nx, grid.ny)); uw[1:, :] = u
        ue = np.zeros((grid.nx, grid.ny)); ue[:-1, :] = u
        vs = np.zeros((grid.nx, grid.ny)); vs[:, 1:] = v
        vn = np.zeros((grid.nx, grid.ny)); vn[:, :-1] = v
        roll = False
    c_w = np.maximum(uw, 0.0) * dts / grid.dx    # inflow from the west
    c_e = np.maximum(-ue, 0.0) * dts / grid.dx   # inflow from the east
    c_s = np.maximum(vs, 0.0) * dts / grid.dy
    c_n = np.maximum(-vn, 0.0) * dts / grid.dy

    snaps = np.empty((m + 1, grid.nx, grid.ny))
    snaps[0] = rho
    for step in range(m):
        if roll:
            rw = np.roll(rho, 1, axis=0)
            re = np.roll(rho, -1, axis=0)
            rs = np.roll(rho, 1, axis=1)
            rn = np.roll(rho, -1, axis=1)
        else:
            rw = np.vstack([rho[:1, :], rho[:-1, :]])
            re = np.vstack([rho[1:, :], rho[-1:, :]])
            rs = np.hstack([rho[:, :1], rho[:, :-1]])
            rn = np.hstack([rho[:, 1:], rho[:, -1:]])
        new = (rho + c_w * (rw - rho) + c_e * (re - rho)
               + c_s * (rs - rho) + c_n * (rn - rho))
        # convex combination up to rounding; clamp to the stencil envelope
        lo = np.minimum.reduce([rho, rw, re, rs, rn])
        hi = np.maximum.reduce([rho, rw, re, rs, rn])
        rho = np.clip(new, lo, hi)
        snaps[step + 1] = rho

    # trapezoidal slab average
    avg = (0.5 * snaps[0] + snaps[1:-1].sum(axis=0) + 0.5 * snaps[-1]) / m \
        if m > 1 else 0.5 * (snaps[0] + snaps[1])
    return DensitySlab(rho_prev=snaps[0].copy(), rho_end=rho.copy(),
                       rho_avg=avg, dt=dt, substeps=m, snapshots=snaps)


def eval_response_averages(slab, curves):
    """Pointwise curve evaluations and the trapezoidal zeta slab average."""
    zeta_snaps = curves.zeta(slab.snapshots)
    m = slab.substeps
    if m > 1:
        zavg = (0.5 * zeta_snaps[0] + zeta_snaps[1:-1].sum(axis=0)
                + 0.5 * zeta_snaps[-1]) / m
    else:
        zavg = 0.5 * (zeta_snaps[0] + zeta_snaps[-1])
    return ResponseAverages(
        mu_end=curves.mu(slab.rho_end),
        zeta_end=zeta_snaps[-1],
        zeta_prev=zeta_snaps[0],
        zeta_avg=zavg,
    )


def total_mass(grid, rho):
    return grid.vol * float(np.sum(rho))


def lp_norm(grid, rho, p):
    rho = np.asarray(rho, dtype=float)
    if p == math.inf:
        return float(np.max(np.abs(rho)))
    return float((grid.vol * np.sum(np.abs(rho) ** p)) ** (1.0 / p))
