"""Initial-data smoothing, the per-step fixed point, and the outer time loop.

Each step first advances the density on the slab (that subproblem decouples
from the rest), then runs a damped Picard iteration between the momentum
solve and the kinetic solve with the cut-off drag factor frozen at the
current iterate; this is a constructive version of the existence proof's
fixed-point map.  Convergence is measured in the Maxwellian-weighted L2
norm of the kinetic field combined with the plain L2 norm of the velocity.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import density as density_mod
from . import kinetic as kinetic_mod
from . import momentum as momentum_mod
from . import laws
from .momentum import SolverError
from .kinetic import NegativityError


@dataclass(frozen=True)
class SchemeParams:
    """Time-discretization and model parameters of one run."""

    T: float
    N: int
    L: float
    delta: float
    epsilon: float
    lam: float
    k: float
    rouse: laws.RouseMatrix
    curves: laws.ResponseCurves
    tol_fp: float = 1e-9
    maxit_fp: int = 200
    theta_fp: float = 0.7
    linkage_C0: float = 0.0     # 0 disables the dt-L linkage invariant
    solver_tol: float = 1e-11
    psi_negativity_floor: float = -1e-6

    def __post_init__(self):
        if not self.L > 1.0:
            raise ValueError("cut-off L must exceed 1")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0,1)")
        if self.N < 0 or self.T <= 0.0:
            raise ValueError("need T > 0 and N >= 0")
        if self.epsilon <= 0.0 or self.lam <= 0.0 or self.k <= 0.0:
            raise ValueError("epsilon, lambda, k must be positive")
        if not 0.0 < self.theta_fp <= 1.0:
            raise ValueError("relaxation theta_fp must lie in (0,1]")
        if self.linkage_C0 > 0.0 and self.N > 0:
            bound = self.dt * self.L * math.log(self.L)
            if bound > self.linkage_C0 * (1.0 + 1e-12):
                raise ValueError(
                    f"dt L log L = {bound} violates the linkage bound "
                    f"C0 = {self.linkage_C0}")

    @property
    def dt(self):
        return self.T / self.N if self.N > 0 else self.T


def default_epsilon(K, lam, micro_ratio=0.1):
    """Center-of-mass diffusion (l0/L0)^2 / (4 (K+1) lambda).

    The physical ratio l0/L0 is 1e-4..1e-3; the desk-scale default 0.1
    enlarges it so the x-diffusion is resolvable on coarse grids.
    """
    return micro_ratio ** 2 / (4.0 * (K + 1) * lam)


def linkage_steps(T, L, C0):
    """Number of steps making dt = C0/(L log L) (the dt-L linkage)."""
    if not L > 1.0 or C0 <= 0.0:
        raise ValueError("linkage requires L > 1 and C0 > 0")
    dt = C0 / (L * math.log(L))
    return max(1, int(math.ceil(T / dt)))


@dataclass
class State:
    """One time level of the coupled solution."""

    rho: np.ndarray      # (nx, ny)
    w: np.ndarray        # velocity dof vector
    psi: np.ndarray      # (ncells, nq) normalized kinetic field
    n: int = 0

    def check(self, floor=-1e-6):
        if self.psi is None or not self.psi.size:
            return
        pmin = float(self.psi.min())
        if pmin < floor:
            raise NegativityError(
                f"kinetic field minimum {pmin} below the floor {floor}")


@dataclass
class FixedPointReport:
    iterations: int
    residuals: list = field(default_factory=list)
    converged: bool = True


# ---------------------------------------------------------------------------
# initial-data smoothing
# ---------------------------------------------------------------------------

def smooth_initial_velocity(grid, rho0, w_raw, dt):
    """Project the raw velocity datum; see :func:`momentum.smooth_initial_velocity`."""
    return momentum_mod.smooth_initial_velocity(grid, rho0, w_raw, dt)


def smooth_initial_psi(grid, cfg, psi_raw, rho0, dt, L, curves, tol=1e-12):
    """Elliptic smoothing of the kinetic initial datum with cut-off.

    Solves  int M [zeta(rho0) psi0 phi + dt (grad_x psi0 . grad_x phi
    + grad_q psi0 . grad_q phi)] = int M zeta(rho0) beta^L(psi_raw) phi.
    The output satisfies 0 <= psi0 <= L up to solver tolerance together with
    the entropy and lambda bounds of the smoothing operator.
    """
    psi_raw = np.asarray(psi_raw, dtype=float)
    if np.any(psi_raw < 0.0):
        raise ValueError("raw kinetic datum must be nonnegative")
    zeta0 = np.ravel(curves.zeta(rho0))
    mass = zeta0 * grid.vol
    xmat = dt * grid.scalar_stiffness()
    op = kinetic_mod.KineticOperator(grid, cfg, mass, xmat, dt * grid.vol,
                                     rouse=None)
    datum = laws.beta_L(L, psi_raw)
    rhs = mass[:, None] * (datum * cfg.w[None, :])
    return op.solve(rhs, x0=np.clip(datum, 0.0, L), tol=tol)


# ---------------------------------------------------------------------------
# the coupled step
# ---------------------------------------------------------------------------

def _fp_norm(grid, cfg, dpsi, dw):
    npsi = math.sqrt(grid.vol * float(np.sum((dpsi * dpsi) @ cfg.w)))
    nw = math.sqrt(grid.vol * float(np.sum(dw * dw)))
    return max(npsi, nw)


def coupled_step(grid, cfg, state, params, f_slab=None, prescribed_sigma=None):
    """Advance one time level; returns (new_state, slab, report).

    ``f_slab`` is the slab-averaged body force on the faces (or None).
    ``prescribed_sigma`` bypasses the momentum solve and imposes a constant
    trace-free velocity gradient in the drag term (single-cell kinetic
    oracle mode).  With ``cfg=None`` (no polymer) the step reduces to the
    density slab plus one momentum solve.
    """
    slab = density_mod.advance_density(grid, state.rho, state.w, params.dt)
    responses = density_mod.eval_response_averages(slab, params.curves)

    if cfg is None:
        op_m = momentum_mod.MomentumOperator(grid, slab, responses, state.w,
                                             params.dt)
        w_new = momentum_mod.momentum_step(op_m, state.w, f_vec=f_slab)
        new_state = State(rho=slab.rho_end, w=w_new, psi=None, n=state.n + 1)
        return new_state, slab, FixedPointReport(1, [0.0], True)

    op_m = None
    if prescribed_sigma is None:
        op_m = momentum_mod.MomentumOperator(grid, slab, responses, state.w,
                                             params.dt)
        op_m.factorize()
    else:
        sig = np.asarray(prescribed_sigma, dtype=float)
        if abs(sig[0, 0] + sig[1, 1]) > 1e-14:
            raise ValueError("prescribed velocity gradient must be trace-free")
        ones = np.ones(grid.ncells)
        sigma_fixed = (sig[0, 0] * ones, sig[0, 1] * ones,
                       sig[1, 0] * ones, sig[1, 1] * ones)

    psi_it = state.psi.copy()
    w_it = state.w.copy()
    psi_out_prev = state.psi
    w_out_prev = state.w
    scale = _fp_norm(grid, cfg, psi_it, w_it) + 1.0
    residuals = []
    converged = False
    iterations = 0
    for it in range(1, params.maxit_fp + 1):
        iterations = it
        if prescribed_sigma is None:
            txx, tyy, txy = [np.zeros((grid.nx, grid.ny)) for _ in range(3)]
            for i in range(cfg.K):
                a, b, c = kinetic_mod.kramers_C(grid, cfg, psi_it,
                                                responses.zeta_end, i)
                txx += a
                tyy += b
                txy += c
            stress = momentum_mod.stress_load(grid, params.dt, params.k,
                                              txx, tyy, txy)
            w_new = momentum_mod.momentum_step(op_m, state.w, f_vec=f_slab,
                                               stress_vec=stress)
            sigma = grid.velocity_gradient_cells(w_new)
        else:
            w_new = state.w
            sigma = sigma_fixed
        beta_frozen = laws.beta_L_delta(params.L, params.delta, psi_it)
        psi_new = kinetic_mod.fokker_planck_step(
            grid, cfg, state.psi, sigma, responses, beta_frozen, state.w,
            params, x0=psi_it)
        # contraction indicator: change between successive map outputs
        res = _fp_norm(grid, cfg, psi_new - psi_out_prev, w_new - w_out_prev) \
            / scale
        residuals.append(res)
        psi_out_prev, w_out_prev = psi_new, w_new
        if res <= params.tol_fp:
            psi_it = psi_new
            w_it = w_new
            converged = True
            break
        th = params.theta_fp
        psi_it = th * psi_new + (1.0 - th) * psi_it
        w_it = th * w_new + (1.0 - th) * w_it
    if not converged:
        raise SolverError(
            f"fixed point did not converge in {params.maxit_fp} iterations; "
            f"residual history tail {residuals[-5:]}")

    new_state = State(rho=slab.rho_end, w=w_it, psi=psi_it, n=state.n + 1)
    new_state.check(params.psi_negativity_floor)
    return new_state, slab, FixedPointReport(iterations, residuals, converged)


# ---------------------------------------------------------------------------
# outer loop
# ---------------------------------------------------------------------------

def run(grid, cfg, params, rho0, w_raw, psi_raw, f=None, prescribed_sigma=None,
        on_step=None, store_trajectory=False):
    """Execute the N-step time loop from raw initial data.

    ``f(x, y, t)`` is an optional body force; ``on_step(state, slab, report)``
    is invoked after every accepted step (and once for the smoothed initial
    state with ``slab=None``).  Returns (final_state, trajectory) where the
    trajectory is the list of velocity dof vectors per level when requested.
    """
    rho0 = np.asarray(rho0, dtype=float).reshape(grid.nx, grid.ny)
    lo, hi = params.curves.rho_min, params.curves.rho_max
    if np.any(rho0 < lo) or np.any(rho0 > hi):
        raise ValueError("initial density violates [rho_min, rho_max]")

    if prescribed_sigma is None:
        w0, _, _ = smooth_initial_velocity(grid, rho0, w_raw, params.dt)
    else:
        w0 = grid.zeros_velocity()
    psi0 = None
    if cfg is not None:
        psi0 = smooth_initial_psi(grid, cfg, psi_raw, rho0, params.dt,
                                  params.L, params.curves)
    state = State(rho=rho0.copy(), w=w0, psi=psi0, n=0)
    state.check(params.psi_negativity_floor)
    trajectory = [state.w.copy()] if store_trajectory else None
    if on_step is not None:
        on_step(state, None, None)

    for n in range(1, params.N + 1):
        f_slab = None
        if f is not None:
            f_slab = momentum_mod.body_force_average(
                grid, f, (n - 1) * params.dt, n * params.dt)
        try:
            state, slab, report = coupled_step(
                grid, cfg, state, params, f_slab=f_slab,
                prescribed_sigma=prescribed_sigma)
        except (SolverError, NegativityError) as exc:
            raise type(exc)(f"step {n}: {exc}") from exc
        if store_trajectory:
            trajectory.append(state.w.copy())
        if on_step is not None:
            on_step(state, slab, report)
    return state, trajectory
