"""Flow-domain and configuration-domain discretizations.

The flow domain is a staggered MAC grid (scalars at cell centers, velocity
components at faces) with either no-slip or fully periodic boundaries.  The
configuration domain is a tensor product of per-spring polar grids whose
radial nodes are Gauss points adapted to the Maxwellian weight; the weight's
boundary degeneracy is absorbed into the quadrature weights and no node ever
touches the ball boundary, which realizes the natural boundary condition of
the kinetic equation weakly.

All assembly is sequential numpy with a fixed reduction order, so repeated
runs are bitwise identical.
"""

import math

import numpy as np
import scipy.sparse as sp

from . import laws

# ---------------------------------------------------------------------------
# small dense differentiation matrices
# ---------------------------------------------------------------------------

def fourier_diff_matrix(n):
    """Spectral differentiation on the uniform periodic grid theta_l = 2 pi l/n."""
    if n < 4 or n % 2 != 0:
        raise ValueError("angular node count must be even and >= 4")
    idx = np.arange(n)
    diff = idx[:, None] - idx[None, :]
    mask = diff != 0
    d = np.zeros((n, n))
    d[mask] = 0.5 * (-1.0) ** diff[mask] / np.tan(math.pi * diff[mask] / n)
    return d


def barycentric_diff_matrix(x):
    """Polynomial differentiation matrix on arbitrary distinct nodes x."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    diffs = x[:, None] - x[None, :]
    np.fill_diagonal(diffs, 1.0)
    w = 1.0 / np.prod(diffs, axis=1)  # barycentric weights
    d = np.zeros((n, n))
    off = w[None, :] / w[:, None] / diffs
    np.fill_diagonal(off, 0.0)
    d = off
    np.fill_diagonal(d, -np.sum(off, axis=1))
    return d


def _apply_along_axis(mat, arr, axis):
    """Dense matrix applied along one axis of an nd-array."""
    moved = np.tensordot(mat, arr, axes=(1, axis))
    return np.moveaxis(moved, 0, axis)


# ---------------------------------------------------------------------------
# configuration grid
# ---------------------------------------------------------------------------

class ConfigGrid:
    """Quadrature-bearing discretization of D = D_1 x ... x D_K (d = 2).

    Per spring: ``nr`` radial Gauss nodes adapted to the Maxwellian weight
    and ``ntheta`` uniform angular nodes.  Fields live at the tensor nodes;
    ``w`` integrates against the *normalized* total Maxwellian (sum(w) = 1),
    and ``w_u[i]`` integrates against M * U_i'.
    """

    def __init__(self, spring_laws, nr=12, ntheta=16, s_max=None):
        if isinstance(spring_laws, laws.SpringLaw):
            spring_laws = [spring_laws]
        self.laws = list(spring_laws)
        self.K = len(self.laws)
        self.d = 2
        if any(l.d != 2 for l in self.laws):
            raise NotImplementedError("configuration grids support d = 2 only")
        if self.K * self.d > 4:
            raise ValueError("memory guard: K*d must stay <= 4")
        self.nr = int(nr)
        self.ntheta = int(ntheta)

        self._local_w = []      # per spring, (n_i,) Maxwellian weights, sum 1
        self._local_wu = []     # per spring, (n_i,) M U' weights
        self._local_gx = []     # per spring, (n_i, n_i) d/dq_x
        self._local_gy = []
        self._local_qx = []
        self._local_qy = []
        self.z = []             # per spring partition constant
        self.rules = []

        theta = 2.0 * math.pi * np.arange(self.ntheta) / self.ntheta
        dtheta = fourier_diff_matrix(self.ntheta)
        for law in self.laws:
            rule = laws.maxwellian_rule(law, self.nr, s_max)
            self.rules.append(rule)
            self.z.append(laws.partition_constant(law, rule))
            zsum = float(np.sum(rule.w_m))
            wm = np.outer(rule.w_m / zsum, np.full(self.ntheta, 1.0 / self.ntheta))
            wu = np.outer(rule.w_mu / zsum, np.full(self.ntheta, 1.0 / self.ntheta))
            r = rule.r
            ddr = self._radial_derivative(r)
            cos_t, sin_t = np.cos(theta), np.sin(theta)
            ddt = np.kron(np.eye(self.nr), dtheta)
            cos_n = np.kron(np.ones(self.nr), cos_t)
            sin_n = np.kron(np.ones(self.nr), sin_t)
            inv_r = np.kron(1.0 / r, np.ones(self.ntheta))
            gx = cos_n[:, None] * ddr - (sin_n * inv_r)[:, None] * ddt
            gy = sin_n[:, None] * ddr + (cos_n * inv_r)[:, None] * ddt
            self._local_w.append(wm.ravel())
            self._local_wu.append(wu.ravel())
            self._local_gx.append(gx)
            self._local_gy.append(gy)
            self._local_qx.append(np.kron(r, cos_t))
            self._local_qy.append(np.kron(r, sin_t))

        self.local_n = [self.nr * self.ntheta] * self.K
        self.nq = int(np.prod(self.local_n))

        # tensorized weight and coordinate arrays on the full node set
        self.w = self._tensor_weight([self._local_w[i] for i in range(self.K)])
        self.w_u = []
        for i in range(self.K):
            factors = [self._local_wu[j] if j == i else self._local_w[j]
                       for j in range(self.K)]
            self.w_u.append(self._tensor_weight(factors))
        self.qx = [self._broadcast_coord(self._local_qx[i], i) for i in range(self.K)]
        self.qy = [self._broadcast_coord(self._local_qy[i], i) for i in range(self.K)]

    # -- helpers -----------------------------------------------------------

    def _radial_derivative(self, r):
        """d/dr on the polar node set via the doubled radial line.

        A smooth function of the disk satisfies f(-r, theta) = f(r, theta+pi);
        interpolating radially through the 2*nr nodes +-r_j (using the values
        on the opposite ray for the negative ones) respects that parity and
        doubles the radial approximation order.  Returns an (n, n) matrix on
        the flattened (r, theta) node set, with opposite-ray coupling.
        """
        nr, nt = self.nr, self.ntheta
        ext = np.concatenate([-r[::-1], r])
        d2 = barycentric_diff_matrix(ext)
        same = d2[nr:, nr:]                  # +r_j columns
        opp = d2[nr:, :nr][:, ::-1]          # -r_j columns, back in +r order
        out = np.zeros((nr * nt, nr * nt))
        half = nt // 2
        for l in range(nt):
            lo = (l + half) % nt
            rows = np.arange(nr) * nt + l
            out[np.ix_(rows, np.arange(nr) * nt + l)] += same
            out[np.ix_(rows, np.arange(nr) * nt + lo)] += opp
        return out

    def _tensor_weight(self, factors):
        out = factors[0]
        for f in factors[1:]:
            out = np.multiply.outer(out, f)
        return out.ravel()

    def _broadcast_coord(self, local, i):
        shape = [1] * self.K
        shape[i] = self.local_n[i]
        arr = local.reshape(shape)
        return np.broadcast_to(arr, self.local_n).ravel().copy()

    def _to_tensor(self, field):
        """(..., nq) -> (..., n_1, ..., n_K)"""
        return np.asarray(field).reshape(field.shape[:-1] + tuple(self.local_n))

    def _to_flat(self, tens, lead_shape):
        return tens.reshape(lead_shape + (self.nq,))

    def grad_q(self, field, i):
        """Cartesian gradient w.r.t. spring i; field shape (..., nq)."""
        field = np.asarray(field, dtype=float)
        lead = field.shape[:-1]
        t = self._to_tensor(field)
        ax = len(lead) + i
        gx = _apply_along_axis(self._local_gx[i], t, ax)
        gy = _apply_along_axis(self._local_gy[i], t, ax)
        return self._to_flat(gx, lead), self._to_flat(gy, lead)

    def grad_q_adjoint(self, fx, fy, i):
        """Adjoint of grad_q: returns G_x^T fx + G_y^T fy (same shape)."""
        lead = fx.shape[:-1]
        ax = len(lead) + i
        tx = _apply_along_axis(self._local_gx[i].T, self._to_tensor(fx), ax)
        ty = _apply_along_axis(self._local_gy[i].T, self._to_tensor(fy), ax)
        return self._to_flat(tx + ty, lead)

    # -- quadrature functionals ---------------------------------------------

    def integrate_m(self, field):
        """int_D M field dq per leading index (field shape (..., nq))."""
        return np.asarray(field) @ self.w

    def integrate_mu(self, field, i):
        """int_D M U_i' field dq."""
        return np.asarray(field) @ self.w_u[i]

    def moment_tensor(self, i):
        """int_D M U_i' q_i q_i^T dq; equals the identity for admissible laws."""
        qx, qy = self.qx[i], self.qy[i]
        wu = self.w_u[i]
        return np.array([
            [float(np.sum(wu * qx * qx)), float(np.sum(wu * qx * qy))],
            [float(np.sum(wu * qy * qx)), float(np.sum(wu * qy * qy))],
        ])

    def apply_rouse_diffusion(self, field, rouse):
        """Action of the form sum_ij A_ij int M grad_j(.) . grad_i(phi).

        Returns the array R with  phi . R = sum_ij A_ij int M grad_j field
        . grad_i phi  for every nodal test vector phi.
        """
        a = rouse.a
        grads = [self.grad_q(field, j) for j in range(self.K)]
        out = np.zeros_like(np.asarray(field, dtype=float))
        for i in range(self.K):
            fx = np.zeros_like(out)
            fy = np.zeros_like(out)
            for j in range(self.K):
                if a[i, j] == 0.0:
                    continue
                fx += a[i, j] * grads[j][0]
                fy += a[i, j] * grads[j][1]
            out += self.grad_q_adjoint(fx * self.w, fy * self.w, i)
        return out

    def apply_iso_diffusion(self, field):
        """Action of sum_i int M grad_i(.) . grad_i(phi) (identity coupling)."""
        field = np.asarray(field, dtype=float)
        out = np.zeros_like(field)
        for i in range(self.K):
            gx, gy = self.grad_q(field, i)
            out += self.grad_q_adjoint(gx * self.w, gy * self.w, i)
        return out

    def local_stiffness(self, i):
        """Dense per-spring stiffness Gx^T diag(w_i) Gx + Gy^T diag(w_i) Gy."""
        gx, gy = self._local_gx[i], self._local_gy[i]
        w = self._local_w[i]
        return gx.T @ (w[:, None] * gx) + gy.T @ (w[:, None] * gy)

    def iso_fisher(self, field, cellvol=1.0):
        """sum_i int M |grad_i field|^2 dq summed over leading indices."""
        field = np.asarray(field, dtype=float)
        total = 0.0
        for i in range(self.K):
            gx, gy = self.grad_q(field, i)
            total += float(np.sum((gx * gx + gy * gy) @ self.w))
        return cellvol * total


def q_diffusion_form(cfg, psi, phi, rouse, lam, cellvol=1.0):
    """(1/4 lambda) sum_ij A_ij int_{Omega x D} M grad_j psi . grad_i phi.

    ``psi`` and ``phi`` have shape (..., nq) on matching grids; the leading
    axes are summed with uniform cell volume ``cellvol``.
    """
    psi = np.asarray(psi, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if psi.shape != phi.shape or psi.shape[-1] != cfg.nq:
        raise ValueError("fields must share one configuration grid")
    r = cfg.apply_rouse_diffusion(psi, rouse)
    return cellvol * float(np.sum(r * phi)) / (4.0 * lam)


def weighted_inner_product(cfg, f1, f2, cellvol=1.0):
    """int_{Omega x D} M f1 f2 dq dx with uniform cell volume."""
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    if f1.shape != f2.shape or f1.shape[-1] != cfg.nq:
        raise ValueError("fields must share one configuration grid")
    return cellvol * float(np.sum((f1 * f2) @ cfg.w))


def integration_by_parts_check(cfg, b_mat, phi):
    """Residual of int M sum_i (B q_i).grad_i phi = int M phi sum_i U_i' q_i q_i^T : B.

    ``b_mat`` must be trace-free; ``phi`` is a callable of the stacked
    coordinates (qx_1, qy_1, ..., qx_K, qy_K) or a nodal array.
    """
    b_mat = np.asarray(b_mat, dtype=float)
    if abs(b_mat[0, 0] + b_mat[1, 1]) > 1e-14:
        raise ValueError("matrix must be trace-free")
    if callable(phi):
        coords = []
        for i in range(cfg.K):
            coords.extend([cfg.qx[i], cfg.qy[i]])
        phi = phi(*coords)
    phi = np.asarray(phi, dtype=float)
    lhs = 0.0
    rhs = 0.0
    for i in range(cfg.K):
        gx, gy = cfg.grad_q(phi, i)
        bq_x = b_mat[0, 0] * cfg.qx[i] + b_mat[0, 1] * cfg.qy[i]
        bq_y = b_mat[1, 0] * cfg.qx[i] + b_mat[1, 1] * cfg.qy[i]
        lhs += float(np.sum(cfg.w * (bq_x * gx + bq_y * gy)))
        qq_b = (b_mat[0, 0] * cfg.qx[i] ** 2 + b_mat[1, 1] * cfg.qy[i] ** 2
                + (b_mat[0, 1] + b_mat[1, 0]) * cfg.qx[i] * cfg.qy[i])
        rhs += float(np.sum(cfg.w_u[i] * phi * qq_b))
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# MAC flow grid
# ---------------------------------------------------------------------------

NOSLIP = "noslip"
PERIODIC = "periodic"


class PhysGrid:
    """Uniform staggered MAC grid on [0, lx] x [0, ly].

    Scalars sit at the ``nx * ny`` cell centers; u at vertical faces, v at
    horizontal faces.  In no-slip mode the wall-normal boundary faces carry
    the fixed value zero and are excluded from the unknown vector; the
    tangential wall condition enters the stencils through ghost reflection.
    """

    def __init__(self, nx, ny, lx=1.0, ly=1.0, bc=NOSLIP):
        if bc not in (NOSLIP, PERIODIC):
            raise ValueError(f"unknown boundary mode {bc!r}")
        if bc == NOSLIP and (nx < 2 or ny < 2):
            raise ValueError("no-slip grids need at least 2x2 cells")
        if nx < 1 or ny < 1:
            raise ValueError("cell counts must be positive")
        self.nx, self.ny = int(nx), int(ny)
        self.lx, self.ly = float(lx), float(ly)
        self.bc = bc
        self.dx = self.lx / self.nx
        self.dy = self.ly / self.ny
        self.vol = self.dx * self.dy
        self.ncells = self.nx * self.ny
        if bc == PERIODIC:
            self.ushape = (self.nx, self.ny)
            self.vshape = (self.nx, self.ny)
        else:
            self.ushape = (self.nx - 1, self.ny)
            self.vshape = (self.nx, self.ny - 1)
        self.nu = int(np.prod(self.ushape))
        self.nv = int(np.prod(self.vshape))
        self.ndof = self.nu + self.nv
        self._div = self._build_div()
        self._strain = self._build_strain()
        self._grad_stiff = self._build_component_gradient_edges()

    # -- layout helpers -----------------------------------------------------

    def zeros_velocity(self):
        return np.zeros(self.ndof)

    def split(self, w):
        w = np.asarray(w, dtype=float)
        return (w[:self.nu].reshape(self.ushape),
                w[self.nu:].reshape(self.vshape))

    def join(self, u, v):
        return np.concatenate([np.ravel(u), np.ravel(v)])

    def cell_centers(self):
        x = (np.arange(self.nx) + 0.5) * self.dx
        y = (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    def uface_coords(self):
        if self.bc == PERIODIC:
            x = np.arange(self.nx) * self.dx
        else:
            x = np.arange(1, self.nx) * self.dx
        y = (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    def vface_coords(self):
        x = (np.arange(self.nx) + 0.5) * self.dx
        if self.bc == PERIODIC:
            y = np.arange(self.ny) * self.dy
        else:
            y = np.arange(1, self.ny) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    def _uidx(self, i, j):
        # u-face at x = i*dx; valid i depends on bc
        if self.bc == PERIODIC:
            return (i % self.nx) * self.ny + (j % self.ny)
        return (i - 1) * self.ny + j   # i in 1..nx-1

    def _vidx(self, i, j):
        if self.bc == PERIODIC:
            return self.nu + (i % self.nx) * self.ny + (j % self.ny)
        return self.nu + i * (self.ny - 1) + (j - 1)  # j in 1..ny-1

    def cidx(self, i, j):
        return (i % self.nx) * self.ny + (j % self.ny)

    # -- divergence ----------------------------------------------------------

    def _build_div(self):
        rows, cols, vals = [], [], []
        for i in range(self.nx):
            for j in range(self.ny):
                c = self.cidx(i, j)
                # east/west u faces
                if self.bc == PERIODIC:
                    rows += [c, c]
                    cols += [self._uidx(i + 1, j), self._uidx(i, j)]
                    vals += [1.0 / self.dx, -1.0 / self.dx]
                else:
                    if i + 1 <= self.nx - 1:
                        rows.append(c); cols.append(self._uidx(i + 1, j))
                        vals.append(1.0 / self.dx)
                    if i >= 1:
                        rows.append(c); cols.append(self._uidx(i, j))
                        vals.append(-1.0 / self.dx)
                # north/south v faces
                if self.bc == PERIODIC:
                    rows += [c, c]
                    cols += [self._vidx(i, j + 1), self._vidx(i, j)]
                    vals += [1.0 / self.dy, -1.0 / self.dy]
                else:
                    if j + 1 <= self.ny - 1:
                        rows.append(c); cols.append(self._vidx(i, j + 1))
                        vals.append(1.0 / self.dy)
                    if j >= 1:
                        rows.append(c); cols.append(self._vidx(i, j))
                        vals.append(-1.0 / self.dy)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.ncells, self.ndof))

    def divergence(self, w):
        """Per-cell discrete divergence, shape (nx, ny)."""
        return (self._div @ np.asarray(w, dtype=float)).reshape(self.nx, self.ny)

    @property
    def div_matrix(self):
        return self._div

    # -- strain extraction ----------------------------------------------------

    def _build_strain(self):
        """Matrices taking the velocity vector to strain samples.

        Returns (Exx, Eyy, Exy, wxx, wyy, wxy): Dxx, Dyy at cell centers and
        Dxy = (du/dy + dv/dx)/2 at corners, with quadrature volumes, so that
        int mu |D(w)|^2 = sum wxx mu (Exx w)^2 + wyy mu (Eyy w)^2
                           + 2 sum wxy mu_c (Exy w)^2.
        """
        exx = sp.lil_matrix((self.ncells, self.ndof))
        eyy = sp.lil_matrix((self.ncells, self.ndof))
        for i in range(self.nx):
            for j in range(self.ny):
                c = self.cidx(i, j)
                if self.bc == PERIODIC:
                    exx[c, self._uidx(i + 1, j)] += 1.0 / self.dx
                    exx[c, self._uidx(i, j)] += -1.0 / self.dx
                    eyy[c, self._vidx(i, j + 1)] += 1.0 / self.dy
                    eyy[c, self._vidx(i, j)] += -1.0 / self.dy
                else:
                    if i + 1 <= self.nx - 1:
                        exx[c, self._uidx(i + 1, j)] += 1.0 / self.dx
                    if i >= 1:
                        exx[c, self._uidx(i, j)] += -1.0 / self.dx
                    if j + 1 <= self.ny - 1:
                        eyy[c, self._vidx(i, j + 1)] += 1.0 / self.dy
                    if j >= 1:
                        eyy[c, self._vidx(i, j)] += -1.0 / self.dy

        if self.bc == PERIODIC:
            corners = [(i, j) for i in range(self.nx) for j in range(self.ny)]
        else:
            corners = [(i, j) for i in range(self.nx + 1) for j in range(self.ny + 1)]
        exy = sp.lil_matrix((len(corners), self.ndof))
        wxy = np.zeros(len(corners))
        self._corner_cells = []
        for idx, (i, j) in enumerate(corners):
            # du/dy across corner (i, j): u faces at x = i dx, rows j-1, j
            if self.bc == PERIODIC:
                exy[idx, self._uidx(i, j)] += 0.5 / self.dy
                exy[idx, self._uidx(i, j - 1)] += -0.5 / self.dy
                exy[idx, self._vidx(i, j)] += 0.5 / self.dx
                exy[idx, self._vidx(i - 1, j)] += -0.5 / self.dx
                wxy[idx] = self.vol
                self._corner_cells.append([self.cidx(i - 1, j - 1), self.cidx(i, j - 1),
                                           self.cidx(i - 1, j), self.cidx(i, j)])
            else:
                interior_x = 1 <= i <= self.nx - 1
                interior_y = 1 <= j <= self.ny - 1
                # du/dy; ghost reflection u = 0 on walls
                if interior_x:
                    above = self._uidx(i, j) if j <= self.ny - 1 else None
                    below = self._uidx(i, j - 1) if j >= 1 else None
                    if above is not None and below is not None:
                        exy[idx, above] += 0.5 / self.dy
                        exy[idx, below] += -0.5 / self.dy
                    elif above is not None:      # bottom wall: u(-1) = -u(0)
                        exy[idx, above] += 1.0 / self.dy
                    elif below is not None:      # top wall
                        exy[idx, below] += -1.0 / self.dy
                # dv/dx
                if interior_y:
                    right = self._vidx(i, j) if i <= self.nx - 1 else None
                    left = self._vidx(i - 1, j) if i >= 1 else None
                    if right is not None and left is not None:
                        exy[idx, right] += 0.5 / self.dx
                        exy[idx, left] += -0.5 / self.dx
                    elif right is not None:      # left wall
                        exy[idx, right] += 1.0 / self.dx
                    elif left is not None:       # right wall
                        exy[idx, left] += -1.0 / self.dx
                fx = 1.0 if interior_x else 0.5
                fy = 1.0 if interior_y else 0.5
                wxy[idx] = self.vol * fx * fy
                cells = []
                for di in (-1, 0):
                    for dj in (-1, 0):
                        ii, jj = i + di, j + dj
                        if 0 <= ii < self.nx and 0 <= jj < self.ny:
                            cells.append(self.cidx(ii, jj))
                self._corner_cells.append(cells)
        return (exx.tocsr(), eyy.tocsr(), exy.tocsr(),
                np.full(self.ncells, self.vol), np.full(self.ncells, self.vol), wxy)

    def corner_average(self, cellfield):
        """Average a cell-centered field to the corner sample set."""
        flat = np.ravel(cellfield)
        out = np.empty(len(self._corner_cells))
        for idx, cells in enumerate(self._corner_cells):
            out[idx] = np.mean(flat[cells])
        return out

    def viscous_stiffness(self, mu_cells):
        """Sparse SPD matrix of the form  w -> int mu D(w):D(.)  (no dt factor)."""
        mu_flat = np.ravel(np.asarray(mu_cells, dtype=float))
        if mu_flat.size == 1:
            mu_flat = np.full(self.ncells, float(mu_flat))
        key = mu_flat.tobytes()
        cached = getattr(self, "_visc_cache", None)
        if cached is not None and cached[0] == key:
            return cached[1]
        exx, eyy, exy, wxx, wyy, wxy = self._strain
        mu_corner = self.corner_average(mu_flat)
        s = (exx.T @ sp.diags(wxx * mu_flat) @ exx
             + eyy.T @ sp.diags(wyy * mu_flat) @ eyy
             + 2.0 * (exy.T @ sp.diags(wxy * mu_corner) @ exy)).tocsr()
        self._visc_cache = (key, s)
        return s

    def strain_work_vector(self, c_xx, c_yy, c_xy):
        """Load vector  w -> int C : D(w)  for a symmetric cell tensor field C."""
        exx, eyy, exy, wxx, wyy, wxy = self._strain
        cxy_corner = self.corner_average(c_xy)
        return (exx.T @ (wxx * np.ravel(c_xx))
                + eyy.T @ (wyy * np.ravel(c_yy))
                + 2.0 * (exy.T @ (wxy * cxy_corner)))

    def rate_of_strain(self, w):
        """Cell-centered symmetric strain tensor (Dxx, Dyy, Dxy).

        Dxy is averaged from the corner samples; the trace Dxx + Dyy equals
        the discrete divergence exactly.
        """
        exx, eyy, exy, _, _, _ = self._strain
        w = np.asarray(w, dtype=float)
        dxx = (exx @ w).reshape(self.nx, self.ny)
        dyy = (eyy @ w).reshape(self.nx, self.ny)
        corner_vals = exy @ w
        dxy = np.zeros(self.ncells)
        counts = np.zeros(self.ncells)
        for idx, cells in enumerate(self._corner_cells):
            for c in cells:
                dxy[c] += corner_vals[idx]
                counts[c] += 1.0
        dxy = (dxy / counts).reshape(self.nx, self.ny)
        return dxx, dyy, dxy

    # -- component-gradient stiffness (initial-data smoothing) ---------------

    def _build_component_gradient_edges(self):
        """Edge list for int grad u : grad v over both velocity components."""
        rows, cols, vals = [], [], []   # (dof_a, dof_b, coeff) pairs; b = -1 -> wall
        edges = []

        def add_edge(a, b, h):
            edges.append((a, b, self.vol / (h * h)))

        nx, ny = self.nx, self.ny
        if self.bc == PERIODIC:
            for i in range(nx):
                for j in range(ny):
                    a = self._uidx(i, j)
                    add_edge(a, self._uidx(i + 1, j), self.dx)
                    add_edge(a, self._uidx(i, j + 1), self.dy)
                    b = self._vidx(i, j)
                    add_edge(b, self._vidx(i + 1, j), self.dx)
                    add_edge(b, self._vidx(i, j + 1), self.dy)
        else:
            for i in range(1, nx):
                for j in range(ny):
                    a = self._uidx(i, j)
                    if i + 1 <= nx - 1:
                        add_edge(a, self._uidx(i + 1, j), self.dx)
                    else:
                        edges.append((a, -1, self.vol / self.dx ** 2))
                    if i == 1:
                        edges.append((a, -1, self.vol / self.dx ** 2))
                    if j + 1 <= ny - 1:
                        add_edge(a, self._uidx(i, j + 1), self.dy)
                    else:   # wall at distance dy/2
                        edges.append((a, -1, 2.0 * self.vol / self.dy ** 2))
                    if j == 0:
                        edges.append((a, -1, 2.0 * self.vol / self.dy ** 2))
            for i in range(nx):
                for j in range(1, ny):
                    b = self._vidx(i, j)
                    if j + 1 <= ny - 1:
                        add_edge(b, self._vidx(i, j + 1), self.dy)
                    else:
                        edges.append((b, -1, self.vol / self.dy ** 2))
                    if j == 1:
                        edges.append((b, -1, self.vol / self.dy ** 2))
                    if i + 1 <= nx - 1:
                        add_edge(b, self._vidx(i + 1, j), self.dx)
                    else:
                        edges.append((b, -1, 2.0 * self.vol / self.dx ** 2))
                    if i == 0:
                        edges.append((b, -1, 2.0 * self.vol / self.dx ** 2))

        s = sp.lil_matrix((self.ndof, self.ndof))
        for a, b, c in edges:
            if b < 0:
                s[a, a] += c
            else:
                s[a, a] += c
                s[b, b] += c
                s[a, b] -= c
                s[b, a] -= c
        return s.tocsr()

    @property
    def gradient_stiffness(self):
        """Matrix of  w -> int grad w : grad(.)  with homogeneous wall values."""
        return self._grad_stiff

    # -- interpolation --------------------------------------------------------

    def rho_to_faces(self, rho):
        """Cell density averaged to the velocity faces, returned as a vector."""
        rho = np.asarray(rho, dtype=float).reshape(self.nx, self.ny)
        if self.bc == PERIODIC:
            ru = 0.5 * (rho + np.roll(rho, 1, axis=0))
            rv = 0.5 * (rho + np.roll(rho, 1, axis=1))
        else:
            ru = 0.5 * (rho[1:, :] + rho[:-1, :])
            rv = 0.5 * (rho[:, 1:] + rho[:, :-1])
        return self.join(ru, rv)

    def cell_centered_velocity(self, w):
        """Average the face velocity to cell centers, shapes (nx, ny) each."""
        u, v = self.split(w)
        if self.bc == PERIODIC:
            uc = 0.5 * (u + np.roll(u, -1, axis=0))
            vc = 0.5 * (v + np.roll(v, -1, axis=1))
        else:
            ue = np.zeros((self.nx + 1, self.ny))
            ue[1:-1, :] = u
            uc = 0.5 * (ue[:-1, :] + ue[1:, :])
            ve = np.zeros((self.nx, self.ny + 1))
            ve[:, 1:-1] = v
            vc = 0.5 * (ve[:, :-1] + ve[:, 1:])
        return uc, vc

    def velocity_gradient_cells(self, w):
        """sigma = grad u sampled at cell centers: (s_xx, s_xy, s_yx, s_yy).

        s_xx + s_yy equals the discrete divergence exactly.
        """
        u, v = self.split(w)
        if self.bc == PERIODIC:
            sxx = (np.roll(u, -1, axis=0) - u) / self.dx
            syy = (np.roll(v, -1, axis=1) - v) / self.dy
        else:
            ue = np.zeros((self.nx + 1, self.ny))
            ue[1:-1, :] = u
            sxx = (ue[1:, :] - ue[:-1, :]) / self.dx
            ve = np.zeros((self.nx, self.ny + 1))
            ve[:, 1:-1] = v
            syy = (ve[:, 1:] - ve[:, :-1]) / self.dy
        uc, vc = self.cell_centered_velocity(w)
        sxy = self._ddy_cells(uc)   # du/dy
        syx = self._ddx_cells(vc)   # dv/dx
        return sxx, sxy, syx, syy

    def _ddx_cells(self, f):
        if self.bc == PERIODIC:
            return (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2 * self.dx)
        g = np.zeros_like(f)
        g[1:-1, :] = (f[2:, :] - f[:-2, :]) / (2 * self.dx)
        # ghost reflection f = -f across the wall
        g[0, :] = (f[1, :] + f[0, :]) / (2 * self.dx)
        g[-1, :] = (-f[-1, :] - f[-2, :]) / (2 * self.dx)
        return g

    def _ddy_cells(self, f):
        if self.bc == PERIODIC:
            return (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2 * self.dy)
        g = np.zeros_like(f)
        g[:, 1:-1] = (f[:, 2:] - f[:, :-2]) / (2 * self.dy)
        g[:, 0] = (f[:, 1] + f[:, 0]) / (2 * self.dy)
        g[:, -1] = (-f[:, -1] - f[:, -2]) / (2 * self.dy)
        return g

    # -- scalar (cell-centered) operators used by the kinetic step ------------

    def scalar_stiffness(self):
        """5-point stiffness S with v^T S v = sum_faces vol (dv/h)^2.

        Interior faces only: this realizes the homogeneous Neumann condition
        of the center-of-mass diffusion term in no-slip mode.
        """
        cached = getattr(self, "_scalar_stiff", None)
        if cached is not None:
            return cached
        rows, cols, vals = [], [], []

        def add(a, b, c):
            rows.extend([a, b, a, b])
            cols.extend([a, b, b, a])
            vals.extend([c, c, -c, -c])

        for i in range(self.nx):
            for j in range(self.ny):
                c = self.cidx(i, j)
                if self.bc == PERIODIC or i + 1 < self.nx:
                    add(c, self.cidx(i + 1, j), self.vol / self.dx ** 2)
                if self.bc == PERIODIC or j + 1 < self.ny:
                    add(c, self.cidx(i, j + 1), self.vol / self.dy ** 2)
        s = sp.csr_matrix((vals, (rows, cols)), shape=(self.ncells, self.ncells))
        self._scalar_stiff = s
        return s

    def scalar_fisher(self, f):
        """sum_faces vol (df/h)^2 for a cell field, same stencil as the stiffness."""
        f = np.asarray(f, dtype=float).reshape(self.nx, self.ny)
        total = 0.0
        if self.bc == PERIODIC:
            total += np.sum((np.roll(f, -1, axis=0) - f) ** 2) * self.vol / self.dx ** 2
            total += np.sum((np.roll(f, -1, axis=1) - f) ** 2) * self.vol / self.dy ** 2
        else:
            total += np.sum((f[1:, :] - f[:-1, :]) ** 2) * self.vol / self.dx ** 2
            total += np.sum((f[:, 1:] - f[:, :-1]) ** 2) * self.vol / self.dy ** 2
        return float(total)

    def scalar_flux_convection(self, coeff_u, coeff_v):
        """Centered flux-form convection matrix C with

            phi^T C psi = - sum_faces c_f mean(psi) (phi_downwind - phi_upwind)

        where c_f is the face coefficient (velocity times transported-weight
        times face area).  Columns sum to zero, so testing with phi = 1
        yields exact conservation; for constant coefficients and a discretely
        divergence-free face velocity the matrix is skew-symmetric.
        """
        rows, cols, vals = [], [], []

        def add_face(a, b, c):
            # contribution -c * 0.5(psi_a + psi_b)(phi_b - phi_a)
            rows.extend([b, b, a, a])
            cols.extend([a, b, a, b])
            vals.extend([-0.5 * c, -0.5 * c, 0.5 * c, 0.5 * c])

        cu = np.asarray(coeff_u, dtype=float).reshape(self.ushape)
        cv = np.asarray(coeff_v, dtype=float).reshape(self.vshape)
        for i in range(self.nx):
            for j in range(self.ny):
                if self.bc == PERIODIC:
                    a = self.cidx(i, j)
                    b = self.cidx(i + 1, j)
                    add_face(a, b, cu[(i + 1) % self.nx, j] * self.dy)
                    b = self.cidx(i, j + 1)
                    add_face(a, b, cv[i, (j + 1) % self.ny] * self.dx)
                else:
                    if i + 1 < self.nx:
                        add_face(self.cidx(i, j), self.cidx(i + 1, j),
                                 cu[i, j] * self.dy)   # face index i+1 stored at i
                    if j + 1 < self.ny:
                        add_face(self.cidx(i, j), self.cidx(i, j + 1),
                                 cv[i, j] * self.dx)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.ncells, self.ncells))


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def export_cell_field_csv(path, grid, field, name="value"):
    """Flat CSV of a cell-centered field: x_cell, y_cell, value."""
    field = np.asarray(field).reshape(grid.nx, grid.ny)
    with open(path, "w") as fh:
        fh.write(f"x_cell,y_cell,{name}\n")
        for i in range(grid.nx):
            for j in range(grid.ny):
                fh.write(f"{i},{j},{field[i, j]:.17g}\n")


def export_kinetic_field_csv(path, grid, cfg, field):
    """Flat CSV of a kinetic field; index order follows the header."""
    field = np.asarray(field).reshape(grid.ncells, cfg.nq)
    heads = []
    for i in range(cfg.K):
        heads.extend([f"q{i + 1}_radial", f"q{i + 1}_angular"])
    with open(path, "w") as fh:
        fh.write("x_cell,y_cell," + ",".join(heads) + ",value\n")
        locs = [(cfg.nr, cfg.ntheta)] * cfg.K
        for c in range(grid.ncells):
            ix, iy = divmod(c, grid.ny)
            for k in range(cfg.nq):
                rem = k
                idxs = []
                for (nr, nt) in reversed(locs):
                    rem, node = divmod(rem, nr * nt)
                    kr, kt = divmod(node, nt)
                    idxs = [str(kr), str(kt)] + idxs
                fh.write(f"{ix},{iy}," + ",".join(idxs)
                         + f",{field[c, k]:.17g}\n")


def export_velocity_csv(path, grid, w):
    """Flat CSV of the cell-centered velocity: x_cell, y_cell, u, v."""
    uc, vc = grid.cell_centered_velocity(w)
    with open(path, "w") as fh:
        fh.write("x_cell,y_cell,u,v\n")
        for i in range(grid.nx):
            for j in range(grid.ny):
                fh.write(f"{i},{j},{uc[i, j]:.17g},{vc[i, j]:.17g}\n")
