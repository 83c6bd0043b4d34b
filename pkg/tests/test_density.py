import math

import numpy as np
import pytest

from beadspring import density, grids, laws, momentum


def random_solenoidal(grid, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    w, _, _ = momentum.smooth_initial_velocity(
        grid, np.ones((grid.nx, grid.ny)), scale * rng.normal(size=grid.ndof),
        0.01)
    return w


def test_constants_transported_exactly():
    g = grids.PhysGrid(12, 12, bc="periodic")
    w = random_solenoidal(g, 1)
    rho = np.full((12, 12), 1.2)
    slab = density.advance_density(g, rho, w, 0.1)
    np.testing.assert_array_equal(slab.rho_end, rho)
    np.testing.assert_array_equal(slab.rho_avg, rho)


def test_zero_velocity():
    g = grids.PhysGrid(8, 8, bc="noslip")
    rng = np.random.default_rng(2)
    rho = 1.0 + rng.random((8, 8))
    slab = density.advance_density(g, rho, g.zeros_velocity(), 0.3)
    np.testing.assert_array_equal(slab.rho_end, rho)
    np.testing.assert_array_equal(slab.rho_avg, rho)


def test_nan_rejected():
    g = grids.PhysGrid(4, 4, bc="noslip")
    rho = np.ones((4, 4))
    rho[0, 0] = math.nan
    with pytest.raises(ValueError):
        density.advance_density(g, rho, g.zeros_velocity(), 0.1)


def test_translation_with_refinement():
    errs, ratios = [], None
    for n in (32, 64):
        g = grids.PhysGrid(n, n, bc="periodic")
        xc, _ = g.cell_centers()

        def bump(x):
            d = np.minimum(np.abs(x - 0.5), 1.0 - np.abs(x - 0.5))
            return 1.0 + np.exp(-(d / 0.15) ** 2)

        rho0 = bump(xc)
        w = g.join(np.ones(g.ushape), np.zeros(g.vshape))
        dt = 0.25
        slab = density.advance_density(g, rho0, w, dt)
        ref = bump((xc - dt) % 1.0)
        errs.append(g.vol * float(np.sum(np.abs(slab.rho_end - ref))))
    assert errs[0] / errs[1] >= 1.5       # first-order decay


def test_exact_bound_preservation_random_velocity():
    rng = np.random.default_rng(3)
    for bc in ("periodic", "noslip"):
        g = grids.PhysGrid(10, 10, bc=bc)
        w = random_solenoidal(g, 4, scale=3.0)
        rho = 1.0 + 2.0 * rng.random((10, 10))
        lo, hi = float(rho.min()), float(rho.max())
        for _ in range(5):
            slab = density.advance_density(g, rho, w, 0.05)
            rho = slab.rho_end
            assert float(rho.min()) >= lo
            assert float(rho.max()) <= hi
            assert float(slab.snapshots.min()) >= lo
            assert float(slab.snapshots.max()) <= hi


def test_mass_conservation():
    g = grids.PhysGrid(14, 10, bc="noslip")
    rng = np.random.default_rng(5)
    rho = 1.0 + rng.random((14, 10))
    w = random_solenoidal(g, 6, scale=2.0)
    m0 = density.total_mass(g, rho)
    for _ in range(10):
        slab = density.advance_density(g, rho, w, 0.04)
        rho = slab.rho_end
        assert abs(density.total_mass(g, rho) / m0 - 1.0) <= 1e-13


def test_lp_monotonicity():
    g = grids.PhysGrid(12, 12, bc="periodic")
    rng = np.random.default_rng(7)
    rho = 1.0 + rng.random((12, 12))
    w = random_solenoidal(g, 8, scale=2.0)
    for p in (1, 2, math.inf):
        n_prev = density.lp_norm(g, rho, p)
        r = rho
        for _ in range(5):
            slab = density.advance_density(g, r, w, 0.05)
            r = slab.rho_end
            n_new = density.lp_norm(g, r, p)
            assert n_new <= n_prev * (1.0 + 1e-13)
            n_prev = n_new


def test_cfl_substeps():
    g = grids.PhysGrid(16, 16, bc="periodic")
    w = g.join(np.full(g.ushape, 2.0), np.zeros(g.vshape))
    m = density.cfl_substeps(g, w, 0.5)
    assert m == math.ceil(2.0 * 0.5 * 2.0 / (1.0 / 16.0))


def test_response_averages_constant_zeta():
    g = grids.PhysGrid(8, 8, bc="noslip")
    curves = laws.ResponseCurves.constant(mu=2.0, zeta=1.0, rho_min=0.5,
                                          rho_max=3.0)
    rng = np.random.default_rng(9)
    rho = 1.0 + rng.random((8, 8))
    w = random_solenoidal(g, 10)
    slab = density.advance_density(g, rho, w, 0.1)
    resp = density.eval_response_averages(slab, curves)
    np.testing.assert_array_equal(resp.zeta_avg, np.ones((8, 8)))
    np.testing.assert_array_equal(resp.zeta_end, np.ones((8, 8)))
    np.testing.assert_array_equal(resp.mu_end, np.full((8, 8), 2.0))


def test_response_averages_at_rho_min():
    g = grids.PhysGrid(4, 4, bc="noslip")
    curves = laws.ResponseCurves(np.array([1.0, 2.0]), np.array([1.0, 3.0]),
                                 np.array([0.5, 1.5]))
    rho = np.ones((4, 4))
    slab = density.advance_density(g, rho, g.zeros_velocity(), 0.1)
    resp = density.eval_response_averages(slab, curves)
    np.testing.assert_array_equal(resp.zeta_end, np.full((4, 4), 0.5))
    np.testing.assert_array_equal(resp.zeta_avg, np.full((4, 4), 0.5))


def test_response_average_is_time_average_of_zeta():
    # with zeta linear and rho exactly linear in time, the trapezoidal slab
    # average equals the arithmetic mean of the endpoint values
    g = grids.PhysGrid(8, 4, bc="periodic")
    curves = laws.ResponseCurves(np.array([0.5, 4.0]), np.array([1.0, 1.0]),
                                 np.array([0.5, 4.0]))   # zeta(rho) = rho
    rng = np.random.default_rng(11)
    r0 = 1.0 + rng.random((8, 4))
    r1 = 1.0 + rng.random((8, 4))
    m = 8
    snaps = np.array([r0 + (r1 - r0) * k / m for k in range(m + 1)])
    slab = density.DensitySlab(rho_prev=r0, rho_end=r1,
                               rho_avg=snaps.mean(axis=0), dt=0.1,
                               substeps=m, snapshots=snaps)
    resp = density.eval_response_averages(slab, curves)
    np.testing.assert_allclose(resp.zeta_avg, 0.5 * (r0 + r1), rtol=1e-13)
    # nonlinear zeta: the average of the curve, not the curve of the average
    curves2 = laws.ResponseCurves(np.array([0.5, 2.0, 4.0]),
                                  np.array([1.0, 1.0, 1.0]),
                                  np.array([0.5, 3.0, 3.5]))
    resp2 = density.eval_response_averages(slab, curves2)
    trap = (0.5 * curves2.zeta(snaps[0]) + curves2.zeta(snaps[1:-1]).sum(axis=0)
            + 0.5 * curves2.zeta(snaps[-1])) / m
    np.testing.assert_allclose(resp2.zeta_avg, trap, rtol=1e-13)


def test_out_of_range_density_rejected():
    curves = laws.ResponseCurves.constant(rho_min=1.0, rho_max=2.0)
    g = grids.PhysGrid(4, 4, bc="noslip")
    slab = density.advance_density(g, np.full((4, 4), 3.0),
                                   g.zeros_velocity(), 0.1)
    with pytest.raises(ValueError):
        density.eval_response_averages(slab, curves)
