import math

import numpy as np
import pytest

from beadspring import grids, laws


@pytest.fixture(scope="module")
def cfg_fene():
    return grids.ConfigGrid([laws.SpringLaw("fene", 4.0)], nr=12, ntheta=16)


@pytest.fixture(scope="module")
def cfg_hookean():
    return grids.ConfigGrid([laws.SpringLaw("hookean")], nr=12, ntheta=16)


# ---------------------------------------------------------------------------
# configuration grid
# ---------------------------------------------------------------------------

def test_maxwellian_normalization(cfg_fene, cfg_hookean):
    assert abs(np.sum(cfg_fene.w) - 1.0) <= 1e-14
    assert abs(np.sum(cfg_hookean.w) - 1.0) <= 1e-14


def test_quadrature_refinement_stability():
    for law in (laws.SpringLaw("fene", 4.0), laws.SpringLaw("cpail", 9.0),
                laws.SpringLaw("hookean")):
        z1 = laws.partition_constant(law, laws.maxwellian_rule(law, 12))
        z2 = laws.partition_constant(law, laws.maxwellian_rule(law, 24))
        assert abs(z1 / z2 - 1.0) <= 1e-10


def test_moment_tensor_identity(cfg_fene, cfg_hookean):
    for cfg in (cfg_fene, cfg_hookean):
        m = cfg.moment_tensor(0)
        assert np.max(np.abs(m - np.eye(2))) <= 1e-8
        assert abs(m[0, 1]) <= 1e-10 and abs(m[1, 0]) <= 1e-10


def test_weighted_inner_product(cfg_hookean):
    one = np.ones((1, cfg_hookean.nq))
    qx = cfg_hookean.qx[0][None, :]
    assert grids.weighted_inner_product(cfg_hookean, one, one) == \
        pytest.approx(1.0, abs=1e-12)
    assert abs(grids.weighted_inner_product(cfg_hookean, one, qx)) <= 1e-14
    assert grids.weighted_inner_product(cfg_hookean, qx, qx) == \
        pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        grids.weighted_inner_product(cfg_hookean, one, np.ones((1, 3)))


def test_q_diffusion_form(cfg_hookean):
    rouse = laws.rouse_linear_chain(1)
    nq = cfg_hookean.nq
    const = np.full((1, nq), 2.7)
    rng = np.random.default_rng(0)
    phi = rng.normal(size=(1, nq))
    assert abs(grids.q_diffusion_form(cfg_hookean, const, phi, rouse, 1.0)) \
        <= 1e-10
    qx = cfg_hookean.qx[0][None, :]
    assert grids.q_diffusion_form(cfg_hookean, qx, qx, rouse, 1.0) == \
        pytest.approx(0.5, abs=1e-10)
    # symmetry and coercivity
    psi = rng.normal(size=(1, nq))
    v1 = grids.q_diffusion_form(cfg_hookean, psi, phi, rouse, 1.0)
    v2 = grids.q_diffusion_form(cfg_hookean, phi, psi, rouse, 1.0)
    assert v1 == pytest.approx(v2, rel=1e-11)
    quad = grids.q_diffusion_form(cfg_hookean, psi, psi, rouse, 1.0)
    iso = cfg_hookean.iso_fisher(psi, 1.0) / 4.0
    assert quad >= rouse.a0 * iso - 1e-9


def test_q_diffusion_rouse_coupling_k2():
    fene = laws.SpringLaw("fene", 4.0)
    cfg = grids.ConfigGrid([fene, fene], nr=8, ntheta=8)
    rouse = laws.rouse_linear_chain(2)
    rng = np.random.default_rng(1)
    psi = rng.normal(size=(1, cfg.nq))
    quad = grids.q_diffusion_form(cfg, psi, psi, rouse, 1.0)
    iso = cfg.iso_fisher(psi, 1.0) / 4.0
    assert quad >= rouse.a0 * iso - 1e-8
    assert abs(np.sum(cfg.w) - 1.0) <= 1e-12
    for i in range(2):
        assert np.max(np.abs(cfg.moment_tensor(i) - np.eye(2))) <= 1e-8


def test_integration_by_parts(cfg_fene, cfg_hookean):
    b = np.array([[0.0, 1.0], [0.0, 0.0]])
    phi = cfg_hookean.qx[0] * cfg_hookean.qy[0]
    assert grids.integration_by_parts_check(cfg_hookean, b, phi) <= 1e-10
    # both sides equal the Gaussian moment <q_y^2> = 1
    gx, gy = cfg_hookean.grad_q(phi[None, :], 0)
    lhs = float(np.sum(cfg_hookean.w * cfg_hookean.qy[0] * gx[0]))
    assert lhs == pytest.approx(1.0, abs=1e-10)
    # constant test function: both sides vanish
    assert grids.integration_by_parts_check(
        cfg_fene, b, np.ones(cfg_fene.nq)) <= 1e-12
    with pytest.raises(ValueError):
        grids.integration_by_parts_check(cfg_fene, np.eye(2), phi)


def test_integration_by_parts_randomized(cfg_fene, cfg_hookean):
    rng = np.random.default_rng(3)
    for cfg in (cfg_fene, cfg_hookean):
        qx, qy = cfg.qx[0], cfg.qy[0]
        for _ in range(100):
            b = rng.normal(size=(2, 2))
            b[1, 1] = -b[0, 0]
            c = rng.normal(size=6)
            phi = (c[0] + c[1] * qx + c[2] * qy + c[3] * qx * qy
                   + c[4] * qx ** 2 + c[5] * qy ** 2)
            assert grids.integration_by_parts_check(cfg, b, phi) <= 1e-8


# ---------------------------------------------------------------------------
# MAC grid
# ---------------------------------------------------------------------------

def test_rate_of_strain_examples():
    g = grids.PhysGrid(16, 16, bc="noslip")
    dxx, dyy, dxy = g.rate_of_strain(g.zeros_velocity())
    assert np.max(np.abs(dxx)) == 0.0 and np.max(np.abs(dxy)) == 0.0
    xu, yu = g.uface_coords()
    xv, yv = g.vface_coords()
    shear = g.join(yu, np.zeros_like(xv))
    dxx, dyy, dxy = g.rate_of_strain(shear)
    inner = np.s_[2:-2, 2:-2]
    np.testing.assert_allclose(dxx[inner], 0.0, atol=1e-13)
    np.testing.assert_allclose(dxy[inner], 0.5, atol=1e-13)
    rot = g.join(-yu, xv)
    dxx, dyy, dxy = g.rate_of_strain(rot)
    np.testing.assert_allclose(dxx[inner], 0.0, atol=1e-13)
    np.testing.assert_allclose(dxy[inner], 0.0, atol=1e-13)


def test_strain_trace_is_divergence():
    rng = np.random.default_rng(5)
    for bc in ("periodic", "noslip"):
        g = grids.PhysGrid(10, 12, bc=bc)
        w = rng.normal(size=g.ndof)
        dxx, dyy, _ = g.rate_of_strain(w)
        np.testing.assert_allclose(dxx + dyy, g.divergence(w), atol=1e-12)


def test_discrete_divergence_theorem():
    rng = np.random.default_rng(6)
    for bc in ("periodic", "noslip"):
        g = grids.PhysGrid(12, 8, bc=bc)
        w = rng.normal(size=g.ndof)
        total = float(np.sum(g.divergence(w))) * g.vol
        assert abs(total) <= 1e-12


def test_scalar_stiffness_matches_fisher():
    rng = np.random.default_rng(8)
    for bc in ("periodic", "noslip"):
        g = grids.PhysGrid(9, 7, bc=bc)
        f = rng.normal(size=g.ncells)
        s = g.scalar_stiffness()
        assert float(f @ (s @ f)) == pytest.approx(g.scalar_fisher(f),
                                                   rel=1e-12)
        assert abs(float(np.ones(g.ncells) @ (s @ f)))  <= 1e-12


def test_flux_convection_conservation_and_skewness():
    rng = np.random.default_rng(9)
    g = grids.PhysGrid(8, 8, bc="periodic")
    from beadspring import momentum
    w, _, _ = momentum.smooth_initial_velocity(g, np.ones((8, 8)),
                                               rng.normal(size=g.ndof), 0.01)
    cu, cv = g.split(w)
    c = g.scalar_flux_convection(cu, cv)
    # testing with 1 never creates or destroys mass
    col = np.abs(np.ones(g.ncells) @ c)
    assert float(np.max(col)) <= 1e-13
    # constant-coefficient + divergence-free advecting field: skew
    skew = (c + c.T).toarray()
    assert np.max(np.abs(skew)) <= 1e-12


def test_kinetic_export_csv(tmp_path, cfg_hookean):
    g = grids.PhysGrid(2, 2, bc="periodic")
    field = np.arange(g.ncells * cfg_hookean.nq, dtype=float).reshape(
        g.ncells, cfg_hookean.nq)
    path = tmp_path / "field.csv"
    grids.export_kinetic_field_csv(path, g, cfg_hookean, field)
    lines = path.read_text().splitlines()
    assert lines[0] == "x_cell,y_cell,q1_radial,q1_angular,value"
    assert len(lines) == 1 + g.ncells * cfg_hookean.nq
