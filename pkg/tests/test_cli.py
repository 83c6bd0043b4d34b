import os

import numpy as np
import pytest

from beadspring import cli, stepper


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_minimal_config_gets_defaults(tmp_path):
    cfg = cli.parse_config(write(tmp_path, "[domain]\nnx = 8\n"))
    assert cfg.geti("domain", "nx") == 8
    assert cfg.geti("domain", "ny") == 16          # default
    assert cfg.get("polymer", "model") == "fene"
    assert cfg.getf("scheme", "l") == 10.0


def test_unknown_key_rejected(tmp_path):
    with pytest.raises(cli.ConfigError, match="dt"):
        cli.parse_config(write(tmp_path, "[scheme]\ndt = 0.1\n"))
    with pytest.raises(cli.ConfigError, match="weird"):
        cli.parse_config(write(tmp_path, "[weird]\nx = 1\n"))


def test_admissibility_checked_at_load(tmp_path):
    with pytest.raises(cli.ConfigError, match="inadmissible"):
        cli.parse_config(write(tmp_path, "[polymer]\nmodel = fene\nb = 2.0\n"))
    with pytest.raises(cli.ConfigError):
        cli.parse_config(write(tmp_path, "[domain]\nbc = slippy\n"))


def test_roundtrip(tmp_path):
    cfg = cli.parse_config(write(tmp_path,
                                 "[scheme]\nl = 7.5\nn = 42\n"
                                 "[fluid]\nrho0 = constant:1.25\n"))
    again = cli.parse_config(cli.print_config(cfg), is_text=True)
    assert again == cfg


def test_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("BEADSPRING_SCHEME_N", "3")
    monkeypatch.setenv("BEADSPRING_DOMAIN_NX", "4")
    cfg = cli.parse_config(write(tmp_path, "[scheme]\nn = 100\n"))
    assert cfg.geti("scheme", "n") == 3
    assert cfg.geti("domain", "nx") == 4


def test_linkage_derives_steps(tmp_path):
    cfg = cli.parse_config(write(
        tmp_path, "[scheme]\nlinkage_c0 = 0.1\nl = 10.0\nt = 1.0\n"))
    params = cli.build_params(cfg, cli.build_curves(cfg))
    assert params.dt == pytest.approx(0.004343, abs=2e-4)


def test_presets_load():
    for name in cli.PRESETS:
        cfg = cli.load_config(name)
        grid = cli.build_grid(cfg)
        assert grid.ncells >= 1


def test_build_pieces(tmp_path):
    cfg = cli.parse_config(write(tmp_path, """
[domain]
nx = 4
ny = 4
[polymer]
model = fene
b = 4.0
nr = 8
ntheta = 8
psi0 = cos-x:0.5
[fluid]
rho0 = cos-y:1.0,3.0
u0 = vortex:0.1
rho_min = 1.0
rho_max = 3.0
"""))
    grid = cli.build_grid(cfg)
    rho0 = cli.build_rho0(cfg, grid)
    assert rho0.min() >= 1.0 and rho0.max() <= 3.0
    qcfg = cli.build_config_grid(cfg)
    psi0 = cli.build_psi0(cfg, grid, qcfg)
    assert psi0.shape == (16, qcfg.nq)
    w = cli.build_u0(cfg, grid)
    assert w.shape == (grid.ndof,)


def test_prescribed_sigma_parse(tmp_path):
    cfg = cli.parse_config(write(
        tmp_path, "[scheme]\nprescribed_sigma = 0 1; 0 0\n"))
    sig = cli.build_sigma(cfg)
    np.testing.assert_array_equal(sig, [[0.0, 1.0], [0.0, 0.0]])


def test_simulate_writes_csv(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    text = cli.preset_path("equilibrium").read_text()
    cfg = cli.parse_config(text, is_text=True)
    cfg.values["scheme"]["n"] = "2"
    cfg.values["domain"]["nx"] = "4"
    cfg.values["domain"]["ny"] = "4"
    ledger, state, _ = cli.command_simulate(cfg, log=lambda *a: None)
    path = tmp_path / "equilibrium_diag.csv"
    assert path.exists()
    lines = path.read_text().splitlines()
    assert len(lines) == 4
    assert lines[0].startswith("step,t,kinetic_energy")


def test_exit_codes(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    bad = write(tmp_path, "[polymer]\nmodel = fene\nb = 2.0\n")
    assert cli.main(["simulate", "--config", bad]) == cli.EXIT_CONFIG
    assert cli.main(["simulate", "--config", "missing.cfg"]) == \
        cli.EXIT_CONFIG
    assert cli.main(["--threads", "0", "simulate", "--config", bad]) == \
        cli.EXIT_CONFIG
    ok = write(tmp_path, """
[domain]
nx = 4
ny = 4
[scheme]
n = 1
[output]
csv_path = out.csv
""", name="ok.cfg")
    assert cli.main(["simulate", "--config", ok]) == cli.EXIT_OK
    assert (tmp_path / "out.csv").exists()


def test_check_command_passes(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = cli.parse_config("[domain]\nnx = 4\nny = 4\n", is_text=True)
    failures = cli.command_check(cfg, seed=5, log=lambda *a: None)
    assert failures == []


def test_oracle_unknown():
    with pytest.raises(cli.ConfigError):
        cli.command_oracle("nonexistent", log=lambda *a: None)


def test_oracle_translation():
    assert cli.command_oracle("density-translation", log=lambda *a: None)
