from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from kplump.cli import main


@pytest.fixture()
def run():
    runner = CliRunner()

    def _run(*args):
        return runner.invoke(main, [str(a) for a in args], catch_exceptions=False)

    return _run


def test_help_lists_every_flag(run):
    r = run("spectrum", "--help")
    assert r.exit_code == 0
    for flag in ("--potential", "--k", "--Lx", "--Ly", "--Nx", "--Ny", "--neigs", "--method", "--json",
                 "--dump-eigvecs"):
        assert flag in r.output


def test_unknown_flag_is_usage_error(run):
    assert run("spectrum", "--bogus").exit_code == 2
    assert run("nosuch").exit_code == 2


def test_verify_lump(run, tmp_path):
    out = tmp_path / "r.json"
    r = run("verify", "--suite", "lump", "--json", out)
    assert r.exit_code == 0
    data = json.loads(out.read_text())
    assert data["schema_version"] == 1
    assert data["counts"]["fail"] == 0 and data["counts"]["pass"] >= 20


def test_verify_props(run):
    assert run("verify", "--suite", "props", "--ctx", "1,5").exit_code == 0


def test_verify_mutation_fails(run):
    r = run("verify", "--suite", "lump", "--mutate", "1")
    assert r.exit_code == 1
    assert "FAIL" in r.output


def test_verify_all_reports_failures(run):
    # stated table entries and reverse-system displays disagree with recomputation
    assert run("verify", "--suite", "all").exit_code == 1


def test_verify_bad_ctx(run):
    assert run("verify", "--ctx", "1,2").exit_code == 2
    assert run("verify", "--ctx", "x").exit_code == 2
    assert run("verify", "--mutate", "9999").exit_code == 2


def test_verify_list(run):
    r = run("verify", "--suite", "lump", "--list")
    assert r.exit_code == 0 and "bilinear" in r.output


def test_spectrum_free(run, tmp_path):
    out = tmp_path / "s.json"
    r = run("spectrum", "--potential", "free", "--Lx", 10, "--Nx", 32, "--neigs", 4, "--method", "dense",
            "--json", out)
    assert r.exit_code == 0
    data = json.loads(out.read_text())
    assert data["morse_index"] == 0 and data["kind"] == "spectrum"


def test_spectrum_qk_defaults_to_one_period(run, tmp_path):
    out = tmp_path / "s.json"
    r = run("spectrum", "--potential", "qk", "--k", "5/13", "--Lx", 20, "--Nx", 96, "--Ny", 32, "--neigs", 4,
            "--json", out, "--dump-eigvecs", tmp_path / "vec")
    assert r.exit_code == 0
    data = json.loads(out.read_text())
    from kplump.spectral import period_y

    assert 2 * data["params"]["grid"]["Ly"] == pytest.approx(period_y(5 / 13))
    assert (tmp_path / "vec" / "eigvecs.json").exists()


def test_spectrum_argument_errors(run):
    assert run("spectrum", "--potential", "qk").exit_code == 2
    assert run("spectrum", "--potential", "qk", "--k", "0.6").exit_code == 2
    assert run("spectrum", "--potential", "qk", "--k", "abc").exit_code == 2
    assert run("spectrum", "--Nx", 33).exit_code == 2
    assert run("spectrum", "--method", "dense", "--Nx", 256).exit_code == 2


def test_non_pythagorean_k_warns(run):
    with pytest.warns(UserWarning):
        r = run("spectrum", "--potential", "qk", "--k", "1/3", "--Lx", 20, "--Nx", 64, "--Ny", 16,
                "--neigs", 3)
    assert r.exit_code == 0


def test_convergence_failure_exit_code(run, monkeypatch):
    from kplump import spectral

    def boom(*a, **k):
        raise spectral.ConvergenceError("forced")

    monkeypatch.setattr(spectral, "eigensolve", boom)
    assert run("spectrum", "--potential", "free", "--Nx", 16).exit_code == 3


def test_bn(run, tmp_path):
    out = tmp_path / "b.json"
    r = run("bn", "--n", 0, "--L", 60, "--N", 2048, "--neigs", 3, "--json", out)
    assert r.exit_code == 0
    assert json.loads(out.read_text())["eigenvalues"][0] == pytest.approx(-1.25, abs=1e-3)
    assert run("bn", "--n", 0, "--L", 10).exit_code == 2


def test_roots(run):
    assert run("roots", "--which", "reverse_ode", "--k", "5/13").exit_code == 0
    assert run("roots", "--which", "eta_eq", "--k", "24/145").exit_code == 0
    # the decay claim |Re| > k fails for n = 1 (min |Re| = 0.18 < 5/13)
    assert run("roots", "--which", "kernel_decay", "--k", "5/13", "--n", 1).exit_code == 1
    assert run("roots", "--which", "kernel_decay", "--k", "5/13").exit_code == 2


def test_evolve(run, tmp_path):
    csv_path, js = tmp_path / "t.csv", tmp_path / "t.json"
    r = run("evolve", "--Lx", 24, "--Nx", 64, "--dt", 0.02, "--T", 0.2, "--csv", csv_path, "--json", js)
    assert r.exit_code == 0
    assert csv_path.read_text().startswith("t,mass,hamiltonian,orbital_distance,gamma1,gamma2")
    meta = json.loads(js.read_text())
    assert meta["kind"] == "evolution" and meta["config"]["seed"] == 0
    assert run("evolve", "--eps", 0.1).exit_code == 2
    assert run("evolve", "--dt", 0.03, "--T", 0.1, "--Nx", 32).exit_code == 2


def test_dc(run, tmp_path):
    data = tmp_path / "dc.dat"
    r = run("dc", "--L", 30, "--N", 96, "--steps", 5, "--data", data)
    assert r.exit_code == 0
    assert "convex: True" in r.output
    assert len(data.read_text().splitlines()) == 5
    assert run("dc", "--cmin", 2, "--cmax", 1).exit_code == 2


def test_config_file(run, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"spectrum": {"potential": "free", "nx": 16, "lx": 5.0, "method": "dense",
                                            "neigs": 2}}))
    out = tmp_path / "s.json"
    r = run("--config", cfg, "spectrum", "--json", out)
    assert r.exit_code == 0
    data = json.loads(out.read_text())
    assert data["params"]["grid"]["Nx"] == 16 and data["params"]["potential"] == "free"
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert run("--config", bad, "spectrum").exit_code == 2
