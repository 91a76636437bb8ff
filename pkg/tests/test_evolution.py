from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from kplump.evolution import (
    EvolutionConfig,
    EvolutionTrace,
    box_extrapolate,
    d_of_c,
    energy_norm,
    evolve,
    hamiltonian,
    initial_data,
    lump_c,
    mass,
    orbital_distance,
    periodic_lump,
    random_shape,
    scaled_lump,
    stability_experiment,
    step,
    travelling_wave_error,
)
from kplump.spectral import GridField, GridSpec

G = GridSpec(24.0, 24.0, 96, 96)


def test_zero_stays_zero():
    u = GridField(G, np.zeros((96, 96)))
    assert not np.any(step(u, EvolutionConfig(G, 0.01, 1.0)).values)


def test_linear_mode_phase():
    X, Y = G.mesh()
    xi, eta = 3 * np.pi / G.Lx, 2 * np.pi / G.Ly
    w = xi ** 3 + eta ** 2 / xi
    eps, dt, n = 1e-6, 0.02, 10
    u = evolve(eps * np.cos(xi * X + eta * Y), G, dt, n * dt, stride=n)
    exact = eps * np.cos(xi * X + eta * Y + w * n * dt)
    assert np.max(np.abs(u - exact)) < 10 * eps ** 2


def test_evolve_needs_whole_steps():
    with pytest.raises(ValueError):
        evolve(np.zeros((96, 96)), G, 0.03, 0.1)


def test_energy_norm_examples():
    X, _ = G.mesh()
    a = np.pi / G.Lx
    u = GridField(G, np.sin(a * X))
    assert energy_norm(u) == pytest.approx((1 + a * a) * G.area / 2, rel=1e-12)
    assert energy_norm(GridField(G, 2 * u.values)) == pytest.approx(4 * energy_norm(u), rel=1e-13)
    assert energy_norm(GridField(G, np.zeros((96, 96)))) == 0
    assert hamiltonian(GridField(G, np.zeros((96, 96)))) == 0


def test_hamiltonian_box_cauchy():
    vals = []
    for L in (40, 60, 80):
        g = GridSpec(L, L, 4 * L, 4 * L)
        vals.append(hamiltonian(GridField(g, lump_c(g))))
    d1, d2 = abs(vals[1] - vals[0]), abs(vals[2] - vals[1])
    assert d2 <= d1 / 2


def test_mass_of_lump_box_limit():
    vals, Ls = [], (40, 60, 80)
    for L in Ls:
        g = GridSpec(L, L, 4 * L, 4 * L)
        vals.append(mass(GridField(g, lump_c(g))))
    # int Q^2 over the plane is 8 pi / 3 (polar coordinates, closed form)
    assert box_extrapolate(Ls, vals) == pytest.approx(8 * np.pi / 3, rel=1e-5)


def test_scaled_lump_matches_closed_form():
    for c in (0.5, 1.3, 2.0):
        assert np.max(np.abs(lump_c(G, c) - scaled_lump(G, c))) < 1e-13


def test_random_shape_normalized():
    p = random_shape(G, seed=4)
    assert np.sqrt(np.sum(p ** 2) * G.cell) == pytest.approx(1.0, rel=1e-12)
    assert np.max(np.abs(p.mean(axis=0))) < 1e-12
    assert np.array_equal(p, random_shape(G, seed=4))


# -- orbital distance ----------------------------------------------------------

G2 = GridSpec(20.0, 20.0, 128, 128)


def test_lattice_shift_is_exact():
    q = lump_c(G2)
    d, g1, g2 = orbital_distance(GridField(G2, np.roll(q, 3, axis=0)))
    assert d <= 1e-10
    assert g1 == pytest.approx(3 * 2 * G2.Lx / G2.Nx, abs=1e-10)
    assert g2 == pytest.approx(0.0, abs=1e-10)


def test_distance_shift_invariant():
    q = lump_c(G2)
    u = q + 1e-3 * random_shape(G2, seed=1)
    d0 = orbital_distance(GridField(G2, u))[0]
    d1 = orbital_distance(GridField(G2, np.roll(np.roll(u, 5, axis=0), -2, axis=1)))[0]
    assert abs(d0 - d1) <= 1e-10


def test_subgrid_shift():
    X, Y = G2.mesh()
    r = (X - 0.3) ** 2 + Y ** 2 + 3
    u = 4 * (Y ** 2 - (X - 0.3) ** 2 + 3) / r ** 2
    _, g1, g2 = orbital_distance(GridField(G2, u))
    assert g1 == pytest.approx(0.3, abs=1e-5)
    assert abs(g2) < 1e-8


def test_first_order_translation():
    X, Y = G2.mesh()
    r = X ** 2 + Y ** 2 + 3
    qx = -8 * X / r ** 2 - 16 * (Y ** 2 - X ** 2 + 3) * X / r ** 3
    eps = 1e-3
    d, g1, _ = orbital_distance(GridField(G2, lump_c(G2) + eps * qx))
    assert d <= eps * np.sqrt(energy_norm(GridField(G2, qx)))
    # Q + eps Q_x = Q(x + eps) to first order: the lump sits at -eps
    assert g1 == pytest.approx(-eps, rel=1e-2)


# -- experiments ---------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        EvolutionConfig(G, 0.01, 1.0, ("random", 0.1))
    with pytest.raises(ValueError):
        EvolutionConfig(G, -0.01, 1.0)
    with pytest.raises(ValueError):
        EvolutionConfig(G, 0.01, 1.0, ("bump", 1e-3))
    with pytest.raises(ValueError):
        EvolutionConfig(G, 0.01, 1.0, base="other")


def test_periodic_lump_is_travelling_wave():
    g = GridSpec(24.0, 24.0, 128, 128)
    q = periodic_lump(g)
    u = evolve(q, g, 0.005, 0.4, stride=80)
    # translate q by t = 0.4 spectrally
    xi, _ = g.wavenumbers()
    shifted = np.fft.irfft2(np.fft.rfft2(q) * np.exp(-1j * xi * 0.4), s=q.shape)
    assert np.max(np.abs(u - shifted)) < 1e-6
    assert np.max(np.abs(q - lump_c(g))) < 2e-2  # box correction, small against max Q = 4/3


def test_mass_rescale():
    cfg = EvolutionConfig(G, 0.02, 0.2, ("random", 1e-2), mass_rescale=True)
    q = lump_c(G)
    u = initial_data(cfg, q)
    assert np.sum(u ** 2) == pytest.approx(np.sum(q ** 2), rel=1e-13)


def test_stability_trace_outputs(tmp_path):
    cfg = EvolutionConfig(G, 0.02, 0.4, ("random", 1e-3), stride=5)
    tr = stability_experiment(cfg)
    n = len(tr.times)
    assert n == 5
    assert all(len(getattr(tr, s)) == n for s in ("mass", "hamiltonian", "orbital_distance", "gamma1", "gamma2"))
    assert np.all(np.isfinite(tr.orbital_distance))
    tr.write_csv(tmp_path / "t.csv")
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows[0] == ["t", "mass", "hamiltonian", "orbital_distance", "gamma1", "gamma2"]
    assert len(rows) == n + 1
    tr.write_sidecar(tmp_path / "t.json")
    meta = json.loads((tmp_path / "t.json").read_text())
    assert meta["schema_version"] == 1 and meta["normalization"] == "raw"
    assert meta["max_linear_phase"] > 0
    # deterministic given config and seed
    assert stability_experiment(cfg).orbital_distance == tr.orbital_distance


def test_blowup_recorded():
    cfg = EvolutionConfig(G, 0.02, 0.2, blowup_cap=1.0, base="closed_form")
    tr = stability_experiment(cfg)
    assert tr.aborted is not None


def test_unwrapped_speed():
    tr = EvolutionTrace(times=[0, 1, 2, 3], gamma1=[18.0, 19.0, -20.0, -19.0], meta={"grid": {"Lx": 20.0}})
    assert tr.fitted_speed() == pytest.approx(1.0)


def test_dt_convergence_small():
    g = GridSpec(20.0, 20.0, 128, 128)
    ref = evolve(lump_c(g), g, 0.0025, 0.5, stride=200)
    e1 = np.max(np.abs(evolve(lump_c(g), g, 0.02, 0.5, stride=25) - ref))
    e2 = np.max(np.abs(evolve(lump_c(g), g, 0.01, 0.5, stride=50) - ref))
    assert e1 / e2 >= 12


def test_travelling_wave_error_shrinks_with_box():
    e = [travelling_wave_error(GridSpec(L, L, 8 * L, 8 * L), 0.02, 0.2) for L in (24, 40)]
    assert e[1] < e[0]


# -- d(c) --------------------------------------------------------------------


def test_dc_table():
    box = GridSpec(40, 40, 160, 160)
    tab = d_of_c(np.linspace(0.5, 2, 7), box)
    assert tab.convex
    assert tab.profile_scaling_error < 1e-13
    assert all(x > 0 for x in tab.d)
    data = tab.to_json()
    assert data["kind"] == "d_of_c" and len(data["c"]) == 7
    with pytest.raises(ValueError):
        d_of_c([1.0, 2.0], box)


def test_mass_scaling_with_scaled_boxes():
    # int u_c^2 = sqrt(c) int Q^2 exactly when the box scales with the profile
    m = []
    for c in (0.5, 1.0, 2.0):
        g = GridSpec(40 / np.sqrt(c), 40 / c, 256, 256)
        m.append(np.sum(lump_c(g, c) ** 2) * g.cell)
    for c, v in zip((0.5, 1.0, 2.0), m):
        assert v / m[1] == pytest.approx(np.sqrt(c), abs=1e-4)


def test_box_extrapolate_exact_for_power_law():
    Ls = [40.0, 60.0, 80.0]
    assert box_extrapolate(Ls, [3 + 5 / L ** 2 for L in Ls]) == pytest.approx(3.0, rel=1e-13)
