from __future__ import annotations

import json
from fractions import Fraction

import numpy as np
import pytest

from kplump.spectral import (
    POSCHL_TELLER,
    GridField,
    GridSpec,
    LinearizedOperator,
    OperatorSpec,
    apply_L,
    bn0_finite_difference,
    bn_spectrum,
    build_potential,
    eigensolve,
    indicial_roots,
    lift_to_bilinear_kernel,
    period_y,
    qk_grid,
    symmetry_defect,
)

SMALL = GridSpec(20.0, 20.0, 64, 64)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(10, 10, 63, 64)
    with pytest.raises(ValueError):
        GridSpec(-1, 10, 64, 64)
    with pytest.raises(ValueError):
        GridField(SMALL, np.full((64, 64), np.nan))
    with pytest.raises(ValueError):
        GridField(SMALL, np.zeros((32, 64)))


def test_transform_roundtrip():
    v = np.random.default_rng(1).standard_normal((64, 64))
    f = GridField(SMALL, v)
    back = GridField.inverse(SMALL, f.forward()).values
    assert np.max(np.abs(back - v)) <= 1e-12 * np.max(np.abs(v))


def test_potentials():
    Q = build_potential(OperatorSpec("lump", SMALL)).values
    i0, j0 = 32, 32  # x = y = 0 on the grid
    assert SMALL.x[i0] == 0 and SMALL.y[j0] == 0
    assert Q[i0, j0] == pytest.approx(4 / 3, rel=1e-14)
    assert not np.any(build_potential(OperatorSpec("free", SMALL)).values)
    g = qk_grid(Fraction(5, 13), 20.0, 64, 32)
    assert (2 * g.Ly) / period_y(Fraction(5, 13)) == pytest.approx(1.0, rel=1e-14)
    V = build_potential(OperatorSpec("qk", g, Fraction(5, 13))).values
    X, Y = g.mesh()
    k, b = 5 / 13, 12 / 13
    a = np.sqrt((1 - 4 * k * k) / (1 - k * k))
    g_ = np.cosh(k * X) + a * np.cos(k * b * Y)
    want = 2 * k * k * (np.cosh(k * X) * g_ - np.sinh(k * X) ** 2) / g_ ** 2
    assert np.max(np.abs(V - want)) < 1e-12


def test_operator_spec_validation():
    with pytest.raises(ValueError):
        OperatorSpec("qk", SMALL, Fraction(1, 2))
    with pytest.raises(ValueError):
        OperatorSpec("qk", SMALL)
    with pytest.raises(ValueError):
        OperatorSpec("soliton", SMALL)


def test_non_pythagorean_k_warns():
    g = qk_grid(Fraction(1, 3), 20.0, 32, 16)
    with pytest.warns(UserWarning):
        build_potential(OperatorSpec("qk", g, Fraction(1, 3)))


def test_free_single_modes():
    spec = OperatorSpec("free", SMALL)
    X, Y = SMALL.mesh()
    a, b = np.pi / SMALL.Lx, np.pi / SMALL.Ly
    phi = np.sin(a * X)
    out, removed = apply_L(spec, GridField(SMALL, phi))
    assert removed < 1e-12
    assert np.max(np.abs(out.values - (a * a + 1) * phi)) < 1e-12
    phi = np.sin(a * X) * np.sin(b * Y)
    out, _ = apply_L(spec, GridField(SMALL, phi))
    assert np.max(np.abs(out.values - (a * a + 1 + b * b / (a * a)) * phi)) < 1e-12


def test_apply_reports_projection():
    spec = OperatorSpec("free", SMALL)
    _, removed = apply_L(spec, GridField(SMALL, np.ones((64, 64))))
    assert removed == pytest.approx(np.sqrt(SMALL.area), rel=1e-12)


def test_symmetry():
    op = LinearizedOperator(OperatorSpec("lump", SMALL))
    assert symmetry_defect(op) <= 1e-10


def test_free_has_no_negative_eigenvalue():
    rep = eigensolve(OperatorSpec("free", GridSpec(10, 10, 32, 32)), 4, "dense")
    assert rep.morse_index == 0
    assert min(rep.eigenvalues) >= 1 - 1e-12


def test_dense_and_krylov_agree():
    spec = OperatorSpec("lump", SMALL)
    d = eigensolve(spec, 8, "dense")
    k = eigensolve(spec, 8, "krylov")
    assert np.max(np.abs(np.array(d.eigenvalues) - np.array(k.eigenvalues))) <= 1e-7
    assert max(k.residuals) <= 1e-8


def test_dense_limit():
    with pytest.raises(ValueError):
        eigensolve(OperatorSpec("free", GridSpec(10, 10, 256, 256)), 2, "dense")


def test_report_serialization(tmp_path):
    rep = eigensolve(OperatorSpec("lump", GridSpec(20, 20, 48, 48)), 4, "krylov", keep_vectors=True)
    data = json.loads(json.dumps(rep.to_json()))
    assert data["schema_version"] == 1
    assert data["params"]["grid"] == {"Lx": 20, "Ly": 20, "Nx": 48, "Ny": 48}
    assert data["morse_index"] == sum(v < -data["zero_band"] for v in data["eigenvalues"])
    assert len(data["near_zero"]) == sum(abs(v) <= data["zero_band"] for v in data["eigenvalues"])
    rep.dump_eigenvectors(tmp_path)
    side = json.loads((tmp_path / "eigvecs.json").read_text())
    first = tmp_path / side["vectors"][0]["file"]
    arr = np.fromfile(first, dtype="<f8").reshape(48, 48)
    assert np.allclose(arr, rep.eigenvectors[0])


def test_lump_census_small():
    rep = eigensolve(OperatorSpec("lump", GridSpec(40, 40, 192, 192)), 6)
    assert rep.morse_index == 1
    assert len(rep.near_zero) == 2
    assert rep.translation_overlap >= 0.999
    assert rep.eigenvalues[0] == pytest.approx(-2.34, abs=0.02)


def test_translation_residual_is_large_but_rayleigh_small():
    """The pointwise residual of L on the translation modes stays O(1) on a box.

    It is dominated by the seam of the periodic box; the Rayleigh quotient,
    which measures the actual eigenvalue shift, is orders of magnitude smaller
    and shrinks as the box grows.
    """
    ray = []
    for L, N in [(30, 128), (40, 192)]:
        op = LinearizedOperator(OperatorSpec("lump", GridSpec(L, L, N, N)))
        assert max(op.translation_residuals()) > 1e-3
        ray.append(max(abs(r) for r in op.translation_rayleigh()))
    assert ray[1] < ray[0] < 0.05


# -- one-dimensional modes -----------------------------------------------------


def test_bn0_poschl_teller():
    vals = bn_spectrum(0, 60, 2048, 3)
    assert np.max(np.abs(np.array(vals) - np.array(POSCHL_TELLER))) <= 1e-3
    fd = bn0_finite_difference(60, 4096, 3)
    assert fd[0] == pytest.approx(-1.25, abs=1e-3)


def test_bn1_zero_mode_no_negative():
    vals = bn_spectrum(1, 60, 2048, 4)
    assert min(vals) >= -1e-3
    assert abs(vals[0]) <= 1e-3


@pytest.mark.parametrize("n", [2, 3])
def test_bn_positive(n):
    assert min(bn_spectrum(n, 60, 2048, 4)) > 0


# -- roots ------------------------------------------------------------------


def test_eta_eq_roots_at_soliton_endpoint():
    r = indicial_roots("eta_eq", Fraction(1, 2))
    assert r["agrees"]
    assert r["plus"] == pytest.approx([-0.5, 0.5], abs=1e-14)


@pytest.mark.parametrize("k", ["5/13", "24/145"])
def test_eta_eq_and_reverse(k):
    assert indicial_roots("eta_eq", k)["agrees"]
    r = indicial_roots("reverse_ode", k)
    kf = float(Fraction(k))
    b = np.sqrt(1 - kf * kf)
    assert r["agrees"]
    assert sorted(r["roots"]) == pytest.approx(sorted([-kf / 2, kf / 2, -1.5 * b / np.sqrt(3)]), abs=1e-12)


def test_kernel_decay_closed_form_agrees():
    for n in range(1, 9):
        r = indicial_roots("kernel_decay", "5/13", n)
        assert r["agrees"]
        # gamma^4 - gamma^2 + (k b n / 2)^2 vanishes at every root
        c = (5 / 13 * 12 / 13 * n / 2) ** 2
        for z in r["roots"]:
            z = complex(*z) if isinstance(z, list) else z
            assert abs(z ** 4 - z ** 2 + c) < 1e-12


def test_roots_reject_bad_input():
    with pytest.raises(ValueError):
        indicial_roots("kernel_decay", "5/13")
    with pytest.raises(ValueError):
        indicial_roots("reverse_ode", "1/2")
    with pytest.raises(ValueError):
        indicial_roots("other", "5/13")


# -- kernel lift ------------------------------------------------------------


def test_lift_comparative():
    g = GridSpec(40, 40, 256, 256)
    X, Y = g.mesh()
    r = X ** 2 + Y ** 2 + 3
    Q = 4 * (Y ** 2 - X ** 2 + 3) / r ** 2
    Qx = -8 * X / r ** 2 - 16 * (Y ** 2 - X ** 2 + 3) * X / r ** 3
    _, res_kernel, edge = lift_to_bilinear_kernel(GridField(g, Qx), tail=Q[0])
    _, res_q, _ = lift_to_bilinear_kernel(GridField(g, Q))
    assert edge < 2e-4
    assert res_q >= 100 * res_kernel


def test_lift_converges_with_box():
    res = []
    for L, N in [(30, 192), (40, 256)]:
        g = GridSpec(L, L, N, N)
        X, Y = g.mesh()
        r = X ** 2 + Y ** 2 + 3
        Q = 4 * (Y ** 2 - X ** 2 + 3) / r ** 2
        Qx = -8 * X / r ** 2 - 16 * (Y ** 2 - X ** 2 + 3) * X / r ** 3
        res.append(lift_to_bilinear_kernel(GridField(g, Qx), tail=Q[0])[1])
    assert res[1] < res[0]
