import math

import numpy as np
import pytest

from qla import AmplitudeField, ConfigError, LocalOperator, l2_norm, parse_program
from qla.crosscheck import _atom_values, _maxwell_fields
from qla.lattice import CompiledProgram
from qla.maxwell import (
    EmFields,
    IndexProfile,
    MaxwellScheme,
    RefractiveIndexField,
    build_cx,
    build_cy,
    build_vx,
    build_vy,
    em_diagnostics,
    encode_em,
    gaussian_pulse,
    load_index_grid,
    plane_wave,
    reconstruct_em,
    save_index_grid,
    step,
)
from qla.oracles import maxwell_1d_spectral
from qla.schemes import MAXWELL_UX, MAXWELL_UY, executed
from qla.series import Atom
from qla.verify import maxwell_increment


def random_index(rng, dims, lo=0.6, hi=2.5):
    return RefractiveIndexField(rng.uniform(lo, hi, (3, *dims)), rng.uniform(-1, 1, (3, 2, *dims)))


# operators ------------------------------------------------------------------------------

def test_vacuum_angles():
    s = MaxwellScheme(0.08, RefractiveIndexField.uniform((8, 8)))
    for k in ("theta0", "theta1", "theta2"):
        np.testing.assert_array_equal(s.angles[k], 0.02)
    for k in ("beta0", "beta1", "beta2", "beta3"):
        assert not s.angles[k].any()


def test_equal_components_give_equal_thetas(rng):
    n = rng.uniform(1, 2, (6, 5))
    s = MaxwellScheme(0.05, RefractiveIndexField(np.stack([n, n, n])))
    np.testing.assert_array_equal(s.angles["theta1"], s.angles["theta2"])


def test_zero_theta_is_identity():
    for name, labels in (("CX", ("theta1", "theta2")), ("CY", ("theta0", "theta2"))):
        m = LocalOperator(name, {l: 0.0 for l in labels}).matrices(1)[0]
        assert np.array_equal(m, np.eye(6))


def test_collisions_orthogonal_random_media(rng):
    s = MaxwellScheme(0.3, random_index(rng, (12, 9)))
    for op in (build_cx(s), build_cy(s)):
        assert op.orthogonality_defect(108) <= 1e-13


def test_sparsity_patterns(rng):
    s = MaxwellScheme(0.3, random_index(rng, (4, 4)))
    cx = build_cx(s).matrices(16)[0] != 0
    cy = build_cy(s).matrices(16)[0] != 0
    assert sorted(zip(*np.nonzero(cx))) == sorted(
        [(0, 0), (1, 1), (1, 5), (2, 2), (2, 4), (3, 3), (4, 2), (4, 4), (5, 1), (5, 5)])
    assert sorted(zip(*np.nonzero(cy))) == sorted(
        [(0, 0), (0, 5), (1, 1), (2, 2), (2, 3), (3, 2), (3, 3), (4, 4), (5, 0), (5, 5)])


def test_homogeneous_potentials_are_identity():
    s = MaxwellScheme(0.05, RefractiveIndexField.uniform((6, 6), 1.7))
    for op in (build_vx(s), build_vy(s)):
        np.testing.assert_array_equal(op.matrices(36), np.broadcast_to(np.eye(6), (36, 6, 6)))


def test_vx_row_five_at_pi_over_six():
    m = LocalOperator("VX", {"beta0": math.pi / 6, "beta2": 0.0}).matrices(1)[0]
    np.testing.assert_allclose(m[5], [0, 0.5, 0, 0, 0, math.sqrt(3) / 2], atol=1e-15)
    assert np.max(np.abs(m @ m.T - np.eye(6))) > 0.1


def test_vy_row_three_identity_at_zero_and_non_orthogonal():
    m = LocalOperator("VY", {"beta1": 0.0, "beta3": 0.0}).matrices(1)[0]
    np.testing.assert_array_equal(m[3], np.eye(6)[3])
    m = LocalOperator("VY", {"beta1": 0.3, "beta3": -0.2}).matrices(1)[0]
    assert np.max(np.abs(m @ m.T - np.eye(6))) > 0.01


# stepping ------------------------------------------------------------------------------------

def test_vacuum_zero_field_stays_zero():
    s = MaxwellScheme(0.05, RefractiveIndexField.uniform((8, 8)))
    assert not step(s, AmplitudeField.zeros((8, 8), 6, 0.05), 20).data.any()


def test_vacuum_norm_drift_long_run(rng):
    s = MaxwellScheme(0.05, RefractiveIndexField.uniform((32, 32)))
    q = rng.standard_normal((6, 1024))
    out = s.advance(q, 10_000, workers=1)
    assert abs(l2_norm(out) / l2_norm(q) - 1) <= 1e-12


def test_homogeneous_non_vacuum_energy_constant(rng):
    s = MaxwellScheme(0.05, RefractiveIndexField.uniform((16, 16), 1.4))
    f = AmplitudeField(rng.standard_normal((6, 16, 16)), 0.05)
    e0 = em_diagnostics(f, s)["energy"]
    e1 = em_diagnostics(step(s, f, 2000), s)["energy"]
    assert abs(e1 / e0 - 1) <= 1e-12


@pytest.mark.parametrize("polarization", ["y", "z"])
def test_vacuum_pulse_advection_second_order(polarization):
    errs = []
    for eps in (0.08, 0.04):
        n = int(round(6.4 / eps))
        f = gaussian_pulse((n, 4), eps, 3.2, 0.5, polarization=polarization)
        s = MaxwellScheme(eps, RefractiveIndexField.uniform((n, 4)))
        steps = int(round(1.0 / s.dt))
        out = step(s, f, steps).data
        ref = maxwell_1d_spectral(f.data[:, :, 0], n * eps, steps * s.dt)
        errs.append(np.max(np.abs(out - ref[:, :, None])))
        # moving right at unit speed: the peak sits near x0 + t
        comp = 1 if polarization == "y" else 2
        assert eps * np.argmax(out[comp, :, 0]) == pytest.approx(3.2 + steps * s.dt, abs=2 * eps)
    assert 3.0 <= errs[0] / errs[1] <= 5.0, errs


def test_plane_wave_encodings():
    f = plane_wave((16, 4), 0.1, 1, 2.0, "y")
    assert np.array_equal(f.data[1], f.data[5]) and not f.data[[0, 2, 3, 4]].any()
    g = plane_wave((16, 4), 0.1, 1, 2.0, "z")
    assert np.array_equal(g.data[2], -g.data[4])
    with pytest.raises(ConfigError):
        plane_wave((16, 4), 0.1, polarization="x")


def _one_step_defect(eps, fields, inc2):
    n = int(round(2.56 / eps))
    x, y = np.meshgrid(eps * np.arange(n), eps * np.arange(n), indexing="ij")
    vals = _atom_values(fields, x, y)
    nu = np.stack([vals[Atom(f"nu_{a}")] for a in "xyz"])
    grad = np.stack([
        np.stack([-vals[Atom(f"nu_{a}", 1, 0)] / nu[i] ** 2, -vals[Atom(f"nu_{a}", 0, 1)] / nu[i] ** 2])
        for i, a in enumerate("xyz")
    ])
    s = MaxwellScheme(eps, RefractiveIndexField(1.0 / nu, grad))
    q = np.stack([vals[Atom(f"q{i}")] for i in range(6)])
    out = s.advance(q.reshape(6, -1), 1, workers=1).reshape(q.shape)
    pred = np.stack([q[i] + eps ** 2 * inc2[i].evaluate(vals) for i in range(6)])
    return float(np.max(np.abs(out - pred)))


@pytest.mark.parametrize("vacuum", [True, False])
def test_one_step_defect_against_certified_rhs(vacuum):
    series, _ = maxwell_increment("VY")
    inc2 = [series[f"q{i}"][2] for i in range(6)]
    fields = _maxwell_fields(vacuum)
    d = [_one_step_defect(e, fields, inc2) for e in (0.04, 0.02)]
    assert 16 * 0.7 <= d[0] / d[1] <= 16 * 1.3, d


def _mirror(q, sign=(1, 1, 1, -1, -1, -1), perm=(1, 0, 2, 4, 3, 5)):
    return np.stack([sign[i] * q[perm[i]].T for i in range(6)])


def test_xy_mirror_symmetry(rng):
    # reflection across the diagonal: E and H components swap roles, H flips sign
    nx_, ny_ = 12, 10
    index = random_index(rng, (nx_, ny_), 0.8, 1.6)
    mirrored = RefractiveIndexField(np.stack([index.n[1].T, index.n[0].T, index.n[2].T]))
    eps = 0.2
    sx = MaxwellScheme(eps, index)
    sy = MaxwellScheme(eps, mirrored)
    ux = CompiledProgram(executed(parse_program(MAXWELL_UX, axis=0)), (nx_, ny_), 6)
    uy = CompiledProgram(executed(parse_program(MAXWELL_UY, axis=1)), (ny_, nx_), 6)
    q = rng.standard_normal((6, nx_, ny_))
    a = ux.run_flat(q.reshape(6, -1), ux.bind(sx.operators), 1).reshape(6, nx_, ny_)
    b = uy.run_flat(_mirror(q).reshape(6, -1), uy.bind(sy.operators), 1).reshape(6, ny_, nx_)
    np.testing.assert_allclose(b, _mirror(a), rtol=0, atol=1e-14)


def test_nan_abort_carries_step():
    from qla import NumericAbort

    # beta0 = pi/4 makes V_X row 5 equal (q1 + q5) / sqrt(2), which overflows here
    eps = 0.5
    grad = np.zeros((3, 2, 4, 4))
    grad[1, 0] = (math.pi / 4) / eps ** 2
    s = MaxwellScheme(eps, RefractiveIndexField(np.ones((3, 4, 4)), grad))
    q = np.zeros((6, 16))
    q[1], q[5] = 1.5e308, 1.5e308
    with pytest.raises(NumericAbort) as exc:
        s.advance(q, 5, workers=1, start=10)
    assert exc.value.step == 11
    assert np.array_equal(exc.value.last_good, q)


# fields and diagnostics ----------------------------------------------------------------------------

def test_reconstruct_vacuum_is_identity(rng):
    s = MaxwellScheme(0.1, RefractiveIndexField.uniform((4, 4)))
    f = AmplitudeField(rng.standard_normal((6, 4, 4)), 0.1)
    em = reconstruct_em(f, s)
    assert np.array_equal(em.E, f.data[:3]) and np.array_equal(em.H, f.data[3:])


def test_reconstruct_scales_by_index():
    n = np.ones((3, 4, 4))
    n[0] = 2.0
    q = np.zeros((6, 4, 4))
    q[0] = 2.0
    em = reconstruct_em(AmplitudeField(q, 0.1), RefractiveIndexField(n))
    assert np.all(em.E[0] == 1.0)


def test_encode_reconstruct_round_trip(rng):
    idx = random_index(rng, (9, 7))
    f = AmplitudeField(rng.standard_normal((6, 9, 7)), 0.1)
    back = encode_em(reconstruct_em(f, idx), idx, 0.1)
    rel = np.max(np.abs(back.data - f.data) / np.maximum(np.abs(f.data), 1e-300))
    assert rel <= 1e-15


def test_index_floor():
    with pytest.raises(ConfigError):
        RefractiveIndexField(np.full((3, 4, 4), 1e-4))
    with pytest.raises(ConfigError):
        RefractiveIndexField(np.full((3, 4, 4), 0.5), floor=0.6)


def test_em_diagnostics_zero_field():
    s = MaxwellScheme(0.1, RefractiveIndexField.uniform((4, 4)))
    rec = em_diagnostics(AmplitudeField.zeros((4, 4), 6, 0.1), s)
    assert all(v == 0.0 for v in rec.values())


def _te_field(eps, n):
    # E = (d_y phi, -d_x phi, 0), H = (0, 0, h): divergence-free in the continuum
    k = 2 * math.pi / (n * eps)
    x, y = np.meshgrid(eps * np.arange(n), eps * np.arange(n), indexing="ij")
    q = np.zeros((6, n, n))
    q[0] = k * np.sin(k * x) * np.cos(k * y)
    q[1] = -k * np.cos(k * x) * np.sin(k * y)
    q[5] = np.cos(k * x + 2 * k * y)
    return AmplitudeField(q, eps)


def test_divergence_residual_second_order():
    worst = []
    for eps in (0.08, 0.04):
        n = int(round(2.56 / eps))
        s = MaxwellScheme(eps, RefractiveIndexField.uniform((n, n)))
        f = _te_field(eps, n)
        w = 0.0
        for _ in range(4):
            f = step(s, f, int(round(0.125 / s.dt)))
            rec = em_diagnostics(f, s)
            w = max(w, rec["div_d"], rec["div_b"])
        worst.append(w)
    assert 3.0 <= worst[0] / worst[1] <= 5.0, worst


# index profiles and grids ---------------------------------------------------------------------------

@pytest.mark.parametrize("kind,params", [
    ("uniform", {"n": 1.3}),
    ("linear-ramp", {"n0": 1.0, "slope": 0.2, "axis": 1}),
    ("tanh-interface", {"n1": 1.0, "n2": 1.5, "center": 1.0, "width": 0.3, "axis": 0}),
    ("gaussian-lens", {"n0": 1.0, "dn": 0.4, "x0": 1.0, "y0": 0.8, "sigma": 0.4}),
])
def test_profile_derivatives_match_finite_differences(kind, params):
    p = IndexProfile(kind, params)
    x, y = np.meshgrid(np.linspace(0, 2, 9), np.linspace(0, 2, 9), indexing="ij")
    n, nx, ny = p.evaluate(x, y)
    h = 1e-6
    np.testing.assert_allclose(nx, (p.evaluate(x + h, y)[0] - p.evaluate(x - h, y)[0]) / (2 * h), atol=1e-7)
    np.testing.assert_allclose(ny, (p.evaluate(x, y + h)[0] - p.evaluate(x, y - h)[0]) / (2 * h), atol=1e-7)


def test_unknown_profile():
    with pytest.raises(ConfigError):
        IndexProfile("parabolic", {})


def test_central_difference_mode_close_to_analytic():
    p = IndexProfile("gaussian-lens", {"n0": 1.0, "dn": 0.3, "x0": 1.6, "y0": 1.6, "sigma": 0.5})
    idx = RefractiveIndexField.from_profiles((64, 64), 0.05, p)
    a = MaxwellScheme(0.05, idx, "analytic").angles
    c = MaxwellScheme(0.05, idx, "central-difference").angles
    for k in ("beta0", "beta1", "beta2", "beta3"):
        assert np.max(np.abs(a[k] - c[k])) <= 0.05 * np.max(np.abs(a[k]))


def test_index_grid_round_trip(tmp_path, rng):
    n = rng.uniform(1, 2, (3, 6, 5))
    save_index_grid(tmp_path / "n.bin", n)
    raw = (tmp_path / "n.bin").read_bytes()
    assert np.frombuffer(raw[:12], "<i4").tolist() == [6, 5, 3]
    back = load_index_grid(tmp_path / "n.bin")
    assert np.array_equal(back.n, n) and back.grad is None
    save_index_grid(tmp_path / "one.bin", n[0])
    assert np.array_equal(load_index_grid(tmp_path / "one.bin").n, np.stack([n[0]] * 3))


def test_index_grid_bad_file(tmp_path):
    (tmp_path / "bad.bin").write_bytes(b"\x04\x00\x00\x00" * 3 + b"\x00" * 8)
    with pytest.raises(ConfigError):
        load_index_grid(tmp_path / "bad.bin")
