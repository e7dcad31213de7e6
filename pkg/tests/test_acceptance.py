"""Acceptance suite: one PASS/FAIL line per criterion, printed and collected in the terminal summary."""
import csv
import json
import math

import numpy as np
import pytest

from qla import LocalOperator, l2_norm
from qla.crosscheck import numeric_crosscheck
from qla.kdv import KdvScheme
from qla.maxwell import MaxwellScheme, RefractiveIndexField
from qla.verify import verify_kdv, verify_maxwell

from conftest import record, run_cli

SOLITON_AMPLITUDE = 0.375  # 3c / a with a = 4, c = 0.5


def _failing(rep):
    return "; ".join(f"{name} eps^{k}: {poly}" for name, orders in rep.failing().items() for k, poly in orders.items())


# symbolic certification --------------------------------------------------------------------

@pytest.mark.parametrize("variant,label", [
    ("UnitaryV1", "KdV UnitaryV1 continuum limit certifies exactly"),
    ("UnitaryV2", "KdV UnitaryV2 continuum limit certifies exactly"),
    ("NonUnitaryPotential", "KdV non-unitary continuum limit certifies exactly"),
])
def test_kdv_certification(variant, label):
    rep = verify_kdv(variant)
    detail = "all residuals zero" if rep.passed else "residuals " + _failing(rep)
    if not rep.passed and rep.passed_constant_coefficients:
        detail += " (passes for constant m)"
    record(label, rep.passed, detail)
    assert rep.passed


def test_maxwell_certification():
    mv = verify_maxwell()
    detail = (f"exact readings {mv.exact}; constant-n readings {mv.constant_coefficient}; "
              f"resolved {mv.resolution}")
    if not mv.passed:
        detail += "; residuals " + _failing(mv.report)
    record("Maxwell step certifies at eps^2 under exactly one reading", mv.passed, detail)
    assert mv.passed


# numeric versus symbolic ---------------------------------------------------------------------

@pytest.mark.parametrize("case", ["kdv-v1", "maxwell-vacuum"])
def test_crosscheck_slope(case):
    table = numeric_crosscheck(case)
    ok = abs(table.slope - 5.0) <= 0.3
    record(f"one-step defect slope vs series ({case})", ok,
           f"slope {table.slope:.3f} over eps {table.eps} (target 5.0 +- 0.3)")
    assert ok


# soliton -------------------------------------------------------------------------------------

SOLITON_TOML = """\
problem = "kdv"
variant = "UnitaryV1"
a = 4.0
epsilon = 0.05
N = 4096
t_end = 10.0
cadence = 4000

[initial]
kind = "soliton"
c = 0.5

[converge]
eps = [0.08, 0.056, 0.04]
t_end = 10.0
length = 64.0
"""


@pytest.fixture(scope="module")
def soliton_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("soliton")
    (d / "soliton.toml").write_text(SOLITON_TOML)
    r = run_cli(["kdv", "run", "soliton.toml", "-o", "run"], d, timeout=1800)
    assert r.returncode == 0, r.stderr
    with open(d / "run/diagnostics.csv", newline="") as fh:
        rows = [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]
    return d, rows


def test_soliton_speed(soliton_run):
    _, rows = soliton_run
    t = np.array([r["time"] for r in rows])
    peak = np.array([r["peak"] for r in rows])
    speed = float(np.polyfit(t, peak, 1)[0])
    rel = abs(speed - 0.5) / 0.5
    ok = rel <= 0.02 and t[-1] == pytest.approx(10.0)
    record("soliton peak speed within 2% of c", ok, f"measured {speed:.5f} vs 0.5 (rel {rel:.2e}), T = {t[-1]:g}")
    assert ok


def test_soliton_shape(soliton_run):
    _, rows = soliton_run
    err = rows[-1]["linf_error"]
    ok = err <= 0.05 * SOLITON_AMPLITUDE
    record("soliton shape error at T = 10 within 5% of amplitude", ok,
           f"Linf {err:.3e} = {err / SOLITON_AMPLITUDE:.2%} of {SOLITON_AMPLITUDE}")
    assert ok


def test_soliton_convergence_order(soliton_run):
    d, _ = soliton_run
    r = run_cli(["kdv", "converge", "soliton.toml", "-o", "conv"], d, timeout=3600)
    assert r.returncode == 0, r.stderr
    order = json.loads((d / "conv/manifest.json").read_text())["fitted_order"]
    with open(d / "conv/convergence.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    errs = ", ".join(f"{float(x['eps']):g}: {float(x['linf_error']):.3e}" for x in rows)
    ok = abs(order - 2.0) <= 0.3
    record("soliton convergence order at fixed T", ok, f"fitted {order:.3f} (target 2.0 +- 0.3); {errs}")
    assert ok


# unitarity -----------------------------------------------------------------------------------

def test_unitarity_suite(rng):
    notes, ok = [], True
    for name, labels in (("C", ("alpha",)), ("CX", ("theta1", "theta2")), ("CY", ("theta0", "theta2"))):
        op = LocalOperator(name, {l: rng.uniform(-math.pi, math.pi, 1000) for l in labels})
        d = max(op.orthogonality_defect(1000), op.T.orthogonality_defect(1000))
        ok &= d <= 1e-13
        notes.append(f"{name} {d:.1e}")

    for variant in ("UnitaryV1", "UnitaryV2"):
        s = KdvScheme(variant, 0.05, 64)
        q = rng.standard_normal((2, 64))
        drift = abs(l2_norm(s.advance(q, 10_000, workers=1)) / l2_norm(q) - 1)
        ok &= drift <= 1e-12
        notes.append(f"{variant} drift {drift:.1e}")
    s = MaxwellScheme(0.1, RefractiveIndexField.uniform((16, 16), 1.5))
    q = rng.standard_normal((6, 256))
    drift = abs(l2_norm(s.advance(q, 10_000, workers=1)) / l2_norm(q) - 1)
    ok &= drift <= 1e-12
    notes.append(f"maxwell uniform-n drift {drift:.1e}")

    for name, labels in (("VX", ("beta0", "beta2")), ("VY", ("beta1", "beta3"))):
        d = LocalOperator(name, {l: 0.3 for l in labels}).orthogonality_defect(1)
        ok &= d > 1e-2
        notes.append(f"{name}(beta=0.3) non-orthogonality {d:.2f}")
    record("unitarity suite", ok, "; ".join(notes))
    assert ok


# determinism ---------------------------------------------------------------------------------

def test_determinism_across_workers(tmp_path):
    cfg = ["maxwell", "run", "--set", "Nx=48", "--set", "Ny=40", "--steps", "200", "--cadence", "20",
           "--set", 'index={profile="tanh-interface", n1=1.0, n2=1.6, center=2.4, width=0.3, axis=0}']
    blobs = {}
    for w in (1, 2, 8):
        r = run_cli(cfg + ["--workers", str(w), "-o", f"w{w}"], tmp_path)
        assert r.returncode == 0, r.stderr
        blobs[w] = (tmp_path / f"w{w}/diagnostics.csv").read_bytes()
    ok = blobs[1] == blobs[2] == blobs[8]
    nrows = blobs[1].count(b"\n") - 1
    record("diagnostics.csv bitwise identical for 1, 2, 8 workers", ok,
           f"{len(blobs[1])} bytes each, {nrows} rows")
    assert ok
