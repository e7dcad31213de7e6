"""Regression pins for the certified continuum limits and the numeric cross-check."""
import numpy as np
import pytest

from qla.crosscheck import CROSSCHECK_CASES, DefectTable, numeric_crosscheck
from qla.series import atom
from qla.verify import verify_kdv, verify_maxwell


def psi():
    return atom("q0") + atom("q1")


def test_nonunitary_certifies_exactly():
    rep = verify_kdv("NonUnitaryPotential")
    assert rep.passed
    assert rep.to_text().rstrip().endswith("result: PASS")


def test_v1_residual_is_the_coefficient_gradient_term():
    rep = verify_kdv("UnitaryV1")
    (comp,) = rep.components
    assert [bool(r) for r in comp.residuals] == [False, False, False, True, False]
    assert comp.residuals[3] == atom("m1", 1) * psi() * -2
    assert rep.passed_constant_coefficients


def test_v2_residuals():
    rep = verify_kdv("UnitaryV2")
    (comp,) = rep.components
    assert comp.residuals[3] == atom("m1", 1) * atom("q0") * 4
    # the -4 m1 psi_x term is reproduced: the exact residual above has no m1 * d_x q part
    assert comp.residuals[4] == atom("m1", 1) * atom("q1", 1) * -2 - atom("m1", 2) * atom("q1")


@pytest.fixture(scope="module")
def maxwell():
    return verify_maxwell()


def test_maxwell_resolution(maxwell):
    assert maxwell.resolution == ("VY", "component-list")
    assert maxwell.constant_coefficient == [("VY", "component-list"), ("VY_negsin", "component-list")]
    text = maxwell.to_text()
    assert "resolved V_Y row-3 form: VY" in text
    assert "resolved q5 sign: component-list" in text


def test_maxwell_printed_row_fails_at_order_zero(maxwell):
    rep = maxwell.reports[("VY_printed", "component-list")]
    q3 = next(c for c in rep.components if c.name == "q3")
    assert q3.residuals[0]


def test_maxwell_low_and_third_orders_vanish(maxwell):
    for c in maxwell.report.components:
        assert not c.residuals[0] and not c.residuals[1] and not c.residuals[3]


def test_maxwell_leftover_terms_carry_index_gradients(maxwell):
    for c in maxwell.report.components:
        for mono, _ in c.residuals[2]:
            assert any(a.base.startswith("nu_") and (a.dx or a.dy) for a in mono)


def test_crosscheck_constant_field_has_no_defect():
    from qla.crosscheck import TrigField, _kdv_case, _kdv_series

    fields = {"q0": TrigField(0.3, ()), "q1": TrigField(-0.2, ()), "m1": TrigField(0.5, ())}
    assert _kdv_case(0.04, fields, _kdv_series()) < 1e-13


@pytest.mark.parametrize("case", sorted(CROSSCHECK_CASES))
def test_crosscheck_slope_five(case):
    table = numeric_crosscheck(case)
    assert isinstance(table, DefectTable)
    assert abs(table.slope - 5.0) <= 0.3, table.to_text()
