import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qla.program import TEMPLATES, OperatorSequence, Stream, parse_program
from qla.schemes import kdv_program, kdv_series_angles, maxwell_series_angles
from qla.series import (
    INV_SQRT2,
    SQRT2,
    Atom,
    AtomPolynomial,
    DerivativeOverflow,
    ExactCoeff,
    TruncatedSeries,
    UnsupportedAngle,
    atom,
    expand_sequence,
    field_vector,
    series_add,
    series_mul,
    series_scale,
    stream_expand,
    trig_expand,
)
from qla.series.certify import certify_pde

S = TruncatedSeries
E = lambda poly, k=1: S.monomial(poly, k)  # noqa: E731


# exact coefficients --------------------------------------------------------------

def test_sqrt2_field_arithmetic():
    assert SQRT2 * SQRT2 == ExactCoeff(2)
    assert INV_SQRT2 * SQRT2 == ExactCoeff(1)
    x = ExactCoeff(Fraction(3, 7), Fraction(-2, 5))
    assert x * x.inverse() == ExactCoeff(1)
    assert abs(float(x) - (3 / 7 - 2 / 5 * math.sqrt(2))) < 1e-15


# ring laws ---------------------------------------------------------------------------

ATOMS = [Atom("q0"), Atom("q1"), Atom("q0", 1, 0), Atom("m1"), Atom("nu_x", 0, 1)]


@st.composite
def series(draw):
    terms = draw(st.lists(
        st.tuples(st.integers(0, 4), st.integers(-3, 3), st.lists(st.sampled_from(ATOMS), max_size=2),
                  st.integers(-2, 2)),
        max_size=4,
    ))
    out = S()
    for power, r, atoms, s in terms:
        poly = AtomPolynomial.constant(ExactCoeff(r, s))
        for a in atoms:
            poly = poly * atom(*a)
        out = out + S.monomial(poly, power)
    return out


@settings(max_examples=60, deadline=None)
@given(series(), series(), series())
def test_ring_laws(p, q, r):
    assert p + q == q + p
    assert p * q == q * p
    assert (p + q) + r == p + (q + r)
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r
    assert series_add(p, series_scale(p, -1)).is_zero()


def test_one_plus_minus_product():
    a = atom("q0")
    prod = series_mul(1 + E(a), 1 - E(a))
    assert prod == 1 - E(a * a, 2)


def test_mul_by_zero():
    assert (S.symbol("q0") * S()).is_zero()


def test_mul_truncates_at_order_four():
    x = E(atom("q0"), 3)
    assert (x * x).is_zero()


def test_canonical_form_independent_of_insertion_order():
    a, b, c = atom("q0"), atom("m1", 1), atom("nu_y", 0, 2)
    p1 = a * b * c + b * 2 + c
    p2 = c + (c * a) * b + b + b
    assert p1 == p2
    assert str(p1) == str(p2)


# trig_expand ---------------------------------------------------------------------------

def test_trig_expand_zero_angle():
    c, s = trig_expand(S())
    assert c == S.constant(1) and s.is_zero()


def test_trig_expand_maclaurin():
    g = atom("g")
    c, s = trig_expand(E(g))
    assert c == 1 - E(g * g * Fraction(1, 2), 2) + E(g * g * g * g * Fraction(1, 24), 4)
    assert s == E(g) - E(g * g * g * Fraction(1, 6), 3)


def test_trig_expand_quarter_offset_against_numeric(rng):
    c, s = trig_expand(E(atom("m1"), 2), "pi/4")
    expected = (1 - E(atom("m1"), 2) - E(atom("m1") * atom("m1") * Fraction(1, 2), 4)).scale(INV_SQRT2)
    assert c == expected
    for _ in range(20):
        m, eps = rng.uniform(-2, 2), rng.uniform(0.01, 0.2)
        vals = {Atom("m1"): m}
        assert abs(c.evaluate(vals, eps) - math.cos(math.pi / 4 + eps ** 2 * m)) <= 4 * (eps ** 2 * abs(m)) ** 3
        assert abs(s.evaluate(vals, eps) - math.sin(math.pi / 4 + eps ** 2 * m)) <= 4 * (eps ** 2 * abs(m)) ** 3


@pytest.mark.parametrize("angle,offset", [
    (E(atom("nu_x") * Fraction(1, 4)), "0"),
    (E(atom("nu_y", 1) * -1, 2), "0"),
    (E(atom("m1"), 2), "pi/4"),
    (E(atom("q0")) + E(atom("q1", 2), 3), "0"),
])
def test_trig_expand_pythagoras(angle, offset):
    c, s = trig_expand(angle, offset)
    assert c * c + s * s == S.constant(1)


def test_trig_expand_rejects_constant_term():
    with pytest.raises(UnsupportedAngle):
        trig_expand(S.constant(1))
    with pytest.raises(UnsupportedAngle):
        trig_expand(S(), "pi/3")


# stream_expand ---------------------------------------------------------------------------

def test_stream_expand_taylor():
    out = stream_expand([S.symbol("q0")], Stream((0,), 0, -1))[0]
    # new(x) = old(x + eps)
    expected = S.symbol("q0")
    for k in range(1, 5):
        expected = expected + E(atom("q0", k) * Fraction(1, math.factorial(k)), k)
    assert out == expected


def test_stream_expand_round_trip():
    vec = [S.symbol("q0") * S.symbol("nu_x"), S.symbol("q1") + E(atom("q0", 1, 1), 2)]
    for axis in (0, 1):
        fwd = stream_expand(vec, Stream((0, 1), axis, 1))
        assert stream_expand(fwd, Stream((0, 1), axis, -1)) == vec


def test_stream_expand_leaves_unlisted():
    vec = [S.symbol("q0"), S.symbol("q1")]
    assert stream_expand(vec, Stream((1,), 0, 1))[0] == vec[0]


def test_stream_expand_product_against_shifted_function():
    # q0 = sin(x), nu_x = exp(cos x): shift the product and compare with the function at x + eps
    x = 0.37
    f = lambda t: math.sin(t) * math.exp(math.cos(t))  # noqa: E731
    d = [math.sin(x), math.cos(x), -math.sin(x), -math.cos(x), math.sin(x)]
    e = [math.exp(math.cos(x))]
    # derivatives of exp(cos x) by central differences
    h = 1e-3
    g = lambda t: math.exp(math.cos(t))  # noqa: E731
    e += [
        (g(x + h) - g(x - h)) / (2 * h),
        (g(x + h) - 2 * g(x) + g(x - h)) / h ** 2,
        (g(x + 2 * h) - 2 * g(x + h) + 2 * g(x - h) - g(x - 2 * h)) / (2 * h ** 3),
        (g(x + 2 * h) - 4 * g(x + h) + 6 * g(x) - 4 * g(x - h) + g(x - 2 * h)) / h ** 4,
    ]
    vals = {Atom("q0", k): d[k] for k in range(5)}
    vals.update({Atom("nu_x", k): e[k] for k in range(5)})
    prod = stream_expand([S.symbol("q0") * S.symbol("nu_x")], Stream((0,), 0, -1))[0]
    errs = []
    for eps in (0.1, 0.05):
        errs.append(abs(prod.evaluate(vals, eps) - f(x + eps)))
    assert errs[1] < errs[0] / 20  # eps^5 truncation error (32x) up to finite-difference noise


def test_stream_expand_overflow():
    with pytest.raises(DerivativeOverflow):
        stream_expand([S.symbol("q0", 4)], Stream((0,), 0, 1))


# expand_sequence ---------------------------------------------------------------------------

def test_identity_sequence():
    vec = field_vector(2)
    assert expand_sequence(OperatorSequence(), vec, {}) == vec


def test_kdv_v1_low_orders_vanish():
    out = expand_sequence(kdv_program("UnitaryV1"), field_vector(2), kdv_series_angles("UnitaryV1"))
    psi_in = S.symbol("q0") + S.symbol("q1")
    inc = out[0] + out[1] - psi_in
    assert not inc[0]
    assert not inc[1] and not inc[2]


def test_two_step_maxwell_subsequence_first_order():
    seq = parse_program("S14+ CX", axis=0)
    out = expand_sequence(seq, field_vector(6), maxwell_series_angles())
    q = [atom(f"q{i}") for i in range(6)]
    ny, nz = atom("nu_y") * Fraction(1, 4), atom("nu_z") * Fraction(1, 4)
    expected = {
        0: AtomPolynomial(),
        1: atom("q1", 1) * -1 - ny * q[5],
        2: nz * q[4] * -1,
        3: AtomPolynomial(),
        4: atom("q4", 1) * -1 + nz * q[2],
        5: ny * q[1],
    }
    for i in range(6):
        assert out[i][0] == q[i]
        assert out[i][1] == expected[i], i


@pytest.mark.parametrize("name", ["C", "CX", "CY"])
def test_expanded_collisions_orthogonal(name):
    if name == "C":
        angles = kdv_series_angles("UnitaryV1")["C"]
    else:
        angles = maxwell_series_angles()[name]
    trig = {label: trig_expand(*spec) for label, spec in angles.items()}
    tmpl = TEMPLATES[name]
    ent = tmpl.entries(trig, one=S.constant(1))
    n = tmpl.ncomp
    for i in range(n):
        for j in range(n):
            acc = S()
            for k in range(n):
                if (i, k) in ent and (j, k) in ent:
                    acc = acc + ent[(i, k)] * ent[(j, k)]
            assert acc == S.constant(1 if i == j else 0)


# certify_pde ---------------------------------------------------------------------------

def test_certify_zero_vs_zero():
    rep = certify_pde({"q0": S()}, {"q0": AtomPolynomial()}, 2)
    assert rep.passed
    assert rep.to_text().rstrip().endswith("result: PASS")


def test_certify_reports_basis_mismatch():
    inc = {"q0": E(atom("q0", 1) + atom("m", 2), 2)}
    rep = certify_pde(inc, {"q0": atom("q0", 1)}, 2)
    assert not rep.passed
    assert rep.components[0].unexpected_atoms == [str(Atom("m", 2))]
    assert "atoms outside target basis" in rep.to_text()


def test_certify_deterministic():
    a = certify_pde({"psi": E(atom("q0") * atom("m") + atom("q1", 3), 3)}, {"psi": atom("q1", 3)}, 3)
    b = certify_pde({"psi": E(atom("q1", 3) + atom("m") * atom("q0"), 3)}, {"psi": atom("q1", 3)}, 3)
    assert a.to_text() == b.to_text()
