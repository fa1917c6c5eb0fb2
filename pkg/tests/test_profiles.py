import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diracwindow.errors import DomainError, EtaOrderError
from diracwindow.profiles import (ConstantProfile, DampedOscillatory, ExpressionProfile, InteriorQuadratic,
                                  TaylorAtBoundary, ZeroProfile, boundary_normalized, make_profile,
                                  to_epsilon, to_r)

SMOOTH = [
    DampedOscillatory(alpha=1.0, beta=1.0),
    TaylorAtBoundary(coefficients=(0.3, 0.5, -0.2, 0.1)),
    ExpressionProfile(expression="exp(-x) * cos(2*x)"),
    ExpressionProfile(expression="sin(x) + x**2/3", chart="r", rho_c=1.5),
]


def richardson(f, x, h=1e-4):
    """Fourth-order central difference of a scalar function."""
    d1 = (f(x + h) - f(x - h)) / (2 * h)
    d2 = (f(x + h / 2) - f(x - h / 2)) / h
    return (4 * d2 - d1) / 3


def test_damped_zero_at_pi():
    p = DampedOscillatory(alpha=math.pi, beta=0.0)
    assert abs(p.eval(1.0, 0)[0]) < 1e-15


def test_damped_refuses_origin():
    with pytest.raises(DomainError, match="singularity"):
        DampedOscillatory().eval(0.0, 0)
    with pytest.raises(DomainError):
        to_r(DampedOscillatory()).eval(0.0, 0)


def test_interior_quadratic_at_center():
    p = InteriorQuadratic(rho_c=2.0, alpha=0.5, beta=0.3)
    assert p.eval(0.0, 0)[0] == pytest.approx(0.3 * 4.0)
    assert list(p.eval(1.0, 3)) == pytest.approx([1 + 0.5 * 2 + 1.2, 2 + 1.0, 2.0, 0.0])
    with pytest.raises(ValueError):
        to_epsilon(p)


def test_damped_derivatives_finite_difference():
    p = DampedOscillatory(alpha=1.0, beta=1.0)
    d = p.eval(0.5, 4)
    for k in range(1, 5):
        fd = richardson(lambda x: p.eval(x, k - 1)[k - 1], 0.5)
        assert fd == pytest.approx(d[k], rel=1e-6)


def test_cap():
    with pytest.raises(EtaOrderError):
        ZeroProfile().eval(1.0, 11)
    assert len(ZeroProfile(cap=14).eval(1.0, 14)) == 15


def test_constant_charts():
    c = ConstantProfile(value=0.7)
    for prof in (c, to_r(c), to_epsilon(to_r(c))):
        d = prof.eval(0.8, 4)
        assert d[0] == pytest.approx(0.7)
        assert np.allclose(d[1:], 0)


def test_chain_rule_linear():
    rho_c = 3.0
    p = to_r(ExpressionProfile(expression="x", rho_c=rho_c))
    # eps = 1/2 at r = 2 rho_c
    assert p.eval(2 * rho_c, 1)[1] == pytest.approx(-0.25 / rho_c)


def test_damped_r_chart_finite_difference():
    p = to_r(DampedOscillatory(alpha=1.0, beta=1.0, rho_c=1.3))
    rv = 2 * 1.3
    d = p.eval(rv, 3)
    for k in range(1, 4):
        fd = richardson(lambda x: p.eval(x, k - 1)[k - 1], rv)
        assert fd == pytest.approx(d[k], rel=1e-6)


@pytest.mark.parametrize("prof", SMOOTH, ids=lambda p: p.describe()["variant"])
def test_round_trip(prof):
    back = to_r(to_epsilon(prof)) if prof.chart == "r" else to_epsilon(to_r(prof))
    for x in (0.6, 0.9, 1.4):
        assert np.allclose(back.eval(x, 4), prof.eval(x, 4), rtol=1e-12, atol=1e-12)
        # higher orders compared as Taylor coefficients (derivative / k!)
        assert np.allclose(back.jet(x, 8), prof.jet(x, 8), rtol=1e-12, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(SMOOTH), st.floats(0.4, 1.6), st.integers(1, 6))
def test_derivative_consistency(prof, x, k):
    for chart_prof in (prof, to_epsilon(prof), to_r(prof)):
        d = chart_prof.eval(x, k)
        fd = richardson(lambda y: chart_prof.eval(y, k - 1)[k - 1], x, 1e-3)
        assert abs(fd - d[k]) <= 1e-6 * max(1.0, abs(d[k]))


def test_taylor_at_boundary():
    p = TaylorAtBoundary(coefficients=(0.3, 0.5, -0.2))
    assert p.boundary_value == 0.3
    assert list(p.eval(1.0, 3)) == pytest.approx([0.3, 0.5, -0.4, 0.0])
    q = p.with_coefficient(4, 1.0)
    assert q.coefficients == (0.3, 0.5, -0.2, 0.0, 1.0)
    assert q.eval(1.0, 4)[4] == pytest.approx(24.0)


def test_boundary_normalization():
    p = boundary_normalized(DampedOscillatory(alpha=1.0, beta=1.0), 0.25)
    assert p(1.0) == pytest.approx(0.25)
    with pytest.raises(DomainError):
        boundary_normalized(ZeroProfile(), 1.0)
    assert boundary_normalized(TaylorAtBoundary(coefficients=(0.3, 1.0)), 0.3)(1.0) == pytest.approx(0.3)


def test_make_profile():
    p = make_profile("damped_oscillatory", {"alpha": 2.0, "beta": 0.5}, rho_c=2.0)
    assert isinstance(p, DampedOscillatory) and p.rho_c == 2.0
    t = make_profile("taylor_at_boundary", {"coefficients": [0.1, 0.2]})
    assert t.coefficients == (0.1, 0.2)
    assert make_profile("damped_oscillatory", {}, normalize_to=0.5)(1.0) == pytest.approx(0.5)
    with pytest.raises(ValueError, match="unknown profile variant"):
        make_profile("kronig_penney")
    with pytest.raises(ValueError):
        make_profile("zero", rho_c=-1.0)


def test_expression_rejects_other_symbols():
    with pytest.raises(ValueError):
        ExpressionProfile(expression="x*y").eval(1.0, 0)


def test_describe_round_trip():
    for prof in SMOOTH:
        d = prof.describe()
        again = make_profile(d["variant"], d["parameters"], rho_c=d["rho_c"], chart=d["chart"])
        assert np.allclose(again.eval(0.9, 3), prof.eval(0.9, 3))
