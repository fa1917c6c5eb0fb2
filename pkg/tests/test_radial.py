import math

import numpy as np
import pytest

from diracwindow.errors import IntegrationFailure, SingularEvaluationError
from diracwindow.profiles import DampedOscillatory, ExpressionProfile, TaylorAtBoundary, ZeroProfile
from diracwindow.radial import (Constants, RadialODE, build_radial, chart_discrepancy, classify,
                                epsilon_ode, integrate_numeric, transform_epsilon)

PROFILES = [
    DampedOscillatory(alpha=1.0, beta=1.0),
    TaylorAtBoundary(coefficients=(0.3, 0.5, -0.2, 0.1)),
    ExpressionProfile(expression="sin(x) + x**2/3", chart="r", rho_c=1.5),
]


def test_free_limits():
    ode = build_radial(ZeroProfile(), 0, 0.5)
    assert ode.P(2.0) == pytest.approx(1.0)
    assert ode.Q(2.0) == pytest.approx(1.0)   # 2 m E / hbar^2 = 1
    eps = transform_epsilon(ode)
    assert eps.energy == pytest.approx(1.0)
    assert abs(eps.P(0.7)) < 1e-14
    ode1 = epsilon_ode(ZeroProfile(), 2, 3.0)
    assert ode1.Q(0.7) == pytest.approx(-(0.49 * 6 - 3.0) / 0.7 ** 4, rel=1e-13)
    assert epsilon_ode(ZeroProfile(), 0, 2.5).Q(1.0) == pytest.approx(2.5)


def test_linear_eta_planck_constant():
    ode = build_radial(ExpressionProfile(expression="0.6*x", chart="r"), 1, 1.0)
    for rv in (0.3, 1.0, 4.0):
        assert ode.P_planck(rv) == 2 / rv
        assert ode.P_operator(rv) == 2 / rv


def test_singular_at_origin():
    with pytest.raises(SingularEvaluationError):
        build_radial(ExpressionProfile(expression="x", chart="r"), 0, 1.0).P(0.0)


@pytest.mark.parametrize("prof", PROFILES, ids=lambda p: p.describe()["variant"])
def test_two_constructions_of_P(prof):
    ode = build_radial(prof, 1, 0.7, Constants(hbar=1.3, m=0.8))
    rng = np.random.default_rng(4)
    for rv in rng.uniform(0.5 * prof.rho_c, 5 * prof.rho_c, 50):
        a, b = ode.P_planck(rv), ode.P_operator(rv)
        assert abs(a - b) <= 1e-12 * max(abs(a), abs(b))


@pytest.mark.parametrize("prof", PROFILES, ids=lambda p: p.describe()["variant"])
def test_chain_rule_matches_closed_form(prof):
    ode = epsilon_ode(prof, 2, 1.7)
    disc = chart_discrepancy(ode, np.linspace(0.3, 1.5, 61))
    assert disc["P"] < 1e-9 and disc["Q"] < 1e-9


def test_chain_rule_point_value():
    ode = epsilon_ode(DampedOscillatory(alpha=1.0, beta=1.0), 1, 2.0)
    pc, pf = ode.P_chain(0.8), ode.P_formula(0.8)
    qc, qf = ode.Q_chain(0.8), ode.Q_formula(0.8)
    assert abs(pc - pf) <= 1e-9 * abs(pf)
    assert abs(qc - qf) <= 1e-9 * abs(qf)


def test_constants_round_trip():
    c = Constants(hbar=1.3, m=0.4)
    assert c.energy(c.energy_bar(2.5, 1.7), 1.7) == pytest.approx(2.5, rel=1e-15)


@pytest.mark.parametrize("prof", [ZeroProfile(), *PROFILES], ids=lambda p: p.describe()["variant"])
def test_classification(prof):
    ode = epsilon_ode(prof, 1, 2.0)
    assert classify(ode, 0.0).classification == "irregular"
    at_one = classify(ode, 1.0)
    assert at_one.is_regular
    assert at_one.limit_P == 0 and at_one.limit_Q == 0


def test_free_boundary_is_ordinary():
    assert classify(epsilon_ode(ZeroProfile(), 0, 3.0), 1.0).classification == "ordinary"
    assert classify(epsilon_ode(DampedOscillatory(), 0, 3.0), 0.5).classification == "ordinary"


def test_irregular_for_every_energy():
    for E in (0.1, 5.0, -2.0):
        assert classify(epsilon_ode(TaylorAtBoundary(coefficients=(0.1, 0.2)), 0, E), 0.0).classification == "irregular"


def test_synthetic_regular_singular():
    # Pbar = 1/(eps-1), Qbar = 2/(eps-1)^2 through an ODE stub
    class Stub(RadialODE):
        def P_chain(self, x):
            return 1 / (x - 1)

        def Q_chain(self, x):
            return 2 / (x - 1) ** 2

    rep = classify(Stub("epsilon", ZeroProfile(), 0, 0.0), 1.0)
    assert rep.classification == "regular-singular"
    assert rep.limit_P == pytest.approx(1.0) and rep.limit_Q == pytest.approx(2.0)


def test_integrate_linear():
    sol = integrate_numeric(None, (1.0, 2.0), 1.0, 1.5, coefficients=(lambda x: 0.0, lambda x: 0.0))
    assert sol.R[-1] == pytest.approx(2.0, abs=1e-12)


def test_integrate_free_particle_closed_form():
    E = math.pi ** 2
    s = math.sqrt(E)
    ode = epsilon_ode(ZeroProfile(), 0, E)
    f = lambda e: e * np.sin(s / e)
    df = lambda e: np.sin(s / e) - (s / e) * np.cos(s / e)
    grid = np.linspace(1.0, 0.5, 21)
    sol = integrate_numeric(ode, (f(1.0), df(1.0)), 1.0, 0.5, 1e-12, samples=grid)
    assert np.max(np.abs(sol.R - f(grid))) < 1e-8
    assert sol.error_estimate < 1e-8


def test_integrate_through_origin_fails():
    ode = epsilon_ode(ZeroProfile(), 0, 1.0)
    with pytest.raises(IntegrationFailure) as info:
        integrate_numeric(ode, (1.0, 0.0), 1.0, -0.5)
    assert info.value.location == 0.0


def test_integrate_deterministic():
    ode = epsilon_ode(DampedOscillatory(), 1, 2.0)
    a = integrate_numeric(ode, (0.0, 1.0), 1.0, 0.5)
    b = integrate_numeric(ode, (0.0, 1.0), 1.0, 0.5)
    assert np.array_equal(a.R, b.R)
