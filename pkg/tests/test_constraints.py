import math

import numpy as np
import pytest
import sympy as sp

from diracwindow import constraints as K
from diracwindow import symbolic as S
from diracwindow.errors import SecondClassError
from diracwindow.profiles import DampedOscillatory, ExpressionProfile, TaylorAtBoundary, ZeroProfile
from diracwindow.symbolic import eta_deriv, p_r, p_rho, p_sigma, r, rho, sigma

from oracles import NAMES, constraint_gradients, dirac_matrix, J, surface_point

PROFILES = [
    DampedOscillatory(alpha=1.0, beta=0.5),
    ExpressionProfile(expression="sin(x) + x**2/3", chart="r"),
    TaylorAtBoundary(coefficients=(0.3, 0.5, -0.2, 0.1)),
]


@pytest.fixture(scope="module")
def unit():
    """Window factor 1: the rho = eta convention of the reference table."""
    return K.DiracStructure.build(K.ConstraintSet.standard(window_factor=1))


@pytest.fixture(scope="module")
def polar():
    return K.DiracStructure.build(K.ConstraintSet.standard())


def test_constraint_set_forms():
    cs = K.ConstraintSet.standard()
    assert S.equal(cs.primaries[0], rho - sp.sqrt(2) * eta_deriv(0))
    assert S.equal(cs.primaries[1], sigma - sp.pi / 4)
    assert cs.secondaries[0] == p_sigma
    assert S.equal(cs.secondaries[1], p_rho - sp.sqrt(2) * eta_deriv(1) * p_r)
    assert len(cs.multipliers) == 2


def test_consistency_chain_reproduces_linear_secondaries():
    cs = K.ConstraintSet.from_consistency()
    ref = K.ConstraintSet.standard()
    for got, want in zip(cs.secondaries, ref.secondaries):
        assert S.equal(got, want)


def test_consistency_step_polar_form():
    cs = K.ConstraintSet.standard()
    raw = K.consistency_step(cs, K.polar_primaries())
    want = (p_rho * sp.cos(sigma) - p_sigma / rho * sp.sin(sigma) - p_r * eta_deriv(1)) / S.m
    assert S.equal(raw[0], want)
    assert K.consistency_step(cs, (sp.Integer(7),)) == [0]


def test_consistency_on_linear_constraints():
    cs = K.ConstraintSet.standard()
    sec = K.consistency_step(cs)
    assert S.equal(sec[1], p_sigma / (S.m * rho ** 2))


def test_delta_antisymmetric_and_invertible(polar):
    d = polar.delta
    assert d == -d.T
    eye = (d * polar.delta_inverse).applyfunc(lambda e: polar.constraints.strong(e))
    assert eye == sp.eye(4)


def test_delta_entry_linear_eta():
    # {phi_1, psi_2} with eta' = c: +(1 + 2 c^2) with {q, p} = +1
    lin = ExpressionProfile(expression="0.7*x", chart="r")
    cs = K.ConstraintSet.standard()
    d = K.build_delta(cs)
    rng = np.random.default_rng(1)
    for _ in range(5):
        rv = rng.uniform(0.5, 3)
        val = S.eval_numeric(d[0, 3], {"r": rv, "p_r": rng.uniform(-1, 1)}, lin)
        assert abs(val - (1 + 2 * 0.7 ** 2)) < 1e-10


def test_not_second_class_raises():
    cs = K.ConstraintSet((rho, sigma), (rho + sigma, sp.Integer(0)), K.hamiltonian_3d(), K.hamiltonian_2d())
    with pytest.raises(SecondClassError):
        K.build_delta(cs)


def test_reference_entries(unit):
    e1 = eta_deriv(1)
    g = 1 + e1 ** 2
    assert S.equal(K.dirac_bracket(S.var("r"), S.var("p_r"), unit), 1 / g)
    assert K.dirac_bracket(S.var("theta"), S.var("p_theta"), unit) == 1
    assert K.dirac_bracket(S.var("phi"), S.var("p_phi"), unit) == 1
    # odd-in-eta' entries carry the opposite sign to the reference table
    assert S.equal(K.dirac_bracket(S.var("p_r"), S.var("rho"), unit), -e1 / g)
    assert S.equal(K.dirac_bracket(S.var("p_rho"), S.var("r"), unit), -e1 / g)
    assert S.equal(K.dirac_bracket(S.var("p_rho"), S.var("rho"), unit), -e1 ** 2 / g)
    assert S.equal(K.dirac_bracket(S.var("p_r"), S.var("p_rho"), unit), -eta_deriv(2) * p_r / g)
    assert K.dirac_bracket(S.var("p_r"), S.var("p_sigma"), unit) == 0


def test_no_window_limit(unit):
    zero = ZeroProfile()
    pt = {n: v for n, v in zip(NAMES, surface_point(zero, 1.7, 0.3))}
    om = K.omega_numeric(unit, pt, zero)
    canon = np.array([[0, 0, 0, 1, 0, 0], [0, 0, 0, 0, 1, 0], [0, 0, 0, 0, 0, 1]], dtype=float)
    block = om[np.ix_([0, 1, 2, 5, 6, 7], [0, 1, 2, 5, 6, 7])]
    assert np.allclose(block[:3], canon, atol=0)
    assert np.allclose(block, -block.T)


def test_omega_antisymmetric(polar):
    om = polar.omega
    assert om == -om.T


@pytest.mark.parametrize("w", [1, sp.sqrt(2)], ids=["w1", "wsqrt2"])
def test_omega_matches_independent_oracle(w):
    structure = K.DiracStructure.build(K.ConstraintSet.standard(window_factor=w))
    rng = np.random.default_rng(7)
    for prof in PROFILES:
        for _ in range(20):
            z = surface_point(prof, rng.uniform(1.1, 3.0), rng.uniform(-2, 2), theta=rng.uniform(0.3, 2.8),
                              w=float(w))
            lib = K.omega_numeric(structure, dict(zip(NAMES, z)), prof)
            assert np.max(np.abs(lib - dirac_matrix(prof, z, float(w)))) < 1e-10


def test_sin_profile_point():
    sin = ExpressionProfile(expression="sin(x)", chart="r")
    structure = K.DiracStructure.build(K.ConstraintSet.standard(window_factor=sp.sqrt(2)))
    z = surface_point(sin, 0.9, 0.4, w=math.sqrt(2))
    val = S.eval_numeric(K.dirac_bracket(r, p_r, structure), dict(zip(NAMES, z)), sin)
    assert abs(val - dirac_matrix(sin, z, math.sqrt(2))[0, 5]) < 1e-10
    G = constraint_gradients(sin, z, math.sqrt(2))
    assert abs(np.linalg.det(G @ J @ G.T)) > 0.1


def test_constraints_are_casimirs(polar):
    rng = np.random.default_rng(2)
    table = [[K.dirac_bracket(c, v, polar) for v in S.CANONICAL_VARS] for c in polar.constraints.constraints]
    for prof in PROFILES:
        for _ in range(20):
            z = surface_point(prof, rng.uniform(1.1, 3.0), rng.uniform(-2, 2), w=math.sqrt(2))
            pt = dict(zip(NAMES, z))
            for row in table:
                for e in row:
                    assert abs(S.eval_numeric(e, pt, prof)) < 1e-10


def test_commutator_table(unit):
    table = {e.pair: e for e in K.commutator_table(unit)}
    assert len(table) == 45
    assert S.equal(table[("theta", "p_theta")].commutator, sp.I * S.hbar)
    assert S.equal(table[("p_rho", "r")].planck_factored, -eta_deriv(1))
    assert table[("p_r", "p_sigma")].commutator == 0
    assert table[("r", "p_r")].tabulated and not table[("r", "theta")].tabulated


def test_planck_function(unit, polar):
    assert S.equal(unit.planck_function, S.hbar / (1 + eta_deriv(1) ** 2))
    assert S.equal(polar.planck_function, S.hbar / (1 + 2 * eta_deriv(1) ** 2))


def test_anomaly_term():
    lin = ExpressionProfile(expression="2*x", chart="r")
    assert K.anomaly_term(lin, 1.3) == 0
    assert K.anomaly_term(ZeroProfile(), 1.3) == 0
    cube = ExpressionProfile(expression="x**3", chart="r")
    want = 0.5 * (1 / 10) ** 2 * (6 - 2 * 3 * 36 / 10)
    assert K.anomaly_term(cube, 1.0) == pytest.approx(want, rel=1e-14)
    assert want == pytest.approx(-0.078)
    sym = S.eval_numeric(S.anomaly_expr(), {"r": 1.0}, cube, {S.hbar: 1.0})
    assert sym == pytest.approx(want, rel=1e-14)


def test_mass_quantum():
    assert K.mass_quantum(0, 1.0) == 0
    assert K.mass_quantum(1, 1.0) == 0.5
    assert K.mass_quantum(4, 2.0) == 1.0
    with pytest.raises(ValueError):
        K.mass_quantum(0.5, 1.0)
    # SI: hbar / (2 rho_c c) for rho_c = 1 mm is far below the electron mass
    si = K.mass_quantum(1, 1e-3, 1.054571817e-34, 299792458.0)
    assert si == pytest.approx(1.7589e-40, rel=1e-3)


def test_representation():
    rep = K.representation_report(K.DiracStructure.build(K.ConstraintSet.standard(window_factor=1)))
    assert rep.sigma_hat == sp.pi / 4
    assert rep.p_sigma == 0
    sin = ExpressionProfile(expression="sin(x)", chart="r")
    assert rep.rho_value(sin, math.pi / 2) == pytest.approx(1.0)
    assert rep.planck_value(ZeroProfile(), 1.0) == 1.0
    assert "d/dr" in rep.p_r
    wound = K.representation_report(K.DiracStructure.build(K.ConstraintSet.standard(winding=1)))
    assert S.equal(wound.sigma_hat, sp.pi / 4 + 2 * sp.pi)


@pytest.mark.parametrize("z", [0, 1, -2])
def test_strong_substitution_annihilates_constraints(z):
    cs = K.ConstraintSet.standard(winding=z)
    for c in cs.constraints:
        assert cs.strong(c) == 0
