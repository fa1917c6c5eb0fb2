"""
Constraint system of a particle in 3d space with a 2d polar window, the Dirac
consistency/reduction machinery and the resulting deformed bracket table.

Bracket orientation: ``{q, p} = +1``.  With this orientation the odd-in-eta'
entries of the 3d/2d commutator table come out as

    {p_r, rho}_D = -w eta' / (1 + w^2 eta'^2),   {p_rho, r}_D = -w eta' / (1 + w^2 eta'^2),

where ``w`` is the window factor relating the window radius to eta (rho = w eta).
The commonly quoted table lists both with a positive sign.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import sympy as sp

from . import symbolic as S
from .errors import SecondClassError
from .symbolic import (eta_deriv, normalize, p_phi, p_r, p_rho, p_sigma, p_theta, phi,
                       poisson_bracket, r, rho, sigma, substitute_strong, theta)

log = logging.getLogger(__name__)

SQRT2 = sp.sqrt(2)


@dataclass(frozen=True)
class ConstraintSet:
    """Primary and secondary constraints plus the total Hamiltonian pieces.

    ``window_factor`` is the coefficient ``w`` in ``rho = w eta(r)``; the polar
    constraints with equal components give ``w = sqrt(2)``.  ``winding`` is the
    branch integer of ``sigma = pi/4 + 2 pi z``.
    """

    primaries: tuple
    secondaries: tuple
    hamiltonian_3d: sp.Expr
    hamiltonian_2d: sp.Expr
    window_factor: sp.Expr = SQRT2
    winding: int = 0
    multipliers: tuple = (S.lambda1, S.lambda2)

    @property
    def constraints(self) -> tuple:
        return self.primaries + self.secondaries

    @property
    def total_hamiltonian(self):
        return (self.hamiltonian_3d + self.hamiltonian_2d
                + sum(lam * c for lam, c in zip(self.multipliers, self.primaries)))

    @classmethod
    def standard(cls, window_factor=SQRT2, winding: int = 0) -> ConstraintSet:
        w = sp.sympify(window_factor)
        # winding enters as sigma = pi/4 + 2 pi z so that strong substitution annihilates phi_2
        primaries = (rho - w * eta_deriv(0), sigma - sp.pi / 4 - 2 * winding * sp.pi)
        secondaries = (p_sigma, p_rho - w * eta_deriv(1) * p_r)
        return cls(primaries, secondaries, hamiltonian_3d(), hamiltonian_2d(), w, winding)

    @classmethod
    def from_consistency(cls, winding: int = 0) -> ConstraintSet:
        """Build the set by running the consistency chain on the polar constraints."""
        base = cls.standard(SQRT2, winding)
        secondaries, _ = linearize(consistency_step(base, polar_primaries()), base)
        return cls(base.primaries, tuple(secondaries), base.hamiltonian_3d, base.hamiltonian_2d,
                   SQRT2, winding)

    def strong(self, e):
        return substitute_strong(e, self.window_factor, self.winding)


def hamiltonian_3d():
    return (p_r ** 2 + p_theta ** 2 / r ** 2 + p_phi ** 2 / (r ** 2 * sp.sin(theta) ** 2)) / (2 * S.m)


def hamiltonian_2d():
    return (p_rho ** 2 + p_sigma ** 2 / rho ** 2) / (2 * S.m)


def polar_primaries():
    """Window coordinates set equal to eta in polar form (before solving)."""
    return (rho * sp.cos(sigma) - eta_deriv(0), rho * sp.sin(sigma) - eta_deriv(0))


def consistency_step(cset: ConstraintSet, primaries=None) -> list:
    """Secondary constraints ``{phi_i, H_T}``."""
    primaries = cset.primaries if primaries is None else primaries
    return [poisson_bracket(phi_i, cset.total_hamiltonian) for phi_i in primaries]


def linearize(secondaries, cset: ConstraintSet):
    """Reduce raw secondaries to constraints linear in the window momenta.

    The primaries are imposed strongly on the coordinates, the resulting
    system is solved for ``(p_rho, p_sigma)`` and each secondary is rewritten
    as ``momentum - solution``.  Returns the linear constraints and the list of
    terms removed by imposing the primaries.
    """
    coord_subs = {k: v for k, v in S.strong_substitutions(cset.window_factor, cset.winding).items()
                  if k in (rho, sigma)}
    reduced = [normalize(sp.sympify(s).subs(coord_subs, simultaneous=True)) for s in secondaries]
    dropped = [normalize(s - red) for s, red in zip(secondaries, reduced)]
    for term in dropped:
        if term != 0:
            log.info("linearization dropped terms proportional to primaries: %s", term)
    numerators = [sp.numer(sp.together(e)) for e in reduced]
    sol = sp.solve(numerators, [p_sigma, p_rho], dict=True)
    if len(sol) != 1:
        raise ValueError(f"secondaries do not fix the window momenta uniquely: {sol}")
    sol = sol[0]
    return [normalize(p_sigma - sol[p_sigma]), normalize(p_rho - sol[p_rho])], dropped


def build_delta(cset: ConstraintSet) -> sp.Matrix:
    """Constraint bracket matrix, strong-substituted."""
    cs = cset.constraints
    n = len(cs)
    delta = sp.zeros(n, n)
    for a in range(n):
        for b in range(a + 1, n):
            val = cset.strong(poisson_bracket(cs[a], cs[b]))
            delta[a, b] = val
            delta[b, a] = -val
    det = normalize(delta.det(method="berkowitz"))
    if det == 0:
        raise SecondClassError("constraint bracket matrix is singular: constraints are not second-class")
    return delta


@dataclass(frozen=True)
class DiracStructure:
    constraints: ConstraintSet
    delta: sp.Matrix
    delta_inverse: sp.Matrix

    @classmethod
    def build(cls, cset: ConstraintSet | None = None) -> DiracStructure:
        cset = ConstraintSet.standard() if cset is None else cset
        delta = build_delta(cset)
        det = normalize(delta.det(method="berkowitz"))
        adj = delta.adjugate(method="berkowitz")
        inv = adj.applyfunc(lambda e: cset.strong(e / det))
        return cls(cset, delta, inv)

    @cached_property
    def omega(self) -> sp.Matrix:
        """Dirac brackets among the ten canonical variables."""
        n = len(S.PHASE_SPACE)
        om = sp.zeros(n, n)
        for i in range(n):
            for j in range(i + 1, n):
                val = dirac_bracket(S.PHASE_SPACE[i], S.PHASE_SPACE[j], self)
                om[i, j] = val
                om[j, i] = -val
        return om

    @cached_property
    def planck_function(self):
        return normalize(S.hbar * dirac_bracket(r, p_r, self))


def _expr(z):
    return z.symbol if isinstance(z, S.CanonicalVar) else sp.sympify(z)


def dirac_bracket(zI, zJ, structure: DiracStructure):
    """``{zI, zJ} - {zI, chi_a} Delta^-1_ab {chi_b, zJ}``, strong-substituted."""
    a, b = _expr(zI), _expr(zJ)
    cs = structure.constraints.constraints
    left = [poisson_bracket(a, c) for c in cs]
    right = [poisson_bracket(c, b) for c in cs]
    total = poisson_bracket(a, b)
    inv = structure.delta_inverse
    for i, li in enumerate(left):
        if li == 0:
            continue
        for j, rj in enumerate(right):
            if rj == 0 or inv[i, j] == 0:
                continue
            total -= li * inv[i, j] * rj
    return structure.constraints.strong(total)


# ---------------------------------------------------------------------------
# commutator table

REFERENCE_PAIRS = {
    # pair: commonly quoted form of the entry (w = 1)
    ("r", "p_r"): "i hbar(r)",
    ("theta", "p_theta"): "i hbar",
    ("phi", "p_phi"): "i hbar",
    ("p_r", "rho"): "i eta'(r) hbar(r)",
    ("p_r", "p_rho"): "-i hbar(r) eta''(r) p_r + O(hbar^2)",
    ("p_r", "p_sigma"): "-2 i hbar(r) eta'(r) p_sigma / rho",
    ("p_rho", "rho"): "-i hbar(r) eta'(r)^2",
    ("p_rho", "p_sigma"): "-2 i hbar(r) eta'(r) p_sigma / rho",
    ("p_rho", "r"): "i hbar(r) eta'(r)",
}


@dataclass(frozen=True)
class CommutatorEntry:
    pair: tuple
    bracket: sp.Expr          # Dirac bracket
    commutator: sp.Expr       # i hbar * bracket
    planck_factored: sp.Expr  # commutator / (i hbar(r))
    tabulated: bool
    reference_form: str = ""


def commutator_table(structure: DiracStructure, include_all: bool = True) -> list[CommutatorEntry]:
    """Quantum commutators ``i hbar {A, B}_D`` with the Planck function factored out."""
    names = [v.name for v in S.CANONICAL_VARS]
    pairs = list(REFERENCE_PAIRS)
    if include_all:
        seen = {frozenset(p) for p in pairs}
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                if frozenset((a, b)) not in seen:
                    pairs.append((a, b))
    hr = planck_function_expr(structure)
    table = []
    for a, b in pairs:
        br = dirac_bracket(S.var(a), S.var(b), structure)
        comm = normalize(sp.I * S.hbar * br)
        table.append(CommutatorEntry((a, b), br, comm, normalize(comm / (sp.I * hr)),
                                     (a, b) in REFERENCE_PAIRS, REFERENCE_PAIRS.get((a, b), "")))
    return table


def planck_function_expr(structure: DiracStructure | None = None):
    w = SQRT2 if structure is None else structure.constraints.window_factor
    return S.planck_function_expr(w)


# ---------------------------------------------------------------------------
# derived formulas

def anomaly_term(profile, r_value: float, hbar: float = 1.0) -> float:
    """Order-hbar**2 anomaly of ``[p_r, p_rho]`` at radius ``r_value``."""
    from .profiles import to_r
    prof = to_r(profile)
    d = prof.rho_c * prof.eval(r_value, 3)
    e1, e2, e3 = d[1], d[2], d[3]
    hr = hbar / (1 + e1 * e1)
    return 0.5 * hr * hr * (e3 - 2 * e1 * e2 * e2 / (1 + e1 * e1))


def mass_quantum(z: int, rho_c: float, hbar: float = 1.0, c: float | None = None) -> float:
    """Mass quantum ``z hbar / (2 rho_c)``; pass ``c`` to divide by the speed of light (SI)."""
    if int(z) != z:
        raise ValueError("z must be an integer")
    value = 0.5 * z * hbar / rho_c
    return value / c if c is not None else value


@dataclass(frozen=True)
class Representation:
    """Operator representation on the reduced phase space."""

    planck_function: sp.Expr
    p_r: str
    p_rho: str
    rho_hat: sp.Expr
    p_sigma: sp.Expr
    sigma_hat: sp.Expr
    winding: int

    def rho_value(self, profile, r_value: float) -> float:
        return complex(S.eval_numeric(self.rho_hat, {r: r_value}, profile)).real

    def planck_value(self, profile, r_value: float, hbar: float = 1.0) -> float:
        return complex(S.eval_numeric(self.planck_function, {r: r_value}, profile, {S.hbar: hbar})).real


def representation_report(structure: DiracStructure) -> Representation:
    cset = structure.constraints
    hr = structure.planck_function
    subs = S.strong_substitutions(cset.window_factor, cset.winding)
    return Representation(
        planck_function=hr,
        p_r=f"-i ({hr}) d/dr",
        p_rho=f"-i ({hr}) d/drho",
        rho_hat=subs[rho],
        p_sigma=subs[p_sigma],
        sigma_hat=subs[sigma],
        winding=cset.winding,
    )


def omega_numeric(structure: DiracStructure, point: dict, profile) -> np.ndarray:
    om = structure.omega
    n = om.shape[0]
    out = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            if om[i, j] != 0:
                out[i, j] = S.eval_numeric(om[i, j], point, profile)
    return out
