"""
Radial wave equation with the position-dependent Planck function.

r chart::

    R'' + P(r) R' + Q(r) R = 0
    P(r) = hbar'(r) / (2 hbar(r)) + 2/r
    Q(r) = -(l(l+1) hbar^2 / r^2 - 2 m E) / (hbar hbar(r)),   hbar(r) = hbar / (1 + eta'^2)

epsilon chart (eps = rho_c / r, eta_bar = eta / rho_c, E_bar = 2 m E rho_c^2 / hbar^2)::

    Rbar'' + Pbar(eps) Rbar' + Qbar(eps) Rbar = 0
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ClassificationInconclusive, IntegrationFailure, SingularEvaluationError
from .profiles import EtaProfile, to_epsilon, to_r


@dataclass(frozen=True)
class Constants:
    hbar: float = 1.0
    m: float = 1.0

    def energy_bar(self, energy, rho_c):
        return 2 * self.m * energy * rho_c ** 2 / self.hbar ** 2

    def energy(self, energy_bar, rho_c):
        return energy_bar * self.hbar ** 2 / (2 * self.m * rho_c ** 2)


@dataclass(frozen=True)
class RadialODE:
    """Coefficients of the radial equation in one chart.

    ``energy`` is E in the r chart and E_bar in the epsilon chart.
    """

    chart: str
    profile: EtaProfile
    l: int
    energy: complex
    constants: Constants = field(default_factory=Constants)

    @property
    def rho_c(self):
        return self.profile.rho_c

    # -- r chart ---------------------------------------------------------
    def _eta_r(self, rv, order):
        if rv == 0:
            raise SingularEvaluationError("r = 0", "radial coefficients are singular at r = 0")
        return self.rho_c * to_r(self.profile).eval(rv, order)

    def planck(self, rv):
        d = self._eta_r(rv, 2)
        return self.constants.hbar / (1 + d[1] ** 2)

    def P_planck(self, rv):
        """``hbar'(r) / (2 hbar(r)) + 2/r``."""
        d = self._eta_r(rv, 2)
        h = self.constants.hbar
        g = 1 + d[1] ** 2
        hr = h / g
        dhr = -2 * h * d[1] * d[2] / g ** 2
        return dhr / (2 * hr) + 2 / rv

    def P_operator(self, rv):
        """First-derivative coefficient read off the Schroedinger operator."""
        d = self._eta_r(rv, 2)
        return -d[1] * d[2] / (1 + d[1] ** 2) + 2 / rv

    def Q_r(self, rv):
        d = self._eta_r(rv, 1)
        h, mm = self.constants.hbar, self.constants.m
        hr = h / (1 + d[1] ** 2)
        return -(self.l * (self.l + 1) * h ** 2 / rv ** 2 - 2 * mm * self.energy) / (h * hr)

    # -- epsilon chart -----------------------------------------------------
    def P_formula(self, eps):
        """Closed-form epsilon-chart first-derivative coefficient."""
        d = to_epsilon(self.profile).eval(eps, 2)
        e1, e2 = d[1], d[2]
        return -eps ** 3 * e1 * (2 * e1 + eps * e2) / (1 + eps ** 4 * e1 ** 2)

    def Q_formula(self, eps):
        d = to_epsilon(self.profile).eval(eps, 1)
        if eps == 0:
            raise SingularEvaluationError("eps = 0", "Qbar is singular at eps = 0")
        return -(eps ** 2 * self.l * (self.l + 1) - self.energy) * (1 + eps ** 4 * d[1] ** 2) / eps ** 4

    def _r_chart(self):
        c = self.constants
        energy = c.energy(self.energy, self.rho_c)
        return RadialODE("r", to_r(self.profile), self.l, energy, c)

    def P_chain(self, eps):
        """Pbar by transporting the r-chart equation through eps = rho_c / r."""
        rv = self.rho_c / eps
        return 2 / eps - self._r_chart().P_planck(rv) * self.rho_c / eps ** 2

    def Q_chain(self, eps):
        rv = self.rho_c / eps
        return self._r_chart().Q_r(rv) * self.rho_c ** 2 / eps ** 4

    # -- chart-agnostic access ----------------------------------------------
    def P(self, x):
        return self.P_planck(x) if self.chart == "r" else self.P_chain(x)

    def Q(self, x):
        return self.Q_r(x) if self.chart == "r" else self.Q_chain(x)


def build_radial(profile: EtaProfile, l: int, energy, constants: Constants | None = None) -> RadialODE:
    if l < 0 or int(l) != l:
        raise ValueError("l must be a nonnegative integer")
    return RadialODE("r", to_r(profile), int(l), energy, constants or Constants())


def transform_epsilon(ode: RadialODE) -> RadialODE:
    if ode.chart == "epsilon":
        return ode
    c = ode.constants
    return RadialODE("epsilon", to_epsilon(ode.profile), ode.l, c.energy_bar(ode.energy, ode.rho_c), c)


def epsilon_ode(profile: EtaProfile, l: int, energy_bar, constants: Constants | None = None) -> RadialODE:
    if l < 0 or int(l) != l:
        raise ValueError("l must be a nonnegative integer")
    return RadialODE("epsilon", to_epsilon(profile), int(l), energy_bar, constants or Constants())


def chart_discrepancy(ode: RadialODE, grid) -> dict:
    """Largest scaled deviation between the chain-rule and closed-form epsilon coefficients."""
    ode = transform_epsilon(ode)
    worst_p = worst_q = 0.0
    for eps in grid:
        pc, pf = ode.P_chain(eps), ode.P_formula(eps)
        qc, qf = ode.Q_chain(eps), ode.Q_formula(eps)
        worst_p = max(worst_p, abs(pc - pf) / max(abs(pc), abs(pf), 2 / eps))
        worst_q = max(worst_q, abs(qc - qf) / max(abs(qc), abs(qf), 1e-300))
    return {"P": worst_p, "Q": worst_q}


# ---------------------------------------------------------------------------
# singular point classification

@dataclass(frozen=True)
class SingularityReport:
    point: float
    limit_P: complex       # lim (eps - eps_i) Pbar, inf if divergent
    limit_Q: complex       # lim (eps - eps_i)^2 Qbar
    exponent_P: float      # fitted growth exponents of the probed quantities
    exponent_Q: float
    classification: str    # "ordinary" | "regular-singular" | "irregular"
    diagnostics: dict = field(default_factory=dict)

    @property
    def is_regular(self):
        return self.classification in ("ordinary", "regular-singular")


PROBE_DELTA = 0.1
PROBE_LEVELS = range(4, 21)
EXPONENT_THRESHOLD = 0.01
_SUBSAMPLES = 16
ZERO_FLOOR = 1e-11   # coefficients below this on the whole probe set count as identically zero


def _envelope(f, point, power, level):
    """Max of |(eps - point)^power f(eps)| over [d, 2d), d = 2^-level delta."""
    d = PROBE_DELTA * 2.0 ** (-level)
    vals, raw = [], []
    for t in np.linspace(1.0, 2.0, _SUBSAMPLES, endpoint=False):
        x = point + d * t
        fx = abs(f(x))
        raw.append(fx)
        vals.append(abs(x - point) ** power * fx)
    return d, max(vals), max(raw)


def _growth_exponent(f, point, power):
    ds, env, raw = [], [], 0.0
    for k in PROBE_LEVELS:
        d, v, fmax = _envelope(f, point, power, k)
        ds.append(d)
        env.append(v)
        raw = max(raw, fmax)
    env = np.array(env, dtype=float)
    if raw <= ZERO_FLOOR:
        # rounding noise only: the coefficient vanishes near the point
        return math.inf, 0.0, {"envelope": env.tolist(), "raw_max": raw}
    floor = np.max(env) * 1e-300 + 1e-300
    logd = np.log(np.array(ds))
    loge = np.log(np.maximum(env, floor))
    slope, intercept = np.polyfit(logd, loge, 1)
    half = len(ds) // 2
    s1 = np.polyfit(logd[:half], loge[:half], 1)[0]
    s2 = np.polyfit(logd[half:], loge[half:], 1)[0]
    diag = {"slope": float(slope), "slope_far": float(s1), "slope_near": float(s2),
            "envelope_nearest": float(env[-1])}
    # slope in log(d): value ~ d^slope; negative slope means growth as d -> 0
    return float(slope), float(env[-1]), diag


def _limit(f, point, power, exponent, near_value):
    if exponent < -EXPONENT_THRESHOLD:
        return complex(math.inf)
    if exponent > EXPONENT_THRESHOLD:
        return 0j
    x = point + PROBE_DELTA * 2.0 ** (-max(PROBE_LEVELS))
    return complex((x - point) ** power * f(x))


def classify(ode: RadialODE, point: float) -> SingularityReport:
    """Classify ``point`` of the epsilon-chart equation by growth-exponent probing."""
    ode = transform_epsilon(ode)
    P, Q = ode.P_chain, ode.Q_chain

    eP, nP, dP = _growth_exponent(P, point, 1)
    eQ, nQ, dQ = _growth_exponent(Q, point, 2)
    diagnostics = {"P": dP, "Q": dQ}
    for name, diag, e in (("P", dP, eP), ("Q", dQ, eQ)):
        if math.isinf(e):
            continue
        far, near = diag["slope_far"], diag["slope_near"]
        # divergent vs bounded must be decided consistently on both halves
        if (far < -EXPONENT_THRESHOLD) != (near < -EXPONENT_THRESHOLD) and abs(far - near) > 0.5:
            raise ClassificationInconclusive(f"growth exponent of {name} drifts near eps={point}", diagnostics)
    limP = _limit(P, point, 1, eP, nP)
    limQ = _limit(Q, point, 2, eQ, nQ)
    if math.isinf(abs(limP)) or math.isinf(abs(limQ)):
        cls = "irregular"
    else:
        # ordinary when Pbar and Qbar themselves stay bounded
        eP0 = _growth_exponent(P, point, 0)[0]
        eQ0 = _growth_exponent(Q, point, 0)[0]
        diagnostics["P_raw_exponent"] = eP0
        diagnostics["Q_raw_exponent"] = eQ0
        bounded = eP0 >= -EXPONENT_THRESHOLD and eQ0 >= -EXPONENT_THRESHOLD
        cls = "ordinary" if bounded else "regular-singular"
    return SingularityReport(point, limP, limQ, eP, eQ, cls, diagnostics)


def frobenius_limits(report: SingularityReport) -> tuple[complex, complex]:
    """``(p0*, q0*)`` entering the indicial equation."""
    return report.limit_P, report.limit_Q


# ---------------------------------------------------------------------------
# numeric integration oracle

@dataclass(frozen=True)
class Solution:
    eps: np.ndarray
    R: np.ndarray
    dR: np.ndarray
    error_estimate: float


def integrate_numeric(ode: RadialODE, initial, eps0: float, eps1: float, tol: float = 1e-10,
                      samples=None, method: str = "DOP853", coefficients=None) -> Solution:
    """Integrate the epsilon-chart equation from ``eps0`` to ``eps1``.

    ``initial = (R(eps0), R'(eps0))``.  The error estimate is the largest
    difference to a rerun at a tenfold tighter tolerance.  ``coefficients``
    may override ``(P, Q)`` with plain callables.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if coefficients is None:
        ode = transform_epsilon(ode)
        P, Q = ode.P_chain, ode.Q_chain
    else:
        P, Q = coefficients
    if min(eps0, eps1) <= 0 <= max(eps0, eps1):
        raise IntegrationFailure("interval contains the irregular point", 0.0)
    if samples is None:
        samples = np.linspace(eps0, eps1, 11)
    samples = np.asarray(samples, dtype=float)

    def rhs(x, y):
        return [y[1], -P(x) * y[1] - Q(x) * y[0]]

    y0 = np.asarray(initial, dtype=complex)

    def run(rtol):
        if eps0 == eps1:
            return np.tile(y0[:, None], (1, len(samples)))
        sol = solve_ivp(rhs, (eps0, eps1), y0, method=method, t_eval=samples,
                        rtol=rtol, atol=rtol * 1e-2)
        if sol.status != 0:
            where = float(sol.t[-1]) if len(sol.t) else eps0
            raise IntegrationFailure(f"integrator stopped: {sol.message}", where)
        return sol.y

    y = run(tol)
    y_ref = run(tol / 10)
    err = float(np.max(np.abs(y - y_ref))) if y.size else 0.0
    R, dR = y[0], y[1]
    if np.all(np.imag(R) == 0) and np.all(np.imag(dR) == 0):
        R, dR = R.real, dR.real
    return Solution(samples, R, dR, err)
