"""
Frobenius machinery about the window boundary ``eps = 1``.

With ``x = eps - 1``, ``Pbar = sum p_n x^n`` and ``Qbar = sum q_n x^n`` where
``q_n = A_n + B_n E_bar``.  Substituting ``Rbar = sum a_j x^(j+k)`` gives, for
the coefficient of ``x^(s+k-2)``,

    (s+k)(s+k-1) a_s + sum_{j<s} p_{s-1-j} (j+k) a_j + sum_{j<s-1} q_{s-2-j} a_j = 0.

Truncating the series at ``a_n`` and keeping the first ``n+1`` non-trivial
equations gives a square system ``M(E_bar) a = 0`` whose determinant is a
polynomial of degree at most ``n+1`` in ``E_bar``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.optimize import brentq

from . import taylor
from .errors import IrregularPointError, LogarithmicCaseError, StructuralDegeneracyError
from .profiles import EtaProfile, TaylorAtBoundary, to_epsilon
from .radial import Constants, RadialODE, classify, epsilon_ode, transform_epsilon

log = logging.getLogger(__name__)

REAL_SNAP = 1e-9
RESIDUAL_TOL = 1e-8
CLUSTER_TOL = 1e-6
DEFAULT_TRUNCATION = 6


# ---------------------------------------------------------------------------
# indicial equation

@dataclass(frozen=True)
class Exponents:
    roots: tuple
    double: bool
    resonant: bool  # roots differ by a positive integer


def indicial_exponents(source, point: float = 1.0) -> Exponents:
    """Roots of ``k(k-1) + p0* k + q0* = 0``.

    ``source`` is either an ODE (classified at ``point`` first) or a
    ``(p0*, q0*)`` pair.
    """
    if isinstance(source, RadialODE):
        report = classify(source, point)
        if not report.is_regular:
            raise IrregularPointError(report)
        p0, q0 = report.limit_P, report.limit_Q
    else:
        p0, q0 = source
    b = p0 - 1
    disc = complex(b * b - 4 * q0)
    sq = np.sqrt(disc)
    k1, k2 = (-b - sq) / 2, (-b + sq) / 2
    roots = tuple(sorted((_clean(k1), _clean(k2)), key=lambda z: (np.real(z), np.imag(z))))
    diff = roots[1] - roots[0]
    double = abs(diff) < 1e-12
    resonant = not double and abs(diff - round(np.real(diff))) < 1e-12
    return Exponents(roots, double, resonant)


def _clean(z):
    z = complex(z)
    if abs(z.imag) < 1e-14:
        z = z.real
        return float(round(z)) if abs(z - round(z)) < 1e-14 else z
    return z


# ---------------------------------------------------------------------------
# Taylor data at the boundary

@dataclass(frozen=True)
class TaylorCoeffs:
    p: np.ndarray        # Taylor coefficients of Pbar at eps=1
    qA: np.ndarray       # q_n = qA[n] + qB[n] * E_bar
    qB: np.ndarray
    kappa: np.ndarray    # Taylor coefficients of -(1 + eps^4 eta_bar'^2) / eps^4
    l: int
    eta_prime: complex   # eta_bar'(1)

    @property
    def order(self) -> int:
        return len(self.p) - 1

    def q(self, energy_bar) -> np.ndarray:
        return self.qA + self.qB * energy_bar


def taylor_coeffs(ode: RadialODE, order: int) -> TaylorCoeffs:
    """Taylor coefficients of the epsilon-chart coefficients about eps = 1."""
    ode = transform_epsilon(ode)
    N = order
    eta = to_epsilon(ode.profile).jet(1.0, N + 2)
    d1 = taylor.derivative(eta)[:N + 1]
    d2 = taylor.derivative(taylor.derivative(eta))[:N + 1]
    e = taylor.variable(1.0, N)
    e2 = taylor.mul(e, e)
    e3 = taylor.mul(e2, e)
    e4 = taylor.mul(e2, e2)
    g = taylor.mul(e4, taylor.mul(d1, d1))
    g[0] += 1.0
    p = -taylor.div(taylor.mul(taylor.mul(e3, d1), 2 * d1 + taylor.mul(e, d2)), g)
    L = ode.l * (ode.l + 1)
    qA = -L * taylor.div(g, e2)
    qB = taylor.div(g, e4)
    return TaylorCoeffs(p, qA, qB, -qB, ode.l, d1[0])


def kappa_q(coeffs: TaylorCoeffs, n: int, energy_bar, variant: str = "compact"):
    """n-th boundary coefficient of Qbar from derivatives of kappa.

    ``variant="compact"`` is the shortened expression
    ``kappa^(n)(L - E) + n L (kappa^(n-1) + (n-1) kappa^(n-2))``;
    ``variant="leibniz"`` is the full Leibniz expansion of ``kappa (eps^2 L - E)``,
    ``kappa^(n)(L - E) + 2 n L kappa^(n-1) + n (n-1) L kappa^(n-2)``.
    Both return raw derivatives (not divided by n!).
    """
    L = coeffs.l * (coeffs.l + 1)
    kd = taylor.to_derivatives(coeffs.kappa)

    def k(j):
        return kd[j] if j >= 0 else 0.0

    if variant == "compact":
        return k(n) * (L - energy_bar) + n * L * (k(n - 1) + (n - 1) * k(n - 2))
    if variant == "leibniz":
        return k(n) * (L - energy_bar) + 2 * n * L * k(n - 1) + n * (n - 1) * L * k(n - 2)
    raise ValueError(variant)


def kappa_normalization(coeffs: TaylorCoeffs, energy_bar, variant: str = "compact", nmax: int | None = None):
    """Ratios ``kappa_q(n) / q_n`` for n = 0..nmax (n! when the conventions agree)."""
    nmax = coeffs.order if nmax is None else nmax
    q = coeffs.q(energy_bar)
    return np.array([kappa_q(coeffs, n, energy_bar, variant) / q[n] for n in range(nmax + 1)])


# ---------------------------------------------------------------------------
# series solution

def _first_row(k: int) -> int:
    # for k = 0 the s = 1 equation reads 0 = 0
    return 2 if k == 0 else 1


def _row(p, q, k: int, s: int, n: int, pivot: bool = True):
    row = np.zeros(n + 1, dtype=np.result_type(p, q))
    if pivot and s <= n:
        row[s] += (s + k) * (s + k - 1)
    for j in range(min(s - 1, n) + 1):
        row[j] += p[s - 1 - j] * (j + k)
    for j in range(min(s - 2, n) + 1):
        row[j] += q[s - 2 - j]
    return row


def frobenius_coeffs(coeffs: TaylorCoeffs, k: int, energy_bar, a0=1.0, N: int | None = None,
                     a1=0.0) -> np.ndarray:
    """Series coefficients ``a_0..a_N`` about eps = 1.

    When a recurrence pivot vanishes with a vanishing right-hand side the
    coefficient is free and set to ``a1``; a nonzero right-hand side signals
    the logarithmic case.
    """
    if a0 == 0:
        raise ValueError("a0 must be nonzero")
    N = coeffs.order + 1 if N is None else N
    if N - 1 > coeffs.order:
        raise ValueError(f"degree {N} series needs Taylor data to order {N - 1}")
    p, q = coeffs.p, coeffs.q(energy_bar)
    a = np.zeros(N + 1, dtype=np.result_type(p, q, complex(a0), complex(a1)))
    a[0] = a0
    for s in range(1, N + 1):
        rhs = sum(p[s - 1 - j] * (j + k) * a[j] for j in range(s))
        rhs += sum(q[s - 2 - j] * a[j] for j in range(s - 1))
        pivot = (s + k) * (s + k - 1)
        if pivot == 0:
            if abs(rhs) > 1e-14 * max(1.0, np.max(np.abs(a[:s]))):
                raise LogarithmicCaseError(s)
            a[s] = a1
        else:
            a[s] = -rhs / pivot
    if np.all(np.imag(a) == 0):
        a = a.real
    return a


def series_value(a: np.ndarray, eps, k: int = 0, derivative: bool = False):
    x = np.asarray(eps) - 1.0
    powers = np.arange(len(a)) + k
    if derivative:
        return sum(c * pw * x ** (pw - 1) for c, pw in zip(a, powers) if pw != 0)
    return sum(c * x ** pw for c, pw in zip(a, powers))


def ode_residual(ode: RadialODE, a: np.ndarray, eps, k: int = 0):
    """Residual of the epsilon-chart equation on the partial sum."""
    ode = transform_epsilon(ode)
    x = eps - 1.0
    pw = np.arange(len(a)) + k
    R = sum(c * x ** j for c, j in zip(a, pw))
    dR = sum(c * j * x ** (j - 1) for c, j in zip(a, pw) if j >= 1)
    d2R = sum(c * j * (j - 1) * x ** (j - 2) for c, j in zip(a, pw) if j >= 2)
    return d2R + ode.P_chain(eps) * dR + ode.Q_chain(eps) * R


# ---------------------------------------------------------------------------
# determinant spectrum

@dataclass(frozen=True)
class SpectrumEntry:
    k: int
    n: int
    l: int
    energy_bar: complex
    energy: float | complex | None = None   # dimensional energy
    residual: float = 0.0                   # |det M| at the root
    scale: float = 1.0                      # Hadamard bound of M at the root
    coefficients: tuple = ()                # null vector, a_0 = 1
    eta_conditions: tuple = ()              # leftover equations (k = 1)
    rejected: bool = False
    note: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def kk_term(self) -> int:
        return self.l * self.l + self.l

    @property
    def remainder(self) -> complex:
        return self.energy_bar - self.kk_term

    @property
    def transition_width(self) -> float:
        return float(np.imag(self.energy_bar))

    @property
    def is_complex(self) -> bool:
        return np.imag(self.energy_bar) != 0


def system_matrices(coeffs: TaylorCoeffs, k: int, n: int, extra_rows: int = 0):
    """``(M_A, M_B)`` with ``M(E) = M_A + E M_B`` (plus ``extra_rows`` further equations)."""
    s0 = _first_row(k)
    if s0 + n + extra_rows - 1 > coeffs.order:
        raise ValueError(f"truncation n={n} needs Taylor data to order {s0 + n + extra_rows - 1}")
    zero = np.zeros_like(coeffs.qB)
    rows = range(s0, s0 + n + 1 + extra_rows)
    MA = np.array([_row(coeffs.p, coeffs.qA, k, s, n) for s in rows])
    MB = np.array([_row(zero, coeffs.qB, k, s, n, pivot=False) for s in rows])
    return MA, MB


def _hadamard(M):
    return float(np.prod([max(np.linalg.norm(row), 1e-300) for row in M]))


def determinant_polynomial(MA, MB, center: float, halfwidth: float):
    """Power-basis coefficients of ``det(M_A + E M_B)`` in ``t = (E - center) / halfwidth``."""
    deg = MA.shape[0]
    nodes = np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))
    vals = np.array([np.linalg.det(MA + (center + halfwidth * t) * MB) for t in nodes])
    scale = max(_hadamard(MA + (center + halfwidth * t) * MB) for t in nodes)
    if np.max(np.abs(vals)) <= 1e-13 * scale:
        raise StructuralDegeneracyError("truncated determinant vanishes identically in E_bar")
    cheb = C.chebfit(nodes, vals, deg)
    return C.cheb2poly(cheb), scale


def companion_roots(coeffs) -> np.ndarray:
    """Roots of ``sum c_j t^j`` via eigenvalues of the companion matrix."""
    c = np.array(coeffs)
    big = np.max(np.abs(c))
    while len(c) > 1 and abs(c[-1]) <= 1e-12 * big:
        c = c[:-1]
    d = len(c) - 1
    if d < 1:
        return np.array([])
    comp = np.zeros((d, d), dtype=c.dtype)
    comp[1:, :-1] = np.eye(d - 1)
    comp[:, -1] = -c[:-1] / c[-1]
    return np.linalg.eigvals(comp)


def _polish(MA, MB, z):
    best = z
    best_val = abs(np.linalg.det(MA + z * MB))
    for _ in range(4):
        M = MA + best * MB
        try:
            tr = np.trace(np.linalg.solve(M, MB))
        except np.linalg.LinAlgError:
            break
        if tr == 0:
            break
        cand = best - 1.0 / tr
        val = abs(np.linalg.det(MA + cand * MB))
        if not val < best_val:
            break
        best, best_val = cand, val
    return best


def _snap(z):
    z = complex(z)
    if abs(z.imag) < REAL_SNAP * max(abs(z.real), 1.0):
        return z.real
    return z


def _merge_clusters(roots, halfwidth: float, tol: float = CLUSTER_TOL):
    """Replace each group of numerically coincident roots by its mean.

    A root of multiplicity m is only resolved to about eps**(1/m) by the
    companion matrix; the mean of the group is accurate to rounding.
    """
    roots = [complex(z) for z in roots]
    out = []
    used = [False] * len(roots)
    for i, z in enumerate(roots):
        if used[i]:
            continue
        group = [z]
        used[i] = True
        for j in range(i + 1, len(roots)):
            if not used[j] and abs(roots[j] - z) < tol * max(abs(z), halfwidth):
                group.append(roots[j])
                used[j] = True
        mean = sum(group) / len(group)
        if abs(mean) < 1e-14 * halfwidth:
            mean = 0j
        out.extend([mean] * len(group))
    return out


def null_vector(M) -> np.ndarray:
    _, _, vh = np.linalg.svd(M)
    v = vh[-1].conj()
    pivot = v[0] if abs(v[0]) > 1e-12 * np.max(np.abs(v)) else v[np.argmax(np.abs(v))]
    v = v / pivot
    if np.all(np.abs(np.imag(v)) < 1e-14):
        v = v.real
    return v


def determinant_spectrum(coeffs: TaylorCoeffs, k: int, n: int, energy_scale: float | None = None,
                         with_conditions: bool = True) -> list[SpectrumEntry]:
    """Energies ``E_bar`` at which the truncated series system has a nontrivial solution."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    MA, MB = system_matrices(coeffs, k, n)
    L = coeffs.l * (coeffs.l + 1)
    center, halfwidth = float(L), 1.0 + L
    if MA.shape == (1, 1):
        # single equation: solve the affine condition directly
        if MB[0, 0] == 0:
            if MA[0, 0] == 0:
                raise StructuralDegeneracyError("truncated determinant vanishes identically in E_bar")
            roots = []
        else:
            roots = [-MA[0, 0] / MB[0, 0]]
    else:
        poly, _ = determinant_polynomial(MA, MB, center, halfwidth)
        roots = [_polish(MA, MB, center + halfwidth * t) for t in companion_roots(poly)]
    entries = []
    for z in _merge_clusters(roots, halfwidth):
        z = _snap(z)
        M = MA + z * MB
        det = abs(np.linalg.det(M))
        scale = _hadamard(np.abs(MA) + abs(z) * np.abs(MB))
        a = null_vector(M)
        conditions = ()
        if with_conditions and k >= 1 and coeffs.order >= _first_row(k) + n:
            nxt = _row(coeffs.p, coeffs.q(z), k, _first_row(k) + n + 1, n)
            conditions = (complex(np.dot(nxt, a)),)
        entries.append(SpectrumEntry(
            k=k, n=n, l=coeffs.l, energy_bar=z,
            energy=None if energy_scale is None else z * energy_scale,
            residual=det, scale=scale, coefficients=tuple(a), eta_conditions=conditions))
        if det > RESIDUAL_TOL * scale:
            log.warning("root E_bar=%s has determinant residual %.3g (scale %.3g)", z, det, scale)
    entries.sort(key=lambda e: (np.real(e.energy_bar), np.imag(e.energy_bar)))
    if k == 0 and n == 0:
        entries.append(rejected_branch(coeffs, energy_scale))
    return entries


def rejected_branch(coeffs: TaylorCoeffs, energy_scale=None) -> SpectrumEntry:
    """The E_bar-independent factor of ``q_0``: ``1 + eta_bar'(1)**2 = 0``."""
    factor = 1 + coeffs.eta_prime ** 2
    return SpectrumEntry(
        k=0, n=0, l=coeffs.l, energy_bar=math.nan,
        energy=None if energy_scale is None else math.nan,
        residual=float(abs(factor)), scale=1.0, rejected=True,
        note=("continuous branch 1 + eta_bar'(1)^2 = 0, i.e. eta_bar'(1) = exp(i pi (z + 1/2)) "
              "(often stated as a condition on eta_bar(1)); rejected: causes divergence at eps_1"),
        diagnostics={"factor_at_profile": complex(factor), "eta_prime_at_boundary": complex(coeffs.eta_prime)})


def first_excited(coeffs: TaylorCoeffs, energy_scale: float | None = None) -> SpectrumEntry:
    """Lowest k = 1, n = 1 root, with two closed forms as diagnostics."""
    entries = [e for e in determinant_spectrum(coeffs, 1, 1, energy_scale) if not e.rejected]
    if not entries:
        raise StructuralDegeneracyError("no k=1, n=1 root")
    lowest = entries[0]
    L = coeffs.l * (coeffs.l + 1)
    g = 1 + coeffs.eta_prime ** 2
    closed = L - (coeffs.p[0] + coeffs.p[1]) / g
    diag = dict(lowest.diagnostics)
    diag["compact_closed_form"] = complex(closed)
    diag["determinant_closed_form"] = complex(L + (coeffs.p[0] ** 2 - coeffs.p[1]) / g)
    return SpectrumEntry(**{**lowest.__dict__, "diagnostics": diag})


# ---------------------------------------------------------------------------
# boundary consistency conditions

@dataclass(frozen=True)
class EtaCondition:
    energy_bar: complex | None
    coefficients: tuple
    residual: complex


def eta_boundary_conditions(coeffs: TaylorCoeffs, order: int = 2, k: int = 1) -> list[EtaCondition]:
    """Leftover equations of the overdetermined k = 1 system.

    At ``order`` the series is cut after ``a_(order-1)``; the first ``order``
    equations fix the coefficients and the energy, and the next equation is
    returned as a residual per energy root.  The residual is a condition on
    the boundary derivatives of the window function.
    """
    if order < 2:
        raise ValueError("order must be at least 2")
    n = order - 1
    MA, MB = system_matrices(coeffs, k, n, extra_rows=1)
    square_A, square_B = MA[:-1], MB[:-1]
    try:
        entries = determinant_spectrum(coeffs, k, n, with_conditions=False)
        roots = [e.energy_bar for e in entries if not e.rejected]
    except StructuralDegeneracyError:
        roots = [None]
    out = []
    for z in roots:
        zz = 0.0 if z is None else z
        a = null_vector(square_A + zz * square_B)
        res = complex(np.dot(MA[-1] + zz * MB[-1], a))
        if z is None and abs(res) <= 1e-14 * max(1.0, np.linalg.norm(MA[-1])):
            continue
        out.append(EtaCondition(z, tuple(a), res))
    return out


def close_boundary_conditions(profile: TaylorAtBoundary, l: int, bracket, index: int = 2,
                              order: int = 2, root: int = 0) -> TaylorAtBoundary:
    """Choose boundary coefficient ``c_index`` so that a leftover condition vanishes.

    ``bracket = (lo, hi)`` must enclose a sign change of the real residual of
    energy root number ``root``.
    """
    def residual(c):
        trial = profile.with_coefficient(index, c)
        conds = eta_boundary_conditions(taylor_coeffs(epsilon_ode(trial, l, 0.0), order + 1), order)
        return float(np.real(conds[root].residual))

    c = brentq(residual, *bracket, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return profile.with_coefficient(index, c)


# ---------------------------------------------------------------------------
# sweep

@dataclass(frozen=True)
class SweepResult:
    entries: list
    energy_unit: float        # hbar^2 / (2 m rho_c^2)
    omega: float              # hbar / (2 m rho_c^2)
    casimir_scale: float      # hbar / rho_c^3


def _sweep_one(args):
    profile, l, k, n, order, unit = args
    coeffs = taylor_coeffs(epsilon_ode(profile, l, 0.0), order)
    try:
        return determinant_spectrum(coeffs, k, n, unit)
    except StructuralDegeneracyError as exc:
        return [SpectrumEntry(k=k, n=n, l=l, energy_bar=math.nan, energy=None if unit is None else math.nan,
                              note=f"degenerate: {exc}")]


def spectrum_sweep(profile: EtaProfile, l_values, ks=(0, 1), n_values=(DEFAULT_TRUNCATION,),
                   constants: Constants | None = None, workers: int | None = None) -> SweepResult:
    """Spectrum entries for every ``(l, k, n)``, sorted deterministically."""
    constants = constants or Constants()
    rc = profile.rho_c
    unit = constants.hbar ** 2 / (2 * constants.m * rc ** 2)
    jobs = [(profile, int(l), int(k), int(n), int(n) + 1, unit)
            for l in l_values for k in ks for n in n_values]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    entries = [e for batch in results for e in batch]
    entries.sort(key=lambda e: (e.l, e.k, e.n, e.rejected, _sort_key(e.energy_bar)))
    return SweepResult(entries, unit, constants.hbar / (2 * constants.m * rc ** 2),
                       constants.hbar / rc ** 3)


def _sort_key(z):
    z = complex(z)
    if math.isnan(z.real):
        return (math.inf, 0.0)
    return (z.real, z.imag)
