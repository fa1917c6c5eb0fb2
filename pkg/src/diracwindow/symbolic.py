"""
Symbolic core over the (3+2)d canonical phase space.

Expressions are sympy expressions over the ten canonical symbols, the model
parameters and the opaque window function ``eta`` of the radius.  Derivatives
of ``eta`` appear as ``Derivative(eta(r), (r, k))`` and are bounded by
:data:`MAX_ETA_ORDER`.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import sympy as sp

from .errors import EtaOrderError, SingularEvaluationError

MAX_ETA_ORDER = 10


@dataclass(frozen=True)
class CanonicalVar:
    name: str
    kind: str  # "coordinate" | "momentum"
    pair_index: int
    symbol: sp.Symbol

    def __str__(self):
        return self.name


_COORDS = ("r", "theta", "phi", "rho", "sigma")

r, theta, phi, rho, sigma = sp.symbols(_COORDS, real=True)
p_r, p_theta, p_phi, p_rho, p_sigma = sp.symbols(tuple("p_" + c for c in _COORDS), real=True)

COORDINATES = (r, theta, phi, rho, sigma)
MOMENTA = (p_r, p_theta, p_phi, p_rho, p_sigma)

CANONICAL_VARS = tuple(
    [CanonicalVar(str(q), "coordinate", i + 1, q) for i, q in enumerate(COORDINATES)]
    + [CanonicalVar(str(p), "momentum", i + 1, p) for i, p in enumerate(MOMENTA)]
)
PHASE_SPACE = COORDINATES + MOMENTA

hbar, m, rho_c, E, l, alpha, beta = sp.symbols("hbar m rho_c E l alpha beta", positive=True)
lambda1, lambda2 = sp.symbols("lambda1 lambda2")
PARAMS = (hbar, m, rho_c, E, l, alpha, beta)

eta = sp.Function("eta", real=True)


def var(name: str) -> sp.Symbol:
    for v in CANONICAL_VARS:
        if v.name == name:
            return v.symbol
    raise KeyError(name)


def eta_deriv(order: int, arg=r):
    """``eta^(order)(arg)``."""
    if order > MAX_ETA_ORDER:
        raise EtaOrderError(order, MAX_ETA_ORDER)
    f = eta(arg)
    return f if order == 0 else sp.Derivative(f, (arg, order))


def eta_orders(e) -> set[int]:
    """Derivative orders of ``eta`` present in ``e``."""
    orders = set()
    for node in sp.preorder_traversal(e):
        if isinstance(node, sp.Derivative) and node.expr.func == eta:
            orders.add(int(node.derivative_count))
        elif getattr(node, "func", None) == eta:
            orders.add(0)
    return orders


def _check_orders(e):
    orders = eta_orders(e)
    if orders and max(orders) > MAX_ETA_ORDER:
        raise EtaOrderError(max(orders), MAX_ETA_ORDER)
    return e


def normalize(e):
    """Canonical rational normal form.

    Sums and products are ordered by sympy's canonical ordering and like terms
    collected; numerator and denominator are expanded and freed of common
    factors.  Idempotent.
    """
    e = sp.sympify(e)
    if e.is_number:
        return sp.nsimplify(e) if e.is_Float else sp.cancel(e)
    return sp.cancel(sp.expand(e))


def equal(a, b) -> bool:
    """Structural equality after normalization."""
    return normalize(sp.sympify(a) - sp.sympify(b)) == 0


def differentiate(e, v):
    v = v.symbol if isinstance(v, CanonicalVar) else v
    return _check_orders(sp.diff(e, v))


def poisson_bracket(a, b):
    """``sum_i (da/dq_i db/dp_i - da/dp_i db/dq_i)``, normalized."""
    a, b = sp.sympify(a), sp.sympify(b)
    total = sp.Integer(0)
    for q, p in zip(COORDINATES, MOMENTA):
        total += differentiate(a, q) * differentiate(b, p) - differentiate(a, p) * differentiate(b, q)
    return normalize(total)


def strong_substitutions(window_factor=sp.sqrt(2), winding: int = 0) -> dict:
    """Solved constraints: window variables in terms of the 3d ones."""
    return {
        rho: window_factor * eta_deriv(0),
        sigma: sp.pi / 4 + 2 * sp.pi * winding,
        p_sigma: sp.Integer(0),
        p_rho: window_factor * eta_deriv(1) * p_r,
    }


def substitute_strong(e, window_factor=sp.sqrt(2), winding: int = 0):
    return normalize(sp.sympify(e).subs(strong_substitutions(window_factor, winding), simultaneous=True))


def planck_function_expr(window_factor=1):
    """``hbar / (1 + w**2 eta'(r)**2)``."""
    return hbar / (1 + window_factor ** 2 * eta_deriv(1) ** 2)


def anomaly_expr():
    """Order-hbar**2 term of the radial-momentum commutator."""
    e1, e2, e3 = eta_deriv(1), eta_deriv(2), eta_deriv(3)
    hr = planck_function_expr(1)
    return sp.Rational(1, 2) * hr ** 2 * (e3 - 2 * e1 * e2 ** 2 / (1 + e1 ** 2))


# ---------------------------------------------------------------------------
# numeric evaluation

def eval_numeric(e, point: dict, profile=None, params: dict | None = None) -> complex:
    """Evaluate ``e`` at a phase-space point.

    ``point`` maps canonical symbols (or their names) to values; ``params``
    does the same for model parameters.  ``profile`` supplies derivatives of
    the window function in the r chart; values are scaled by ``rho_c`` to
    obtain the dimensional ``eta``.
    """
    env = {}
    for key, val in {**(params or {}), **point}.items():
        sym = key if isinstance(key, sp.Symbol) else sp.Symbol(key, **_assumptions(key))
        env[sym] = complex(val)
    orders = eta_orders(e)
    derivs = None
    if orders:
        if profile is None:
            raise ValueError("expression contains eta but no profile was given")
        if r not in env:
            raise ValueError("eta requires a value for r")
        from .profiles import to_r
        prof = to_r(profile)
        rv = env[r].real if env[r].imag == 0 else env[r]
        derivs = prof.rho_c * prof.eval(rv, max(orders))
    return _Evaluator(env, derivs).run(sp.sympify(e))


def _assumptions(name):
    for s in PHASE_SPACE + PARAMS + (lambda1, lambda2):
        if s.name == name:
            return s.assumptions0
    return {}


class _Evaluator:
    def __init__(self, env, derivs):
        self.env = env
        self.derivs = derivs

    def run(self, e):
        if e.is_Number:
            return complex(e)
        if e is sp.pi:
            return complex(cmath.pi)
        if e is sp.I:
            return 1j
        if e is sp.E:
            return complex(cmath.e)
        if e.is_Symbol:
            try:
                return self.env[e]
            except KeyError:
                raise ValueError(f"unbound symbol {e}") from None
        if isinstance(e, sp.Derivative) and e.expr.func == eta:
            return complex(self.derivs[int(e.derivative_count)])
        if e.func == eta:
            return complex(self.derivs[0])
        if e.is_Add:
            return sum((self.run(a) for a in e.args), 0j)
        if e.is_Mul:
            out = 1 + 0j
            for a in e.args:
                out *= self.run(a)
            return out
        if e.is_Pow:
            base = self.run(e.base)
            exp = e.exp
            if base == 0 and (exp.is_negative or (not exp.is_number and self.run(exp).real < 0)):
                raise SingularEvaluationError(e)
            if exp.is_Integer:
                return base ** int(exp)
            return base ** self.run(exp)
        fn = _FUNCTIONS.get(e.func)
        if fn is not None:
            return fn(*(self.run(a) for a in e.args))
        raise NotImplementedError(f"cannot evaluate {e.func}")


_FUNCTIONS = {
    sp.sin: cmath.sin,
    sp.cos: cmath.cos,
    sp.tan: cmath.tan,
    sp.exp: cmath.exp,
    sp.log: cmath.log,
}
