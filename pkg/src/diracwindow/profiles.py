"""
Window distribution profiles.

A profile is the dimensionless window function ``eta_bar = eta / rho_c`` in one
of three charts:

* ``"epsilon"`` -- as a function of the inverse radius ``eps = rho_c / r``,
* ``"r"``       -- as a function of the (dimensional) radius ``r``,
* ``"window"``  -- as a function of the window radius ``rho`` (interior only).

``eval(x, max_order)`` returns ``[f(x), f'(x), ..., f^(max_order)(x)]`` with all
derivatives computed in closed form by Taylor-jet arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import sympy as sp

from . import taylor
from .errors import DomainError, EtaOrderError

DERIVATIVE_CAP = 10

CHARTS = ("epsilon", "r", "window")


@dataclass(frozen=True)
class EtaProfile:
    """Base class; subclasses implement :meth:`_jet`."""

    chart: str = "epsilon"
    rho_c: float = 1.0
    cap: int = DERIVATIVE_CAP

    def __post_init__(self):
        if self.chart not in CHARTS:
            raise ValueError(f"unknown chart {self.chart!r}")
        if not self.rho_c > 0:
            raise ValueError("rho_c must be positive")

    def eval(self, x, max_order: int = 0) -> np.ndarray:
        if max_order > self.cap:
            raise EtaOrderError(max_order, self.cap)
        self._check_domain(x)
        return taylor.to_derivatives(self._jet(x, max_order))

    def jet(self, x, order: int) -> np.ndarray:
        """Taylor coefficients about ``x`` up to ``order``."""
        if order > self.cap:
            raise EtaOrderError(order, self.cap)
        self._check_domain(x)
        return self._jet(x, order)

    def __call__(self, x):
        return self.eval(x, 0)[0]

    def _check_domain(self, x):
        pass

    def _jet(self, x, order):
        raise NotImplementedError

    def describe(self) -> dict:
        """Variant name and parameters, suitable for a config echo."""
        raise NotImplementedError


@dataclass(frozen=True)
class ZeroProfile(EtaProfile):
    def _jet(self, x, order):
        return np.zeros(order + 1, dtype=np.result_type(float, np.asarray(x)))

    def describe(self):
        return {"variant": "zero", "parameters": {}, "chart": self.chart, "rho_c": self.rho_c}


@dataclass(frozen=True)
class ConstantProfile(EtaProfile):
    value: float = 0.0

    def _jet(self, x, order):
        c = np.zeros(order + 1, dtype=np.result_type(float, np.asarray(x), np.asarray(self.value)))
        c[0] = self.value
        return c

    def describe(self):
        return {"variant": "constant", "parameters": {"value": self.value},
                "chart": self.chart, "rho_c": self.rho_c}


@dataclass(frozen=True)
class InteriorQuadratic(EtaProfile):
    """``eta_1(rho) = rho**2 + alpha rho_c rho + beta rho_c**2`` inside the window.

    Values are returned as is (units of length squared); nothing downstream
    consumes this variant.
    """

    chart: str = "window"
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        if self.chart != "window":
            raise ValueError("InteriorQuadratic lives in the window chart")

    def _check_domain(self, x):
        if np.real(x) < 0:
            raise DomainError(f"window radius must be nonnegative, got {x}")

    def _jet(self, x, order):
        rc = self.rho_c
        c = np.zeros(max(order, 2) + 1, dtype=np.result_type(float, np.asarray(x)))
        c[0] = x * x + self.alpha * rc * x + self.beta * rc * rc
        c[1] = 2 * x + self.alpha * rc
        c[2] = 1.0
        return c[:order + 1]

    def describe(self):
        return {"variant": "interior_quadratic", "parameters": {"alpha": self.alpha, "beta": self.beta},
                "chart": self.chart, "rho_c": self.rho_c}


@dataclass(frozen=True)
class DampedOscillatory(EtaProfile):
    """``eta_bar(eps) = eps * exp(-beta eps) * sin(alpha / eps)``.

    Essential singularity at ``eps = 0``; evaluation there is refused.
    """

    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if self.chart != "epsilon":
            raise ValueError("DampedOscillatory is defined in the epsilon chart")

    def _check_domain(self, x):
        if np.real(x) <= 0:
            raise DomainError(f"damped oscillatory profile has a fundamental singularity at eps=0; got eps={x}")

    def _jet(self, x, order):
        e = taylor.variable(x, order)
        s, _ = taylor.sincos(self.alpha * taylor.reciprocal(e))
        damp = taylor.exp(-self.beta * e)
        return taylor.mul(taylor.mul(e, damp), s)

    def describe(self):
        return {"variant": "damped_oscillatory", "parameters": {"alpha": self.alpha, "beta": self.beta},
                "chart": self.chart, "rho_c": self.rho_c}


@dataclass(frozen=True)
class TaylorAtBoundary(EtaProfile):
    """Polynomial ``eta_bar(eps) = sum c_j (eps - 1)**j`` given by its boundary data."""

    coefficients: tuple = (0.0,)

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "coefficients", tuple(self.coefficients))
        if self.chart != "epsilon":
            raise ValueError("TaylorAtBoundary is defined in the epsilon chart")

    @property
    def boundary_value(self):
        return self.coefficients[0]

    def _jet(self, x, order):
        # re-expand about x: coefficients of (x - 1 + h)^j
        poly = np.polynomial.Polynomial(self.coefficients)
        out = np.zeros(order + 1, dtype=np.result_type(float, np.asarray(x), np.asarray(self.coefficients)))
        d = poly
        fact = 1.0
        for k in range(order + 1):
            out[k] = d(x - 1.0) / fact
            d = d.deriv()
            fact *= k + 1
        return out

    def with_coefficient(self, index: int, value) -> TaylorAtBoundary:
        coeffs = list(self.coefficients) + [0.0] * max(0, index + 1 - len(self.coefficients))
        coeffs[index] = value
        return TaylorAtBoundary(chart=self.chart, rho_c=self.rho_c, cap=self.cap, coefficients=tuple(coeffs))

    def describe(self):
        return {"variant": "taylor_at_boundary", "parameters": {"coefficients": list(self.coefficients)},
                "chart": self.chart, "rho_c": self.rho_c}


@dataclass(frozen=True)
class ExpressionProfile(EtaProfile):
    """User-defined profile from a formula in the variable ``x``.

    The formula is parsed by sympy and differentiated symbolically; e.g.
    ``ExpressionProfile(expression="sin(x)", chart="r")``.
    """

    expression: str = "0"

    @cached_property
    def _functions(self):
        x = sp.Symbol("x")
        expr = sp.sympify(self.expression, locals={"x": x})
        if expr.free_symbols - {x}:
            raise ValueError(f"profile expression may only use x, got {expr.free_symbols}")
        derivs = [expr]
        for _ in range(self.cap):
            derivs.append(sp.diff(derivs[-1], x))
        return [sp.lambdify(x, d, modules=["numpy"]) for d in derivs]

    def _jet(self, x, order):
        vals = [complex(f(x)) if np.iscomplexobj(x) else float(np.real_if_close(f(x)))
                for f in self._functions[:order + 1]]
        return taylor.from_derivatives(np.array(vals))

    def describe(self):
        return {"variant": "expression", "parameters": {"expression": self.expression},
                "chart": self.chart, "rho_c": self.rho_c}


@dataclass(frozen=True)
class Reparameterized(EtaProfile):
    """``base`` seen in the other radial chart via ``eps = rho_c / r``.

    Derivative arrays are transported exactly by composing Taylor jets, so
    ``d/dr = -(eps**2 / rho_c) d/deps`` and its higher-order analogues hold to
    rounding.
    """

    base: EtaProfile = field(default_factory=ZeroProfile)

    def __post_init__(self):
        super().__post_init__()
        if {self.chart, self.base.chart} != {"epsilon", "r"}:
            raise ValueError("reparameterization maps between the epsilon and r charts only")

    def _check_domain(self, x):
        if np.real(x) <= 0:
            raise DomainError(f"{self.chart}={x} maps to the point at infinity")
        self.base._check_domain(self.rho_c / x)

    def _jet(self, x, order):
        # both maps are y = rho_c / x
        inner = self.rho_c * taylor.reciprocal(taylor.variable(x, order))
        outer = self.base._jet(inner[0], order)
        return taylor.compose(outer, inner)

    def describe(self):
        return self.base.describe()


def to_epsilon(profile: EtaProfile) -> EtaProfile:
    if profile.chart == "epsilon":
        return profile
    if profile.chart == "window":
        raise ValueError("interior (window chart) profiles have no radial representation")
    return Reparameterized(chart="epsilon", rho_c=profile.rho_c, cap=profile.cap, base=profile)


def to_r(profile: EtaProfile) -> EtaProfile:
    if profile.chart == "r":
        return profile
    if profile.chart == "window":
        raise ValueError("interior (window chart) profiles have no radial representation")
    return Reparameterized(chart="r", rho_c=profile.rho_c, cap=profile.cap, base=profile)


def boundary_normalized(profile: EtaProfile, boundary_value: float) -> EtaProfile:
    """Rescale an epsilon-chart profile so that ``eta_bar(1) = boundary_value``."""
    eps_profile = to_epsilon(profile)
    current = eps_profile(1.0)
    if current == 0:
        raise DomainError("profile vanishes at the boundary and cannot be normalized")
    return _Scaled(chart=eps_profile.chart, rho_c=eps_profile.rho_c, cap=eps_profile.cap,
                   base=eps_profile, factor=boundary_value / current)


@dataclass(frozen=True)
class _Scaled(EtaProfile):
    base: EtaProfile = field(default_factory=ZeroProfile)
    factor: float = 1.0

    def _check_domain(self, x):
        self.base._check_domain(x)

    def _jet(self, x, order):
        return self.factor * self.base._jet(x, order)

    def describe(self):
        d = self.base.describe()
        d["scale"] = self.factor
        return d


VARIANTS = {
    "zero": ZeroProfile,
    "constant": ConstantProfile,
    "interior_quadratic": InteriorQuadratic,
    "damped_oscillatory": DampedOscillatory,
    "taylor_at_boundary": TaylorAtBoundary,
    "expression": ExpressionProfile,
}


def make_profile(variant: str, parameters: dict | None = None, rho_c: float = 1.0,
                 chart: str | None = None, normalize_to: float | None = None) -> EtaProfile:
    """Construct a profile from a variant name and parameter map."""
    try:
        cls = VARIANTS[variant]
    except KeyError:
        raise ValueError(f"unknown profile variant {variant!r}; expected one of {sorted(VARIANTS)}") from None
    kwargs = dict(parameters or {})
    if "coefficients" in kwargs:
        kwargs["coefficients"] = tuple(kwargs["coefficients"])
    if chart is not None:
        kwargs["chart"] = chart
    profile = cls(rho_c=rho_c, **kwargs)
    if normalize_to is not None:
        profile = boundary_normalized(profile, normalize_to)
    return profile
