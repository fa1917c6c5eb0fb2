"""
Constrained quantization of a test particle coupled to a two-dimensional
window: Dirac brackets, the deformed radial wave equation and its Frobenius
spectrum about the window boundary.
"""

__version__ = "0.1.0"

from .errors import (ClassificationInconclusive, ConfigError, DiracWindowError, DomainError,  # noqa: E402
                     EtaOrderError, IntegrationFailure, IrregularPointError, LogarithmicCaseError,
                     SecondClassError, SingularEvaluationError, StructuralDegeneracyError)
from .profiles import (ConstantProfile, DampedOscillatory, EtaProfile, ExpressionProfile,  # noqa: E402
                       InteriorQuadratic, TaylorAtBoundary, ZeroProfile, make_profile, to_epsilon, to_r)
from .radial import Constants, RadialODE, build_radial, classify, epsilon_ode, integrate_numeric  # noqa: E402
from .spectrum import (determinant_spectrum, eta_boundary_conditions, first_excited,  # noqa: E402
                       frobenius_coeffs, spectrum_sweep, taylor_coeffs)
