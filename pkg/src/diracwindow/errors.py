"""Exception hierarchy shared by all layers of the toolkit."""


class DiracWindowError(Exception):
    """Base class for every error raised by this package."""


class EtaOrderError(DiracWindowError):
    """A derivative of the window function beyond the configured cap was requested."""

    def __init__(self, order: int, cap: int):
        super().__init__(f"eta derivative of order {order} exceeds the cap of {cap}")
        self.order = order
        self.cap = cap


class SingularEvaluationError(DiracWindowError):
    """Numeric evaluation hit a division by zero."""

    def __init__(self, subexpression, message: str | None = None):
        super().__init__(message or f"singular evaluation at subexpression {subexpression}")
        self.subexpression = subexpression


class DomainError(DiracWindowError):
    """A profile was evaluated outside its domain."""


class SecondClassError(DiracWindowError):
    """The constraint bracket matrix is singular: the set is not second-class."""


class ClassificationInconclusive(DiracWindowError):
    """Growth-exponent probing near a point did not settle."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


class IntegrationFailure(DiracWindowError):
    """The adaptive integrator could not reach the target point."""

    def __init__(self, message: str, location: float):
        super().__init__(f"{message} (at eps={location!r})")
        self.location = location


class LogarithmicCaseError(DiracWindowError):
    """Frobenius recurrence pivot vanished with a nonzero right-hand side."""

    def __init__(self, index: int):
        super().__init__(f"resonant Frobenius exponents: recurrence pivot vanishes at index {index}; "
                         "the logarithmic solution is not implemented")
        self.index = index


class StructuralDegeneracyError(DiracWindowError):
    """The truncated determinant vanishes identically in the energy."""


class IrregularPointError(DiracWindowError):
    """Frobenius machinery was requested at an irregular singular point."""

    def __init__(self, report):
        super().__init__(f"point eps={report.point} is {report.classification}; no Frobenius exponents")
        self.report = report


class ConfigError(DiracWindowError):
    """Invalid run configuration; ``path`` names the offending key."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
