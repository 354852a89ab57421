"""Exception hierarchy shared by all modules."""


class CoupledSolveError(Exception):
    """Base class for every error raised by the package."""


class ParseError(CoupledSolveError, ValueError):
    pass


class IrreducibleDegreeTooHigh(CoupledSolveError):
    """Exact roots were requested for an irreducible factor of degree >= 3."""

    def __init__(self, factor):
        self.factor = factor
        super().__init__(f"no exact roots for irreducible factor {factor} of degree {factor.degree()}")


class MixedFieldError(CoupledSolveError, ValueError):
    """Two different quadratic extensions met in one arithmetic operation."""


class EvalPole(CoupledSolveError, ZeroDivisionError):
    """An expression was evaluated at a pole or outside its domain."""


class NotHarmonicReducible(CoupledSolveError):
    pass


class EmptyWindow(CoupledSolveError):
    """No common epsilon orders survive a truncated Laurent operation."""


class DegenerateSystem(CoupledSolveError):
    pass


class PivotFailure(CoupledSolveError):
    pass


class NonPolynomialRhs(CoupledSolveError):
    pass


class InsufficientInitialValues(CoupledSolveError):
    def __init__(self, indices, message=None):
        self.indices = sorted(set(indices))
        super().__init__(message or f"initial values needed at N = {self.indices}")


class OutsideClass(CoupledSolveError):
    """A recurrence has no d'Alembertian solution reachable over the chosen field."""

    def __init__(self, message, residual_order=None, order=None):
        self.residual_order = residual_order
        self.order = order
        super().__init__(message)


class MismatchDetected(CoupledSolveError):
    pass


class InvariantViolation(CoupledSolveError):
    pass
