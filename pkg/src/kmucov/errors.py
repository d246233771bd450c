"""Exception types raised by the numerical kernels."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class ConvergenceError(ArithmeticError):
    """A series or continued fraction hit its term cap before converging."""


class TruncationError(ArithmeticError):
    """A mixture or derivative order cap was reached before the requested tolerance."""


class MethodError(ValueError):
    """The requested coverage method does not apply to the given model."""
