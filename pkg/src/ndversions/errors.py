"""Exception types shared across the package."""


class ArgumentError(ValueError):
    """Invalid input to a public operation."""


class NumericalError(ArithmeticError):
    """A numerical procedure failed to reach its stated accuracy."""


class UnsupportedOperationError(NotImplementedError):
    """The operation is not defined for the given object (e.g. a non-smooth body)."""
