"""Exception types raised across the package."""


class InputError(ValueError):
    """An argument violates a documented precondition."""


class UnsupportedOperationError(NotImplementedError):
    """The operation has no implementation for this kernel or grid pairing."""


class NumericError(ArithmeticError):
    """A numerical quantity degenerated (zero denominator, no positive singular value)."""
