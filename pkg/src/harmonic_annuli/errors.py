"""Exception types shared across the package."""


class NumericFailure(ArithmeticError):
    """A computation produced (or would produce) non-finite values."""


class ProfileOverflowError(NumericFailure):
    """cosh/sinh of the profile exponent is not representable as a float."""


class UndefinedCurvatureError(ValueError):
    """Principal curvatures requested where the profile radius vanishes."""


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""
