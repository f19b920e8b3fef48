"""Exception types shared across the package."""

from __future__ import annotations


class NumericalError(ArithmeticError):
    """An iterative routine failed to reach its tolerance.

    Attributes
    ----------
    residual : float
        The last residual seen before giving up.
    """

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = float(residual)


class BoundViolation(AssertionError):
    """A Monte-Carlo estimate exceeded its theoretical bound."""
