"""Exception hierarchy shared by every finq module."""


class FinqError(Exception):
    """Base class for all finq errors."""


class InputError(FinqError):
    """Malformed or inconsistent user input (bad JSON, wrong shapes, dangling names)."""


class NumericalError(FinqError):
    """A numerical precondition failed, e.g. a matrix that should be positive is not."""


class StructureError(FinqError):
    """The data does not define the claimed algebraic structure."""


class TheoremViolation(FinqError):
    """An identity that must hold for valid input failed beyond tolerance.

    This always points at a bug, never at bad input.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
