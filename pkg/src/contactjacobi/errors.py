"""Exception hierarchy shared by every module."""


class ContactJacobiError(Exception):
    pass


class ExpressionSyntaxError(ContactJacobiError):
    def __init__(self, message, column):
        super().__init__(f"{message} at column {column}")
        self.column = column


class UnknownVariableError(ContactJacobiError):
    def __init__(self, name):
        super().__init__(f"unknown variable {name!r}")
        self.name = name


class DomainError(ContactJacobiError):
    """Evaluation left the domain of a subexpression (division by zero, sqrt of a negative, ...)."""

    def __init__(self, message, subexpression=None):
        super().__init__(message)
        self.subexpression = subexpression


class ChartMismatchError(ContactJacobiError):
    pass


class DegeneracyError(ContactJacobiError):
    """The contact condition fails at a point (Reeb/bivector solve is not well posed)."""


class PreconditionError(ContactJacobiError, ValueError):
    pass


class SingularJacobianError(ContactJacobiError):
    pass


class ConvergenceError(ContactJacobiError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual
