"""Exception hierarchy.

Two families matter to callers: :class:`DomainError` (bad names or
inadmissible input, CLI exit code 2) and :class:`NumericalError` (a
computation broke down, CLI exit code 3).
"""


class VolterraError(Exception):
    """Base class for all package errors."""


class DomainError(VolterraError, ValueError):
    pass


class NumericalError(VolterraError, ArithmeticError):
    pass


class UnknownMethod(DomainError):
    pass


class UnknownProblem(DomainError):
    pass


class MethodNotAdmitted(DomainError):
    """Method fails nullstability, the Schur condition on sigma, or p0 <= m."""


class NotSchur(MethodNotAdmitted):
    pass


class Inconsistent(DomainError):
    """Method does not even have order one."""


class LengthMismatch(DomainError):
    pass


class ZeroConstantTerm(DomainError):
    pass


class EmptyLadder(DomainError):
    """Noise too large for any admissible step ladder."""


class SingularMatrix(NumericalError):
    pass


class SingularSystem(SingularMatrix):
    pass


class SingularStartSystem(SingularMatrix):
    pass


class NoConvergence(NumericalError):
    pass


class TailNotConverged(NumericalError):
    pass


class DiagonalKernelTooSmall(NumericalError):
    pass
