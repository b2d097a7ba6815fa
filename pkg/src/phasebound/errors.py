"""Exception hierarchy.

Two families matter to callers: ``PreconditionError`` (bad inputs, or a
question the method cannot answer for this potential) and ``NumericalError``
(the solver ran but could not deliver a trustworthy answer). The CLI maps
them to exit codes 2 and 1.
"""


class PhaseboundError(Exception):
    """Base class for all package errors."""


class PreconditionError(PhaseboundError, ValueError):
    pass


class NumericalError(PhaseboundError, RuntimeError):
    pass


# potentials
class InvalidParams(PreconditionError):
    pass


class EvalAtSingularity(PreconditionError):
    pass


class QuadratureFailure(NumericalError):
    pass


class NonMonotoneResolutionFailure(NumericalError):
    pass


# phase ODE
class DomainTooSmall(NumericalError):
    pass


class StiffnessFailure(NumericalError):
    pass


# spectrum
class NearEigenvalue(NumericalError):
    pass


class Unresolved(NumericalError):
    pass


class DivergentPrimitive(PreconditionError):
    pass


class BracketMiss(NumericalError):
    pass


# wavefunction
class NotAnEigenstate(PreconditionError):
    pass


class ConditionViolated(PreconditionError):
    pass


# limits
class ExcludedCase(PreconditionError):
    pass


class SolverFailure(NumericalError):
    pass


class TurningPointFailure(NumericalError):
    pass


class InsideGap(PreconditionError):
    pass


# portrait / cli
class NotClosed(NumericalError):
    pass


class IndexOutOfRange(PreconditionError, IndexError):
    pass
