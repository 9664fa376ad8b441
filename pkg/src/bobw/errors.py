"""Exception types raised by the solvers and checkers."""


class FairDivisionError(Exception):
    """Base class for every error raised by this package."""


class PreconditionError(FairDivisionError):
    """The input does not satisfy what an operation requires."""


class InvariantViolation(FairDivisionError):
    """An internal guarantee failed; indicates a bug, never bad input."""


class EmptyAgentSet(PreconditionError):
    pass


class NegativeUtility(PreconditionError):
    pass


class NotBiValued(PreconditionError):
    pass


class IncompleteAllocation(PreconditionError):
    pass


class DivisiblePresent(PreconditionError):
    pass


class BudgetExceeded(PreconditionError):
    pass


class WrongAgentCount(PreconditionError):
    pass


class TooManyGoods(PreconditionError):
    pass


class WrongRange(PreconditionError):
    pass


class ZeroLowValue(PreconditionError):
    pass


class NotEF1(PreconditionError):
    pass


class MatchingNotMaximum(PreconditionError):
    pass


class AgentAlreadyMatched(PreconditionError):
    pass


class NoPerfectMatching(FairDivisionError):
    pass


class CertificateFailed(InvariantViolation):
    pass
