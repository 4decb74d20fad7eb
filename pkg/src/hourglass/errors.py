"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line driver:
1 for validation problems, 2 for numeric failures, 3 for exhausted budgets.
"""


class HourglassError(Exception):
    exit_code = 2


class ValidationError(HourglassError):
    exit_code = 1


class EdgeLengthMismatch(ValidationError):
    pass


class UnmatchedEdge(ValidationError):
    pass


class NonSimplePolygon(ValidationError):
    pass


class OrientationError(ValidationError):
    pass


class BadParams(ValidationError):
    pass


class GlobalSquare(ValidationError):
    pass


class DegenerateCore(ValidationError):
    pass


class InvolutionMismatch(ValidationError):
    pass


class FloorViolated(ValidationError):
    pass


class PartitionInvalid(ValidationError):
    pass


class DiskNotEmbedded(ValidationError):
    pass


class NumericError(HourglassError):
    exit_code = 2


class SolverFailure(NumericError):
    pass


class QuadratureUnstable(NumericError):
    pass


class GramIllConditioned(NumericError):
    pass


class IllConditionedFit(NumericError):
    pass


class DisjointnessViolated(NumericError):
    pass


class OrthogonalizationFailed(NumericError):
    pass


class NoPathFound(NumericError):
    pass


class BudgetError(HourglassError):
    exit_code = 3


class FlipLimitExceeded(BudgetError):
    pass


class BoundTooLarge(BudgetError):
    pass


class SearchBudgetExceeded(BudgetError):
    pass


class BudgetExceeded(BudgetError):
    pass
