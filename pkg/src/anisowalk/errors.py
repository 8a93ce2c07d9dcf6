"""Exception hierarchy.

Two families: ``ValidationError`` for bad inputs or violated structural
preconditions (CLI exit code 2), ``NumericalError`` for computations that
could not be completed or verified at the required accuracy (exit code 3).
"""


class AnisowalkError(Exception):
    """Base class for all package errors."""


class ValidationError(AnisowalkError):
    """Invalid input or violated precondition."""


class NumericalError(AnisowalkError):
    """Numerical failure: nonconvergence, unverifiable accuracy, etc."""


# --- validation ---------------------------------------------------------

class NotAnInvolution(ValidationError):
    pass


class DegreeTooSmall(ValidationError):
    pass


class AlphabetMismatch(ValidationError):
    pass


class NotReduced(ValidationError):
    pass


class OddSizeWithMatchings(ValidationError):
    pass


class InvolutionConstraintViolated(ValidationError):
    pass


class NotAPermutation(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class NotUniformWeights(ValidationError):
    pass


class NotSimpleGraph(ValidationError):
    pass


class ColorMismatch(ValidationError):
    pass


class StopSpecUnbounded(ValidationError):
    pass


class TooLargeForDense(ValidationError):
    pass


class HorizonTooLarge(ValidationError):
    pass


class SetTooLarge(ValidationError):
    pass


class DPBudgetExceeded(ValidationError):
    pass


class DominationViolated(ValidationError):
    def __init__(self, message, entry=None):
        super().__init__(message)
        self.entry = entry


class ConfigError(ValidationError):
    pass


# --- numerical ----------------------------------------------------------

class BelowConvergenceRadius(NumericalError):
    pass


class NoConvergence(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CriterionNeverReachesOne(NumericalError):
    pass


class NotTransient(NumericalError):
    pass


class RoundTripResidualTooLarge(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SingularSystem(NumericalError):
    pass


class NotMixedByHorizon(NumericalError):
    def __init__(self, message, horizon=None, parity_suspected=False, last_tv=None):
        super().__init__(message)
        self.horizon = horizon
        self.parity_suspected = parity_suspected
        self.last_tv = last_tv


class PowerIterationStalled(NumericalError):
    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate
