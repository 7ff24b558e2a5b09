"""Exception hierarchy.

Two families matter to callers: :class:`InputError` (bad data, bad flags,
infeasible configuration) and :class:`NumericalError` (the numerics broke
down mid-computation). The CLI maps them to distinct exit codes.
"""


class BoostNPMLEError(Exception):
    """Base class for every error raised by this package."""


class InputError(BoostNPMLEError, ValueError):
    pass


class NumericalError(BoostNPMLEError, ArithmeticError):
    pass


class InvalidInputError(InputError):
    pass


class DegenerateSupportError(InputError):
    pass


class DegenerateSpreadError(InputError):
    pass


class InfeasibleDfError(InputError):
    pass


class InvalidSpecError(InputError):
    pass


class InfeasibleClassError(InputError):
    def __init__(self, label, reason):
        super().__init__(f"class {label} is infeasible: {reason}")
        self.label = label
        self.reason = reason


class OutOfSupportError(InputError):
    pass


class NumericalRangeError(NumericalError):
    pass


class WeightUnderflowError(NumericalError):
    pass


class SearchFailureError(NumericalError):
    pass


class SolveFailureError(NumericalError):
    pass


class BoostingIterationError(NumericalError):
    """A weak-learner failure, tagged with the boosting iteration it hit."""

    def __init__(self, iteration, cause):
        super().__init__(f"iteration {iteration}: {cause}")
        self.iteration = iteration
        self.cause = cause


class SweepError(BoostNPMLEError):
    """A replicate of a simulation sweep failed; carries its coordinates."""

    def __init__(self, beta, M, replicate, cause):
        super().__init__(f"beta={beta:g} M={M} replicate={replicate}: {cause}")
        self.beta = beta
        self.M = M
        self.replicate = replicate
