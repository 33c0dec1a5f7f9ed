"""Exception hierarchy.

Two families matter to callers: :class:`ValidationError` covers bad input
(configuration, infeasible timing, unnormalizable states) and maps to CLI exit
code 1; :class:`InvariantViolation` signals an internal bug such as a routing
leak or a time-bin collision and maps to exit code 2.
"""


class QPermuteError(Exception):
    pass


class ValidationError(QPermuteError):
    exit_code = 1


class ConfigurationError(ValidationError, ValueError):
    pass


class NormalizationError(ValidationError, ValueError):
    pass


class DimensionError(ValidationError, ValueError):
    pass


class RangeError(ValidationError, IndexError):
    pass


class TimingInfeasibleError(ValidationError):
    def __init__(self, constraint: str, detail: str = ""):
        self.constraint = constraint
        msg = f"timing infeasible: {constraint}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class BudgetExceededError(ValidationError):
    pass


class InvariantViolation(QPermuteError):
    exit_code = 2


class RoutingError(InvariantViolation):
    pass


class CollisionError(InvariantViolation):
    pass


class ConsistencyError(InvariantViolation):
    pass
