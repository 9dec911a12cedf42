"""Exception types raised across the package."""


class RmtEdgeError(Exception):
    """Base class for all package errors."""


class ParameterError(RmtEdgeError, ValueError):
    pass


class DimensionError(RmtEdgeError, ValueError):
    pass


class InputError(RmtEdgeError, ValueError):
    pass


class RegimeError(RmtEdgeError, ValueError):
    """Aspect ratio c = 1 (hard edge) is excluded."""


class DomainError(RmtEdgeError, ValueError):
    pass


class NumericError(RmtEdgeError, ArithmeticError):
    pass


class PoleError(NumericError):
    pass


class ConditioningError(NumericError):
    pass


class BranchError(NumericError):
    pass


class SolverError(NumericError):
    def __init__(self, msg, residual=None, history=None):
        super().__init__(msg)
        self.residual = residual
        self.history = history or []


class EdgeLocationError(NumericError):
    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace or []


class DegenerateError(RmtEdgeError, ValueError):
    pass


class ConfigError(RmtEdgeError, ValueError):
    pass


class RunError(RmtEdgeError, RuntimeError):
    pass
