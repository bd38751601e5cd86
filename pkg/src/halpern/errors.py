"""Exception hierarchy shared by every module of the package."""


class HalpernError(Exception):
    """Base class for all package errors."""


class MissingForward(HalpernError):
    pass


class MissingResolvent(HalpernError):
    pass


class DimensionMismatch(HalpernError):
    pass


class NonPositiveGamma(HalpernError):
    pass


class PreconditionViolation(HalpernError):
    pass


class NonFiniteIterate(HalpernError):
    """Raised when an operator evaluation or an iterate contains NaN/Inf.

    ``trace`` carries the partial iteration trace when the error is raised
    from inside a solver run.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ScheduleDomainError(HalpernError):
    pass


class NotMonotone(HalpernError):
    pass


class MetricNotPositiveDefinite(HalpernError):
    pass


class SubproblemFailure(HalpernError):
    pass


class ConfigError(HalpernError):
    pass


class WindowError(HalpernError):
    pass


class NonPositiveResidual(HalpernError):
    pass


class MissingSolution(HalpernError):
    pass
