"""Exception hierarchy shared across the package."""


class SdsemError(Exception):
    """Base class for all package errors."""


class ParseError(SdsemError):
    """A model or config file could not be parsed at all."""


class SchemaError(SdsemError):
    """A parsed document has missing, extra, or ill-typed fields."""


class ValidationError(SdsemError):
    """A structurally well-formed spec violates model invariants.

    Carries the full list of violations in ``report``.
    """

    def __init__(self, report):
        self.report = list(report)
        lines = "; ".join(str(v) for v in self.report)
        super().__init__(f"invalid model spec: {lines}")


class CycleError(SdsemError):
    """The static dependence graph contains a cycle."""


class DomainError(SdsemError):
    """A power term was evaluated outside its real-valued domain."""


class ConvergenceError(SdsemError):
    """A fixed-point solve failed to reach tolerance within its cap."""


class SingularSystemError(SdsemError):
    """A direct linear solve hit a (numerically) singular system."""


class DivergenceError(SdsemError):
    """State or an intermediate value exceeded the overflow guard."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class OracleMismatchError(SdsemError):
    """Measured integration errors are inconsistent with the oracle."""


class DimensionError(SdsemError):
    """Array shapes disagree with the spec dimensions."""


class InsufficientDataError(SdsemError):
    """Too few observations for the requested statistic."""


class PerfectFitError(SdsemError):
    """Series are identical; the error decomposition is undefined."""


class LengthMismatchError(SdsemError):
    """Paired series have different lengths."""


class AllZeroObservedError(SdsemError):
    """MAPE is undefined when every observed value is zero."""


class OutOfSpanError(SdsemError):
    """Observation times fall outside the simulated span."""


class NotLinearError(SdsemError):
    """The static subsystem is not a linear system of equations."""


class HasStocksError(SdsemError):
    """The model has dynamic state variables and no static-only form."""


class NotPositiveDefiniteError(SdsemError):
    """A covariance matrix is not positive definite."""


class ExhaustedAttemptsError(SdsemError):
    """Rejection sampling gave up; ``causes`` holds the histogram."""

    def __init__(self, message, causes=None):
        super().__init__(message)
        self.causes = dict(causes or {})
