"""Exception hierarchy shared by all modules.

Every validation failure raises a subclass of HybridcorrError so the CLI and
the HTTP service can map them uniformly (exit code 1 / HTTP 422).
"""


class HybridcorrError(Exception):
    """Base class for all domain errors."""


class ShapeMismatch(HybridcorrError):
    pass


class NonNegativityViolation(HybridcorrError):
    pass


class ZeroMatrix(HybridcorrError):
    pass


class NotSymmetric(HybridcorrError):
    pass


class DuplicatePoints(HybridcorrError):
    pass


class SizeCapExceeded(HybridcorrError):
    pass


class WeightMismatch(HybridcorrError):
    pass


class InvariantViolation(HybridcorrError):
    pass


class ExactSearchCapExceeded(HybridcorrError):
    pass


class Infeasible(HybridcorrError):
    pass


class SingularSupport(HybridcorrError):
    pass


class DimensionMismatch(HybridcorrError):
    pass


class CapabilityExceeded(HybridcorrError):
    pass


class MajorizationFailure(HybridcorrError):
    pass


class UnknownDemo(HybridcorrError):
    pass
