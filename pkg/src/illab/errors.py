"""Exception hierarchy shared by every illab module."""


class IllabError(Exception):
    """Base class for all library errors."""


class ConfigError(IllabError):
    """Malformed scenario/config input (CLI exit status 2)."""


class NumericError(IllabError):
    """A numerical step failed or a verification did not hold (CLI exit status 3)."""


class CoincidentPoints(NumericError):
    pass


class DuplicatePoints(NumericError):
    pass


class NonConvergent(NumericError):
    """Sampled projective directions fail the Cauchy test along the schedule."""

    def __init__(self, message, pair=None, clusters=None):
        super().__init__(message)
        self.pair = pair
        self.clusters = clusters or []


class DegenerateDirections(NumericError):
    pass


class CapTooSmall(NumericError):
    pass


class NotHomogeneous(NumericError):
    pass


class UnstableShape(NumericError):
    pass


class IllConditionedGrid(NumericError):
    pass


class AmbientMismatch(NumericError):
    pass


class SanityViolation(NumericError):
    pass


class UncertifiedLimit(NumericError):
    pass


class OriginSingularity(NumericError):
    pass


class PoleHit(NumericError):
    pass


class ZeroOnSphere(NumericError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ExtraCommonZeros(NumericError):
    def __init__(self, message, roots=None):
        super().__init__(message)
        self.roots = roots or []


class NotConverging(NumericError):
    pass
