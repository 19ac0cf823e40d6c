"""Exception types raised across the package."""


class KdxError(Exception):
    """Base class for all kdx errors."""


class DimensionMismatch(KdxError, ValueError):
    pass


class NonFiniteInput(KdxError, ValueError):
    pass


class NotPositiveDefinite(KdxError, ArithmeticError):
    pass


class InvalidOrder(KdxError, ValueError):
    pass


class InvalidRank(KdxError, ValueError):
    pass


class SingleClassInput(KdxError, ValueError):
    pass


class SampleCountMismatch(KdxError, ValueError):
    pass


class StepCollapse(KdxError, ArithmeticError):
    """Backtracking could not find an acceptable first step."""


class UnknownDataset(KdxError, KeyError):
    pass
