"""Exception hierarchy shared by every module."""


class FastecError(Exception):
    """Base class for all errors raised by this package."""


class NonFinite(FastecError, ValueError):
    """Input or iterate contains NaN or infinite entries."""


class NonConvergence(FastecError, RuntimeError):
    """An iterative kernel failed to converge."""


class DimensionMismatch(FastecError, ValueError):
    pass


class InvalidConfig(FastecError, ValueError):
    pass


class IndexOutOfRange(FastecError, IndexError):
    pass


class OutOfDomain(FastecError, ValueError):
    """Evaluation point outside the spline domain."""


class SingularDesign(FastecError, ValueError):
    pass


class NonPositivePrice(FastecError, ValueError):
    pass
