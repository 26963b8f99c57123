"""Exception hierarchy shared by all modules."""


class FvSubdiffError(Exception):
    """Base class for errors raised by this package."""


class InvalidParameterError(FvSubdiffError, ValueError):
    pass


class GeometryError(FvSubdiffError):
    """Degenerate or inconsistent mesh geometry."""


class OutOfDomainError(FvSubdiffError, ValueError):
    pass


class OrderingError(FvSubdiffError, ValueError):
    """Source/test time intervals given in an order the moment formulas do not cover."""


class SingularityError(FvSubdiffError, ValueError):
    pass


class SolverError(FvSubdiffError):
    """Linear solve failed or missed its residual tolerance."""

    def __init__(self, message, residual=None, step=None):
        super().__init__(message)
        self.residual = residual
        self.step = step


class ResourceLimitError(FvSubdiffError):
    pass
