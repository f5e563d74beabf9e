"""Exception types raised across the package."""


class IcdLabError(ValueError):
    """Base class for input and precondition failures."""


class NotHermitian(IcdLabError):
    pass


class NotPSD(IcdLabError):
    pass


class RankDeficient(IcdLabError):
    pass


class SingularOnRange(IcdLabError):
    pass


class NotSymmetric(IcdLabError):
    pass


class InvalidDensity(IcdLabError):
    pass


class InvalidWeights(IcdLabError):
    pass


class OutOfRange(IcdLabError):
    pass


class InvalidParams(IcdLabError):
    pass


class ThetaOutOfRange(InvalidParams):
    """Angle outside (0, pi/2); the basis states degenerate to products there."""


class NotRegion1(IcdLabError):
    pass


class NotOnBoundary(IcdLabError):
    pass
