"""Exception types raised by the solvers and analysis routines."""


class ChannelIslandsError(Exception):
    """Base class for all package errors."""


class BoundaryCrossing(ChannelIslandsError):
    pass


class InvalidResolution(ChannelIslandsError):
    pass


class GridMismatch(ChannelIslandsError):
    pass


class SingularSystem(ChannelIslandsError):
    """Linear solve failed or the operator is not elliptically stable."""


class NoConvergence(ChannelIslandsError):
    pass


class NewtonDiverged(ChannelIslandsError):
    def __init__(self, message, residual=None, history=None):
        super().__init__(message)
        self.residual = residual
        self.history = history or []


class StabilityViolated(ChannelIslandsError):
    pass


class NoStagnation(ChannelIslandsError):
    pass


class MultipleStagnation(ChannelIslandsError):
    def __init__(self, message, points=()):
        super().__init__(message)
        self.points = tuple(points)


class NotContracting(ChannelIslandsError):
    def __init__(self, message, factor=None):
        super().__init__(message)
        self.factor = factor


class WindowExit(ChannelIslandsError):
    pass


class NoIsland(ChannelIslandsError):
    pass


class DegenerateHessian(ChannelIslandsError):
    pass


class AssertionFailed(ChannelIslandsError):
    """An experiment's expected outcome did not hold; ``dump`` carries the artifacts."""

    def __init__(self, message, dump=None):
        super().__init__(message)
        self.dump = dump or {}
