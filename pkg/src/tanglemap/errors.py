"""Exception types shared across the tanglemap modules."""


class TangleMapError(Exception):
    """Base class for all library errors."""


class DegenerateSegment(TangleMapError, ValueError):
    pass


class NearSingular(TangleMapError, ValueError):
    """Two segments are closer than the intersection tolerance."""


class TooFewSegments(TangleMapError, ValueError):
    pass


class AllZeroMatrix(TangleMapError, ValueError):
    pass


class EmptyImage(TangleMapError, ValueError):
    pass


class NonPositiveDepth(TangleMapError, ValueError):
    pass


class NotEnoughSegments(TangleMapError, ValueError):
    pass


class WindowLargerThanImage(TangleMapError, ValueError):
    pass


class DimensionMismatch(TangleMapError, ValueError):
    pass


class InvalidGeometry(TangleMapError, ValueError):
    pass


class InvalidParams(TangleMapError, ValueError):
    pass


class PlacementFailed(TangleMapError, RuntimeError):
    pass


class MissingTruth(TangleMapError, FileNotFoundError):
    pass


class ConfigError(TangleMapError, ValueError):
    pass


class NoGraspFound(TangleMapError, RuntimeError):
    """Raised by the planner when no region yields a grasp.

    The partially filled plan result is attached as ``result`` so callers can
    still report the topology coordinate.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
