"""Exception types raised across the package."""


class SuspnetError(Exception):
    """Base class for all package errors."""


class OverlappingDisks(SuspnetError):
    pass


class DegenerateTriangulation(SuspnetError):
    pass


class DisconnectedNetwork(SuspnetError):
    pass


class NegativeGap(SuspnetError):
    pass


class CoincidentCenters(SuspnetError):
    pass


class OutOfNeck(SuspnetError):
    pass


class QuadratureNotConverged(SuspnetError):
    pass


class BadIndex(SuspnetError):
    pass


class BadSpec(SuspnetError):
    pass


class NotQuasidisk(SuspnetError):
    pass


class NotBoundarySegment(SuspnetError):
    pass


class RankToleranceAmbiguous(SuspnetError):
    pass


class MissingCoefficient(SuspnetError):
    pass


class DimensionMismatch(SuspnetError):
    pass


class SingularKKT(SuspnetError):
    pass


class InconsistentConstraints(SuspnetError):
    pass


class DoesNotFit(SuspnetError):
    pass


class BadGeometry(SuspnetError):
    pass


class ClosePackingViolated(SuspnetError):
    pass
