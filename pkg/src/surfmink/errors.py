"""Exception hierarchy shared by all surfmink modules."""


class SurfMinkError(Exception):
    """Base class for every error raised by surfmink."""


class NoConvergence(SurfMinkError):
    pass


class CutLocus(SurfMinkError):
    pass


class StepFailure(SurfMinkError):
    pass


class DegenerateVelocity(SurfMinkError):
    pass


class UnsupportedOnMesh(SurfMinkError):
    pass


class InadmissibleTotalAngle(SurfMinkError):
    """Total turning angle (or total geodesic curvature) is not positive.

    Raised when the enclosed Gaussian curvature reaches or exceeds 2*pi, in
    which case the defect correction is undefined.
    """


class DegenerateProjection(SurfMinkError):
    pass


class TooFewPoints(SurfMinkError):
    pass


class ChartSingularity(SurfMinkError):
    pass


class MultipleComponents(SurfMinkError):
    pass


class OpenChain(SurfMinkError):
    pass


class W0Unavailable(SurfMinkError):
    pass


class ParseError(SurfMinkError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class NonManifold(SurfMinkError):
    def __init__(self, message, edge=None):
        self.edge = edge
        super().__init__(message)


class UsageError(SurfMinkError):
    pass


class IoError(SurfMinkError):
    pass
