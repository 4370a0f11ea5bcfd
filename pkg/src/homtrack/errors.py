"""Exception hierarchy shared across the package."""


class HomtrackError(Exception):
    """Base class for all package-specific errors."""


class TooFewCorrespondences(HomtrackError):
    pass


class DegenerateConfiguration(HomtrackError):
    """Point configuration (collinear/duplicate) cannot determine a homography."""


class NoConsensus(HomtrackError):
    """RANSAC failed to find an inlier set of at least 4 pairs."""


class PointAtInfinity(HomtrackError):
    """Projected homogeneous coordinate has a near-zero w component."""


class SingularMatrix(HomtrackError):
    pass


class DegenerateProjection(HomtrackError):
    """A projected box corner is at infinity or the result is non-convex."""


class InvalidInterval(HomtrackError):
    pass


class ZeroKeyframeDisplacement(HomtrackError):
    """Camera is static between keyframes; scaling ratios are undefined."""


class DegenerateAlpha(HomtrackError):
    """Literal row-scaling mode cannot handle near-zero scaling factors."""


class FrameOutOfRange(HomtrackError):
    pass


class EmptyFeatureSet(HomtrackError):
    pass


class DimensionMismatch(HomtrackError):
    pass


class ShapeMismatch(HomtrackError):
    pass


class NonMonotonicFrame(HomtrackError):
    """Detections fed to the tracker must advance the frame index."""


class PlaneBehindCamera(HomtrackError):
    pass


class InvalidConfig(HomtrackError):
    pass


class ParseError(HomtrackError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NonPositiveBox(ParseError):
    pass


class NonInvertibleEntry(ParseError):
    pass


class UnknownKey(HomtrackError):
    pass


class FrameMismatch(HomtrackError):
    pass
