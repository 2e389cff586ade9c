"""Exception taxonomy shared across the toolkit.

Every failure mode that the experiment harness counts separately gets its
own class so batch reports can attribute failures per cause.
"""


class KnotPlanError(Exception):
    """Base class for all toolkit errors."""


class OutOfRangeError(KnotPlanError, ValueError):
    """Curvilinear length outside [0, 1]."""


class InsufficientControlPointsError(KnotPlanError, ValueError):
    """Curve has fewer than two control points."""


class DegenerateSegmentError(KnotPlanError):
    """Tangent queried where the supporting segment is shorter than the
    degeneracy threshold."""


class DegenerateTangentError(KnotPlanError):
    """Tangent has no usable horizontal component (near-vertical rope)."""


class DegenerateCrossingError(KnotPlanError):
    """Two projected segments overlap collinearly; crossing is not transverse."""


class AmbiguousTopologyError(KnotPlanError):
    """Crossing count differs from what the planner context expects."""


class NoCrossingFoundError(KnotPlanError):
    """An operation requiring at least one crossing got an empty diagram."""


class NegativeHeightError(KnotPlanError, ValueError):
    """Lift height must be nonnegative."""


class InvalidArcError(KnotPlanError, ValueError):
    """Arc angle outside the configured bounds."""


class NumericalBlowupError(KnotPlanError):
    """Simulation state escaped the workspace; integration diverged."""


class GraspMissError(KnotPlanError):
    """No rope node within tolerance of the planned grasp position."""


class GateFailedError(KnotPlanError):
    """A per-move verification gate did not hold after execution."""

    def __init__(self, move: str, message: str):
        super().__init__(f"{move}: {message}")
        self.move = move


class ConfigError(KnotPlanError, ValueError):
    """Invalid experiment configuration."""


class CurveLengthMismatchWarning(UserWarning):
    """Polyline arc length disagrees with the declared rope length."""
