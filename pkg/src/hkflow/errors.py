"""Exception hierarchy shared by all hkflow modules."""


class HkflowError(Exception):
    """Base class for all package errors."""


class InvalidMesh(HkflowError):
    """Mesh fails a structural invariant (indices, orientation, manifoldness)."""


class DegenerateMesh(InvalidMesh):
    """A face area is below the scale-invariant epsilon."""


class OpenMesh(InvalidMesh):
    """A boundary edge was found; the surface is not closed."""


class MeshNotFound(HkflowError):
    """Mesh file path does not exist or cannot be parsed."""


class NotMeanConvex(HkflowError):
    """min H <= 0 under a power-law speed, so the step is not defined."""


class ParabolicityLost(HkflowError):
    """f'(H) <= 0 somewhere; the evolution is no longer parabolic."""


class StepUnderflow(HkflowError):
    """Adaptive time step fell below dt_min."""


class EmptyTrajectory(HkflowError):
    """Operation requires a nonempty trajectory."""


class InsufficientSamples(HkflowError):
    """Not enough (or not usable) samples for a fit or finite difference."""


class NoBlowup(HkflowError):
    """Trajectory did not terminate at the curvature blow-up threshold."""


class TimeBeyondTmax(HkflowError):
    """Requested time exceeds the maximal existence time."""


class HypothesisViolated(HkflowError):
    """Parameters or measured data violate a stated hypothesis."""


class NegativeField(HkflowError):
    """A test field that must be nonnegative has negative entries."""


class ExponentOutOfRange(HkflowError):
    """Integrability exponent q outside the admissible range."""


class BetaTooSmall(HkflowError):
    """Iteration exponent beta below 2."""
