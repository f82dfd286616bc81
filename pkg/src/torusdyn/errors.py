"""Exception hierarchy for torusdyn.

Every failure mode raised by the library derives from :class:`TorusDynError`,
so callers can catch one type at API boundaries (the CLI maps them to exit
code 2 for configuration problems and 1 for failed verdicts).
"""

from __future__ import annotations


class TorusDynError(Exception):
    """Base class for all torusdyn errors."""


class SpecError(TorusDynError):
    """Malformed map specification or invalid configuration."""


class NotHyperbolic(SpecError):
    """Integer matrix fails the hyperbolicity test (eigenvalue on the unit circle)."""


class ConeViolation(TorusDynError):
    """Derivative pullback fails to map the stable cone strictly into itself."""


class NotOrientable(TorusDynError):
    """Stable line field cannot be consistently oriented within the cone."""


class OrientationAmbiguous(TorusDynError):
    """Computed direction is nearly orthogonal to the reference orientation vector."""


class NoConvergence(TorusDynError):
    """Iterative direction computation did not reach the requested residual."""


class InverseNewtonFailure(TorusDynError):
    """Newton inversion of the lift failed to converge."""


class EigenSplitFailure(TorusDynError):
    """Orbit multipliers are not separated by the unit circle."""


class MissingMultipliers(TorusDynError):
    """Orbit database record lacks required multiplier data."""


class CountOverflow(TorusDynError):
    """Fixed-point count exceeds the configured enumeration limit."""


class ContinuationCollision(TorusDynError):
    """Two continued fixed points collided within the deduplication tolerance."""


class NewtonDivergence(TorusDynError):
    """Homotopy continuation lost a seed (Newton failed at some step)."""


class IncompleteDatabase(TorusDynError):
    """Orbit database lacks a complete level n required by the computation."""


class SigmaMinusOne(TorusDynError):
    """Operation defined only for orientation-preserving (determinant +1) matrices."""


class MeanNotZero(TorusDynError):
    """Observable mean exceeds its error estimate where a zero mean is required."""


class TransversalityFailure(TorusDynError):
    """Flow direction nearly tangent to the chosen transversal section."""


class InsufficientDecaySignal(TorusDynError):
    """Too few correlation values above the noise floor to fit a decay rate."""


class ResolutionExceeded(TorusDynError):
    """Requested correlation lag exceeds the resolution of the empirical measure."""


class StepUnderflow(TorusDynError):
    """Adaptive integrator step fell below the minimum step size."""
