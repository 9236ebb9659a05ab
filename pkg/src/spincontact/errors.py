"""Exception types shared across the package."""


class SpinContactError(Exception):
    """Base class for all package-specific errors."""


class ZeroQuaternion(SpinContactError):
    """Quaternion norm too small to normalize or invert."""


class NotNormalized(SpinContactError):
    """Quaternion expected to be unit-norm is not."""


class SingularMass(SpinContactError):
    """Translational mass block is not invertible."""


class SingularInertia(SpinContactError):
    """Reduced inertia matrix is singular or too ill-conditioned to trust."""


class NonFiniteState(SpinContactError):
    """A propagated state contains NaN or inf."""


class DivergenceDetected(SpinContactError):
    """State error norm exceeded the physical-divergence threshold."""


class InvalidWeights(SpinContactError):
    """OCP weight matrix has a non-positive diagonal entry."""


class SolverFailure(SpinContactError):
    """OCP solve did not produce a usable control."""


class ResampleExhausted(SpinContactError):
    """Rejection sampling failed to produce an admissible draw."""


class LengthMismatch(SpinContactError):
    """Paired sequences have different lengths."""


class ConfigError(SpinContactError):
    """Bad or inconsistent run configuration; message names the field."""
