"""Exception and warning types shared across the package."""


class Fins2dError(Exception):
    """Base class for all package errors."""


class InvalidExponent(Fins2dError):
    """Fractional exponent outside the supported range."""


class NonMeanFreeInput(Fins2dError):
    """Negative-order operator applied to a field with nonzero mean."""


class NegativeTime(Fins2dError):
    """Semigroup evaluated at t < 0."""


class EmptySeries(Fins2dError):
    """Time series with too few samples."""


class NonuniformSpacing(Fins2dError):
    """Time series samples are not uniformly spaced."""


class QuadratureNonConvergence(Fins2dError):
    """Successive quadrature refinements failed to agree."""


class ShellOutOfRange(Fins2dError):
    """Dyadic shell index outside the partition range."""


class SOutOfRange(Fins2dError):
    """Regularity index outside the validity range of a characterization."""


class EmptyDictionary(Fins2dError):
    """Multiplier probe dictionary is empty."""


class InsufficientSamples(Fins2dError):
    """Velocity series does not cover the requested time interval."""


class OutsideNeumannRegime(Fins2dError):
    """Accumulated velocity gradient too large for the inverse-Jacobian series."""


class OutsideBiLipschitzWindow(Fins2dError):
    """Flow left the short-time window where pair distances stay comparable."""


class TooFewMarkers(Fins2dError):
    """Contour does not have enough markers."""


class SelfIntersection(Fins2dError):
    """Contour crossed itself; the front is under-resolved."""


class BlowupDetected(Fins2dError):
    """Velocity magnitude exceeded the configured runaway cap."""


class PressureIterationDiverged(Fins2dError):
    """Variable-coefficient pressure iteration failed to contract."""


class PicardNotContracting(Fins2dError):
    """Linearized within-step iteration did not converge."""


class GridMismatch(Fins2dError):
    """Incompatible grids or a rescaling factor that is not representable."""


class InsufficientData(Fins2dError):
    """Not enough diagnostic records for the requested report."""


class ConfigError(Fins2dError):
    """Malformed or out-of-range run configuration."""


class SnapshotFormatError(Fins2dError):
    """Snapshot file does not follow the documented binary layout."""


class CFLWarning(UserWarning):
    """Advective step larger than the grid spacing; accuracy may degrade."""
