"""Exception types shared across the package."""


class CapacityError(RuntimeError):
    """Raised when a Fock sector is too large to handle at desk scale."""


class DimensionError(ValueError):
    """Raised on mismatched mode counts, photon numbers or phase lengths."""


class NormalizationError(ValueError):
    """Raised when a probe state is too far from unit norm to be renormalized."""


class SingularFisherError(ValueError):
    """Raised when a Fisher matrix cannot be inverted.

    Attributes:
        null_direction: unit vector spanning (part of) the insensitive phase
            direction, or ``None`` when no matrix was available.
    """

    def __init__(self, message, null_direction=None):
        super().__init__(message)
        self.null_direction = null_direction


class IncompletePovmError(ValueError):
    """Raised when POVM elements do not resolve the identity on the sector."""


class UnsupportedProbeError(ValueError):
    """Raised when a construction is not defined for the given probe."""


class FlatLikelihoodError(ValueError):
    """Raised when the likelihood cannot pin down every phase."""
