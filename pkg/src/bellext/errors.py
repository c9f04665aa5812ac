"""Semantic exceptions shared across the package."""


class BellExtError(Exception):
    """Base class for all package errors."""


class ValidationError(BellExtError, ValueError):
    """Input violates a documented contract (domain, shape, schema)."""


class ProbabilityError(ValidationError):
    """A derived probability falls outside [0, 1] beyond tolerance."""


class NoSignalingError(ValidationError):
    """A probability table violates normalization or no-signaling."""


class InvalidWitnessError(ValidationError):
    """Witness coefficients violate the product/normalization constraints."""


class DegenerateDirectionError(BellExtError):
    """A Bloch direction is undefined because the guessing quantity vanishes."""


class NonRealizableError(BellExtError):
    """A correlation admits no two-qubit realization (negative discriminant)."""


class ScaleRatioError(ValidationError):
    """A scaled correlator exceeds 1 beyond tolerance for the given scaling."""


class CanonicalizationError(BellExtError):
    """Internal error: basis canonicalization failed to preserve the correlation."""


class SdpError(BellExtError):
    """An SDP solve ended in a non-optimal status."""

    def __init__(self, status: str, message: str = ""):
        self.status = status
        super().__init__(f"SDP solve failed with status '{status}'" + (f": {message}" if message else ""))
