"""Exception types shared across the package."""


class OpnormError(ValueError):
    """Base class for all validation errors raised by opnorm."""


class ShapeMismatch(OpnormError):
    """Matrix or coefficient shapes are inconsistent."""


class DependentBasis(OpnormError):
    """A proposed basis is numerically linearly dependent."""


class ZeroTensor(OpnormError):
    """An operation requires a nonzero tensor."""


class IdentityViolated(OpnormError):
    """A quadruple of maps does not satisfy the required product identity."""


class DimensionTooLarge(OpnormError):
    """Input dimension exceeds what exhaustive enumeration supports."""
