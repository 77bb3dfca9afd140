"""Exception types shared across the package."""


class OrbitGradError(Exception):
    """Base class for all package-specific errors."""


class InvalidAction(OrbitGradError):
    """Group element incompatible with the point it is applied to."""


class InvalidSampler(OrbitGradError):
    """Group sampler configuration is inconsistent with the group kind."""


class NotInSupport(OrbitGradError):
    """Density requested for an element outside the sampler's support."""


class InvalidConfig(OrbitGradError):
    """Bad schedule/training configuration."""


class InvalidTime(OrbitGradError):
    """Time argument outside the valid (clamped) range."""


class InvalidSpace(OrbitGradError):
    """Point lives in a different space than the kernel expects."""


class DegenerateWeights(OrbitGradError):
    """All importance weights underflowed to zero; x_t is impossibly far
    from the orbit of x_0."""


class NotAGroup(OrbitGradError):
    """An element list supposed to be a finite group is not closed."""


class InvalidShape(OrbitGradError):
    """Array shape mismatch in the denoiser."""


class InvalidInput(OrbitGradError):
    """Bad metric input (empty or size-mismatched sample sets)."""


class NumericalDivergence(OrbitGradError):
    """Training or sampling produced non-finite values."""
