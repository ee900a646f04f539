"""Exception types shared across the package."""


class LatentCLError(Exception):
    """Base class for all package-specific failures."""


class NonFiniteInputError(LatentCLError, ValueError):
    """A matrix or vector argument contains NaN or infinity."""


class DegenerateTaskError(LatentCLError, ValueError):
    """A task matrix is rank deficient where full column rank is required."""


class DegenerateGateError(LatentCLError, ValueError):
    """A gate keeps too few units to span the latent space."""


class InvalidDensityError(LatentCLError, ValueError):
    """Gate density outside (0, 1]."""


class InvalidRegularizerError(LatentCLError, ValueError):
    """Regularizer amplitude outside its admissible range."""


class NearDuplicateFeatureError(LatentCLError, ValueError):
    """Feature matrices of consecutive tasks are too close for the
    variable-feature regularized solver; use the fixed-feature branch."""


class DegenerateMetricError(LatentCLError, ValueError):
    """A weight-space metric is singular in a way the solver cannot handle."""


class InstabilityError(LatentCLError, RuntimeError):
    """Iterative training diverged (error grew far above its initial value)."""


class IdxFormatError(LatentCLError, ValueError):
    """An IDX file is malformed; the message carries the byte offset."""


class ConfigError(LatentCLError, ValueError):
    """A sweep or CLI configuration is invalid."""
