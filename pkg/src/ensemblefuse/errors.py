"""Exception types shared across the package."""


class EnsembleFuseError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(EnsembleFuseError):
    """An input violated its contract: bad file, bad shape, bad parameter.

    Raised before any partial result is produced, so callers never see a
    half-validated matrix or config.
    """
