"""Exception types shared across the package."""


class TsmonError(Exception):
    """Base class for all package errors."""


class InputError(TsmonError, ValueError):
    """A caller supplied an out-of-domain value (bad horizon, period, prior...)."""


class ConfigError(InputError):
    """A configuration field failed validation."""


class InsufficientDataError(TsmonError):
    """Not enough observations to perform the requested operation."""


class RejectedEventError(TsmonError):
    """An ingest event was refused (out of order, duplicate, or oversized gap)."""


class NumericalError(TsmonError):
    """A numeric routine left its guaranteed regime (should not happen in practice)."""


class DecodeError(TsmonError):
    """A state snapshot could not be decoded (corruption or version mismatch)."""
