"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A model, signal or filter parameter is outside its valid domain."""


class SetpointError(RuntimeError):
    """No usable operating point exists (flat or zero-contrast response)."""


class CompositionError(ValueError):
    """Records cannot be combined (mismatched rate, length or unit)."""


class FitError(RuntimeError):
    """A least-squares fit failed or produced an unphysical result."""


class ConfigError(ValueError):
    """A run configuration file failed validation."""
