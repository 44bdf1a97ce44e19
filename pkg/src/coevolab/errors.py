class ConfigurationError(ValueError):
    """An invalid configuration value (manifest key, rate, population shape...)."""


class UndefinedInputError(ValueError):
    """A measure was asked for on input where it is not defined."""


class CheckpointError(RuntimeError):
    """A checkpoint or archive file cannot be used."""
