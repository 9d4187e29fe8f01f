class ConfigError(ValueError):
    """Bad user-supplied configuration or input data (CLI exit code 2)."""


class InvariantError(RuntimeError):
    """An internal consistency check failed (CLI exit code 3)."""
