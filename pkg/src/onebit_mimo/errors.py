"""Package exception types. The CLI maps them to exit codes."""


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class NumericalError(RuntimeError):
    """Singular or ill-conditioned linear algebra (CLI exit code 3)."""
