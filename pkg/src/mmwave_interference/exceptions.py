class ConfigError(ValueError):
    """Raised when a configuration or experiment spec violates an invariant."""


class ConvergenceError(ArithmeticError):
    """Raised when a series or quadrature fails to reach its tolerance."""
