class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class NumericalError(RuntimeError):
    """A numerical routine failed (quadrature, root finding, degenerate interval)."""


class ConfigError(ValueError):
    """Invalid configuration file or parameter combination."""
