"""Exception types raised across the package."""


class ConfigError(ValueError):
    """Invalid experiment configuration or CLI input.

    ``key`` names the offending configuration entry when there is one.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class NumericalError(RuntimeError):
    """Base class for numerical failures (mapped to exit code 2 by the CLI)."""


class DivergenceError(NumericalError):
    """Gradient descent residual blew up past the divergence guard."""


class DegenerateGramError(NumericalError):
    """Gram matrix has a zero eigenvalue where a positive one is required."""
