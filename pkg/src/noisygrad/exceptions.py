"""Exception hierarchy shared across the package."""


class ConfigError(ValueError):
    """Invalid sampler, model or experiment configuration."""


class NumericalError(ArithmeticError):
    """A numerical routine failed (singular operator, non-finite values)."""


class StabilityError(NumericalError):
    """The damping operator would not contract momentum for the current stepsize."""

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class DivergenceError(NumericalError):
    """A chain produced non-finite or exploding values."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ModelEvaluationError(NumericalError):
    """A target model returned a non-finite gradient or density."""
