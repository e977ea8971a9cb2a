"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A model or controller parameter violates its invariant."""


class ConsistencyError(ArithmeticError):
    """An internal numerical invariant was broken (e.g. non-positive innovation variance)."""


class ConfigError(ValueError):
    """A scenario file could not be parsed or failed validation."""


class SimulationError(RuntimeError):
    """A simulation step produced a non-finite quantity."""

    def __init__(self, step, quantity, value=None):
        self.step = step
        self.quantity = quantity
        self.value = value
        super().__init__(f"non-finite {quantity} at step {step}")
