"""Range-only estimation and anti-synchronisation encirclement of a hostile target.

Two guardian agents estimate a non-cooperative target's position and
velocity from noisy squared-range readings with a time-varying Kalman
filter, and switch between encircling a protected target, encircling the
hostile target and closing in on it.
"""

from .errors import ConfigError, ConsistencyError, InvalidParameterError, SimulationError

__version__ = "0.1.0"

__all__ = ["ConfigError", "ConsistencyError", "InvalidParameterError", "SimulationError", "__version__"]
