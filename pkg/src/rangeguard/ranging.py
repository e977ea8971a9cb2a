"""Noisy squared-range sensing and the linear range-difference observation.

Each guardian measures its squared distance to the hostile target with
additive Gaussian noise of variance ``sigma_i``. Differencing
the two measurements cancels the quadratic term in the target position and
leaves a scalar observation that is linear in the target state:

    Y = -1/2 (m1 - m2 - p1'p1 + p2'p2) = (p1 - p2)' pbar2 + etabar,

with ``Var{etabar} = (sigma1 + sigma2) / 4``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .kinematics import as_vec3
from .target_motion import RngStream


@dataclass(frozen=True)
class RangeNoiseModel:
    """Variances (m^4) of the additive squared-range noise of each guardian.

    Zero is accepted for noise-free studies; the filter itself requires a
    positive combined variance.
    """

    sigma1: float
    sigma2: float

    def __post_init__(self):
        for name in ("sigma1", "sigma2"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0:
                raise InvalidParameterError(f"{name} must be a finite non-negative variance, got {value}")
            object.__setattr__(self, name, value)

    @property
    def gamma2(self) -> float:
        return 0.25 * (self.sigma1 + self.sigma2)

    def sigma(self, which: int) -> float:
        return self.sigma1 if which == 1 else self.sigma2


@dataclass(frozen=True)
class ObservationSample:
    y: float
    c_row: np.ndarray
    gamma2: float
    degenerate: bool = False


def measure_squared_range(sensor_pos, target_pos, sigma: float, rng: RngStream | None) -> float:
    """Return ``||sensor - target||^2 + eta`` with ``eta ~ N(0, sigma)``.

    The result is deliberately not clamped at zero.
    """
    if sigma < 0:
        raise InvalidParameterError(f"sigma must be non-negative, got {sigma}")
    diff = np.asarray(sensor_pos, dtype=float) - np.asarray(target_pos, dtype=float)
    d2 = float(diff @ diff)
    if sigma == 0 or rng is None:
        return d2
    return d2 + float(rng.normal(np.sqrt(sigma)))


def _row(q12: np.ndarray) -> np.ndarray:
    return np.concatenate([q12, np.zeros(3)])


def build_observation(p1, p2, m1sq: float, m2sq: float, noise: RangeNoiseModel) -> ObservationSample:
    """Assemble the scalar observation from the two squared-range readings."""
    p1 = as_vec3(p1, "p1")
    p2 = as_vec3(p2, "p2")
    q12 = p1 - p2
    y = -0.5 * (m1sq - m2sq - p1 @ p1 + p2 @ p2)
    return ObservationSample(
        y=float(y),
        c_row=_row(q12),
        gamma2=noise.gamma2,
        degenerate=not np.any(q12),
    )


def relative_observation(q12, m1sq: float, m2sq: float, which: int, noise: RangeNoiseModel) -> ObservationSample:
    """Observation of guardian ``which``'s relative state from the local baseline ``q12``.

    ``Y_i = (-1)^i / 2 (m_nu - m_i - q12'q12)`` equals ``q12' q_i`` without noise,
    where ``q_i = p_i - pbar2`` and ``nu`` is the other guardian.
    """
    if which not in (1, 2):
        raise InvalidParameterError(f"guardian index must be 1 or 2, got {which}")
    q12 = as_vec3(q12, "q12")
    m_i, m_nu = (m1sq, m2sq) if which == 1 else (m2sq, m1sq)
    sign = -1.0 if which == 1 else 1.0
    y = sign * 0.5 * (m_nu - m_i - q12 @ q12)
    return ObservationSample(
        y=float(y),
        c_row=_row(q12),
        gamma2=noise.gamma2,
        degenerate=not np.any(q12),
    )
