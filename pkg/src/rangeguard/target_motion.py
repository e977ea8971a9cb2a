"""Heavy-tailed target accelerations and target propagation.

A target's acceleration is drawn from a two-component zero-mean Gaussian
mixture: with probability ``gamma`` from ``N(0, W1)`` (the frequent, mild
component) and otherwise from ``N(0, W2)`` (rare aggressive manoeuvres).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .kinematics import AgentState, StepMatrices, propagate

_PSD_TOL = 1e-12


def _as_variance(value, name: str) -> np.ndarray:
    """Accept a 3x3 matrix or a length-3 diagonal."""
    arr = np.asarray(value, dtype=float)
    if arr.shape == (3,):
        arr = np.diag(arr)
    if arr.shape != (3, 3):
        raise InvalidParameterError(f"{name} must be 3x3 or a length-3 diagonal, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"{name} has non-finite entries")
    if not np.allclose(arr, arr.T, rtol=0.0, atol=_PSD_TOL):
        raise InvalidParameterError(f"{name} is not symmetric")
    arr = 0.5 * (arr + arr.T)
    scale = max(1.0, float(np.max(np.abs(arr))))
    if np.linalg.eigvalsh(arr).min() < -_PSD_TOL * scale:
        raise InvalidParameterError(f"{name} is not positive semidefinite")
    return arr


def _sqrt_factor(w: np.ndarray) -> np.ndarray:
    # eigh tolerates singular variances (e.g. a grounded z-axis) where Cholesky fails
    vals, vecs = np.linalg.eigh(w)
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


@dataclass(frozen=True)
class MixtureAccelModel:
    gamma: float
    W1: np.ndarray
    W2: np.ndarray
    _L1: np.ndarray = field(init=False, repr=False, compare=False)
    _L2: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        gamma = float(self.gamma)
        if not (0.0 < gamma <= 1.0):
            raise InvalidParameterError(f"gamma must lie in (0, 1], got {gamma}")
        W1 = _as_variance(self.W1, "W1")
        W2 = _as_variance(self.W2, "W2")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "W1", W1)
        object.__setattr__(self, "W2", W2)
        object.__setattr__(self, "_L1", _sqrt_factor(W1))
        object.__setattr__(self, "_L2", _sqrt_factor(W2))

    @classmethod
    def still(cls) -> "MixtureAccelModel":
        """A target that never accelerates."""
        return cls(1.0, np.zeros((3, 3)), np.zeros((3, 3)))


class RngStream:
    """Seeded random stream; identical seeds give identical draws.

    Child streams from :meth:`split` are statistically independent and are
    themselves reproducible from the parent seed.
    """

    def __init__(self, seed: int | np.random.SeedSequence):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            self._seq = np.random.SeedSequence(int(seed))
        self.seed = self._seq.entropy
        self.generator = np.random.Generator(np.random.PCG64(self._seq))

    def split(self, n: int) -> list["RngStream"]:
        return [RngStream(s) for s in self._seq.spawn(n)]

    def random(self, size=None):
        return self.generator.random(size)

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def normal(self, scale: float = 1.0, size=None):
        return self.generator.normal(0.0, scale, size)


def effective_variance(model: MixtureAccelModel) -> np.ndarray:
    """Variance of the mixture: ``gamma W1 + (1 - gamma) W2``."""
    return model.gamma * model.W1 + (1.0 - model.gamma) * model.W2


def sample_acceleration(model: MixtureAccelModel, rng: RngStream) -> np.ndarray:
    mild = rng.random() < model.gamma
    z = rng.standard_normal(3)
    return (model._L1 if mild else model._L2) @ z


def sample_accelerations(model: MixtureAccelModel, rng: RngStream, n: int) -> np.ndarray:
    """Vectorised draw of ``n`` accelerations, shape (n, 3)."""
    mild = rng.random(n) < model.gamma
    z = rng.standard_normal((n, 3))
    return np.where(mild[:, None], z @ model._L1.T, z @ model._L2.T)


def step_target(
    state: AgentState, model: MixtureAccelModel, rng: RngStream, m: StepMatrices
) -> tuple[AgentState, np.ndarray]:
    """Draw one acceleration and advance the target; returns (new state, accel)."""
    u = sample_acceleration(model, rng)
    return propagate(state, u, m), u
