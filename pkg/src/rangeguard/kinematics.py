"""Discrete-time double-integrator motion shared by guardians and targets.

Every agent is a point mass with stacked state ``X = (p, v)`` evolving as
``X(k+1) = A X(k) + B u(k)`` with

    A = [[I, tI], [0, I]],    B = [[t^2/2 I], [t I]].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

_I3 = np.eye(3)


def as_vec3(value, name: str = "vector") -> np.ndarray:
    """Return ``value`` as a finite float array of shape (3,)."""
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        raise InvalidParameterError(f"{name} must have 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"{name} has non-finite components: {arr}")
    return arr


@dataclass(frozen=True)
class AgentState:
    """Position (m) and velocity (m/s) of a point-mass agent."""

    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", as_vec3(self.position, "position"))
        object.__setattr__(self, "velocity", as_vec3(self.velocity, "velocity"))

    @classmethod
    def from_stacked(cls, x) -> "AgentState":
        x = np.asarray(x, dtype=float)
        if x.shape != (6,):
            raise InvalidParameterError(f"stacked state must have 6 components, got {x.shape}")
        return cls(x[:3].copy(), x[3:].copy())

    @classmethod
    def at_rest(cls, position) -> "AgentState":
        return cls(position, np.zeros(3))

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity])

    def __eq__(self, other):
        if not isinstance(other, AgentState):
            return NotImplemented
        return np.array_equal(self.position, other.position) and np.array_equal(
            self.velocity, other.velocity
        )

    __hash__ = None


@dataclass(frozen=True)
class StepMatrices:
    A: np.ndarray
    B: np.ndarray
    t: float


def make_step_matrices(t: float) -> StepMatrices:
    """Build the transition and input matrices for sampling period ``t`` seconds."""
    t = float(t)
    if not math.isfinite(t) or t <= 0:
        raise InvalidParameterError(f"sampling period must be positive and finite, got {t}")
    A = np.eye(6)
    A[:3, 3:] = t * _I3
    B = np.vstack([0.5 * t * t * _I3, t * _I3])
    A.setflags(write=False)
    B.setflags(write=False)
    return StepMatrices(A=A, B=B, t=t)


def propagate(state: AgentState, accel, m: StepMatrices) -> AgentState:
    """One step of ``X(k+1) = A X(k) + B u(k)``."""
    u = as_vec3(accel, "acceleration")
    return AgentState.from_stacked(m.A @ state.stacked() + m.B @ u)


def propagate_stacked(x: np.ndarray, accel: np.ndarray, m: StepMatrices) -> np.ndarray:
    """Array form of :func:`propagate` without validation; used in inner loops."""
    return m.A @ x + m.B @ accel


def inverse_power(n: int, t: float) -> np.ndarray:
    """Closed form of ``A^{-n}``: identity blocks with ``-n t I`` in the upper right."""
    out = np.eye(6)
    out[:3, 3:] = -n * t * _I3
    return out
