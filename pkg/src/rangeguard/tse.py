"""Target state estimator: a time-varying Kalman filter on the hostile target.

The state is the 6-vector (position, velocity) of the hostile target; the
observation is the scalar range-difference ``Y = C(k) X + etabar`` with
``C(k) = [q12(k)', 0, 0, 0]``. The prediction uses the effective variance of
the target's acceleration mixture as process noise, and the posterior
covariance is computed in Joseph form and re-symmetrised after every step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, InvalidParameterError
from .kinematics import StepMatrices, as_vec3
from .ranging import ObservationSample, RangeNoiseModel, relative_observation


@dataclass(frozen=True)
class FilterState:
    estimate: np.ndarray
    covariance: np.ndarray
    # diagnostics of the update that produced this state; None for priors
    innovation: float | None = None
    innovation_variance: float | None = None

    def __post_init__(self):
        est = np.asarray(self.estimate, dtype=float)
        cov = np.asarray(self.covariance, dtype=float)
        if est.shape != (6,) or cov.shape != (6, 6):
            raise InvalidParameterError("filter state must be a 6-vector with a 6x6 covariance")
        object.__setattr__(self, "estimate", est)
        object.__setattr__(self, "covariance", cov)

    @property
    def position(self) -> np.ndarray:
        return self.estimate[:3]

    @property
    def velocity(self) -> np.ndarray:
        return self.estimate[3:]

    @property
    def nis(self) -> float | None:
        """Normalised innovation squared of the producing update."""
        if self.innovation is None:
            return None
        return self.innovation**2 / self.innovation_variance


@dataclass(frozen=True)
class FilterParams:
    step: StepMatrices
    process_variance: np.ndarray
    initial_covariance: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.process_variance, dtype=float)
        g0 = np.asarray(self.initial_covariance, dtype=float)
        if w.shape != (3, 3) or g0.shape != (6, 6):
            raise InvalidParameterError("process variance must be 3x3 and initial covariance 6x6")
        try:
            np.linalg.cholesky(symmetrize(g0))
        except np.linalg.LinAlgError:
            raise InvalidParameterError("initial covariance must be positive definite") from None
        object.__setattr__(self, "process_variance", symmetrize(w))
        object.__setattr__(self, "initial_covariance", symmetrize(g0))

    @property
    def process_noise(self) -> np.ndarray:
        """``B W B'``: the 6x6 process noise of the double integrator."""
        B = self.step.B
        return B @ self.process_variance @ B.T


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def initial_state(params: FilterParams, estimate) -> FilterState:
    return FilterState(np.asarray(estimate, dtype=float).copy(), params.initial_covariance.copy())


def predict(fs: FilterState, params: FilterParams, accel=None) -> tuple[np.ndarray, np.ndarray]:
    """Time update: ``A x`` (plus ``B u`` for a known input) and ``A G A' + B W B'``."""
    A = params.step.A
    x = A @ fs.estimate
    if accel is not None:
        x = x + params.step.B @ np.asarray(accel, dtype=float)
    P = symmetrize(A @ fs.covariance @ A.T + params.process_noise)
    return x, P


def kalman_gain(P_pred: np.ndarray, c_row: np.ndarray, gamma2: float) -> tuple[np.ndarray, float]:
    """Gain for a scalar observation; returns (gain, innovation variance)."""
    Pc = P_pred @ c_row
    s = float(c_row @ Pc) + gamma2
    if not s > 0:
        raise ConsistencyError(f"innovation variance must be positive, got {s}")
    return Pc / s, s


def update(predicted: tuple[np.ndarray, np.ndarray], obs: ObservationSample, params: FilterParams) -> FilterState:
    """Measurement update with the scalar range-difference observation."""
    if not obs.gamma2 > 0:
        raise InvalidParameterError(f"observation noise variance must be positive, got {obs.gamma2}")
    x_pred, P_pred = predicted
    c = obs.c_row
    if obs.degenerate:
        return FilterState(x_pred.copy(), P_pred.copy(), 0.0, obs.gamma2)
    K, s = kalman_gain(P_pred, c, obs.gamma2)
    innovation = obs.y - float(c @ x_pred)
    x = x_pred + K * innovation
    IKC = np.eye(len(x)) - np.outer(K, c)
    P = IKC @ P_pred @ IKC.T + obs.gamma2 * np.outer(K, K)
    return FilterState(x, symmetrize(P), innovation, s)


def step(fs: FilterState, obs: ObservationSample, params: FilterParams) -> FilterState:
    return update(predict(fs, params), obs, params)


def estimate_distances(fs: FilterState, p1, p2, protected_pos) -> tuple[float, float, float]:
    """Estimated distances of (protected target, guardian 1, guardian 2) to the hostile target."""
    est = fs.position
    return (
        float(np.linalg.norm(as_vec3(protected_pos) - est)),
        float(np.linalg.norm(as_vec3(p1) - est)),
        float(np.linalg.norm(as_vec3(p2) - est)),
    )


def relative_update(
    fs_rel: FilterState,
    q12,
    m1sq: float,
    m2sq: float,
    which: int,
    params: FilterParams,
    noise: RangeNoiseModel,
    guardian_accel=None,
) -> FilterState:
    """Predict/update cycle on guardian ``which``'s relative state ``(q_i, v_i - vbar2)``.

    Only the baseline ``q12`` between the guardians is needed, not their global
    positions. ``guardian_accel`` is the guardian's own control applied over
    the previous interval; it drives the relative dynamics as a known input.
    """
    obs = relative_observation(q12, m1sq, m2sq, which, noise)
    return update(predict(fs_rel, params, guardian_accel), obs, params)
