"""Anti-synchronisation anti-target controller.

Two guardians track a reference point (the protected target, or the
estimate of the hostile target) so that guardian 1 sits at ``-zeta(k)`` and
guardian 2 at ``+zeta(k)`` relative to it, where ``zeta`` is a time-varying
encirclement shape: a horizontal circle of radius ``r(k)`` combined with a
vertical oscillation. The same law

    u_i = 2/t^2 [(alpha - 1) g q_i + dzeta_i] + 2/t (v_ref - v_i)

is used in every zone; only the reference and the radius change.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidParameterError
from .kinematics import AgentState
from .tse import FilterState


class Zone(str, enum.Enum):
    PROTECT = "Protect"
    WARN = "Warn"
    CAPTURE = "Capture"


@dataclass(frozen=True)
class ShapeParams:
    """Encirclement shape ``zeta(k) = r(k) [sin(rho k pi), cos(rho k pi), h(k)]``.

    ``h(k) = height_amplitude * cos(height_frequency * pi * k)`` unless a
    custom ``height_fn`` is given. ``radius_fn`` gives the nominal radius
    schedule; controllers may override it with the capture schedule.
    """

    rho: float
    radius: float = 0.9
    height_amplitude: float = 0.2
    height_frequency: float = 0.125
    height_fn: Callable[[int], float] | None = None
    radius_fn: Callable[[int], float] | None = None

    def r(self, k: int) -> float:
        return self.radius_fn(k) if self.radius_fn is not None else self.radius

    def h(self, k: int) -> float:
        if self.height_fn is not None:
            return self.height_fn(k)
        return self.height_amplitude * math.cos(self.height_frequency * math.pi * k)


@dataclass(frozen=True)
class ControllerParams:
    alpha: float
    beta: float
    U_dist: float
    t: float
    r1: float
    rc: float
    t_in: int
    l_protect: float
    l_warn: float
    l_capture: float
    h1: float | None = 0.7
    hysteresis: float = 0.0

    def __post_init__(self):
        if not self.beta > 1:
            raise InvalidParameterError(f"beta must exceed 1, got {self.beta}")
        # the lower end is closed: the reference gain sits exactly at -1/beta
        if not (-1.0 / self.beta <= self.alpha < 0):
            raise InvalidParameterError(
                f"alpha must lie in [-1/beta, 0) = [{-1.0 / self.beta:g}, 0), got {self.alpha}"
            )
        if not self.U_dist > 0:
            raise InvalidParameterError(f"U_dist must be positive, got {self.U_dist}")
        if not self.t > 0:
            raise InvalidParameterError(f"sampling period must be positive, got {self.t}")
        if not (self.l_protect > self.l_warn > self.l_capture > 0):
            raise InvalidParameterError(
                "zone thresholds must satisfy l_protect > l_warn > l_capture > 0, got "
                f"({self.l_protect}, {self.l_warn}, {self.l_capture})"
            )
        if not (0 < self.rc < self.r1):
            raise InvalidParameterError(f"radii must satisfy 0 < rc < r1, got rc={self.rc}, r1={self.r1}")
        if int(self.t_in) != self.t_in or self.t_in < 1:
            raise InvalidParameterError(f"t_in must be a positive integer, got {self.t_in}")
        if self.hysteresis < 0:
            raise InvalidParameterError(f"hysteresis must be non-negative, got {self.hysteresis}")
        object.__setattr__(self, "t_in", int(self.t_in))

    @property
    def alpha_bar(self) -> float:
        return self.alpha - 1.0


@dataclass
class EngagementState:
    """Zone bookkeeping owned by the simulation loop.

    ``capture_step_count`` counts steps since entering Capture (0 on the
    entry step) and drives the radius schedule.
    """

    zone: Zone = Zone.PROTECT
    current_radius: float = 0.9
    capture_step_count: int = 0


def shape_vector(k: int, sp: ShapeParams, radius: float | None = None) -> np.ndarray:
    if k < 0:
        raise InvalidParameterError(f"step must be non-negative, got {k}")
    r = sp.r(k) if radius is None else radius
    phase = sp.rho * k * math.pi
    return r * np.array([math.sin(phase), math.cos(phase), sp.h(k)])


def delta_zeta(i: int, k: int, alpha: float, sp: ShapeParams, radius=None, next_radius=None) -> np.ndarray:
    """``(-1)^i (zeta(k+1) - alpha zeta(k))``."""
    _check_index(i)
    sign = -1.0 if i == 1 else 1.0
    return sign * (shape_vector(k + 1, sp, next_radius) - alpha * shape_vector(k, sp, radius))


def g_constraint(d1: float, d2: float, cp: ControllerParams) -> float:
    """Distance-dependent gain in ``(1/beta, 1]`` limiting control magnitude."""
    if d1 < 0 or d2 < 0:
        raise InvalidParameterError(f"distances must be non-negative, got ({d1}, {d2})")
    mean = 0.5 * (d1 + d2)
    U, beta = cp.U_dist, cp.beta
    if mean <= U:
        return 1.0
    # (U (beta - 1) / mean + 1) / beta, arranged to stay inside (1/beta, 1] under rounding
    return 1.0 / beta + (1.0 - 1.0 / beta) * (U / mean)


def contraction_factor(g: float, alpha: float) -> float:
    return g * (alpha - 1.0) + 1.0


def classify_zone(d12_hat: float, cp: ControllerParams, previous: Zone | None = None) -> Zone:
    """Zone from the estimated inter-target distance.

    Boundaries belong to the outer zone. Distances below ``l_capture`` remain
    in Capture. With ``cp.hysteresis > 0`` and a ``previous`` zone, a switch
    to an outer zone requires clearing the boundary by the hysteresis band.
    """
    if d12_hat < 0:
        raise InvalidParameterError(f"distance must be non-negative, got {d12_hat}")
    raw = _raw_zone(d12_hat, cp)
    if cp.hysteresis == 0 or previous is None or _rank(raw) >= _rank(previous):
        return raw
    # moving outward: only accept if the shifted distance still lands there
    shifted = _raw_zone(max(0.0, d12_hat - cp.hysteresis), cp)
    return shifted if _rank(shifted) < _rank(previous) else previous


def _raw_zone(d: float, cp: ControllerParams) -> Zone:
    if d >= cp.l_protect:
        return Zone.PROTECT
    if d >= cp.l_warn:
        return Zone.WARN
    return Zone.CAPTURE


def _rank(zone: Zone) -> int:
    return {Zone.PROTECT: 0, Zone.WARN: 1, Zone.CAPTURE: 2}[zone]


def radius_schedule(eng: EngagementState, cp: ControllerParams, steps_in_capture: int | None = None) -> float:
    """Encirclement radius after ``steps_in_capture`` steps in Capture.

    Linear decrement of ``(r1 - rc) / t_in`` per step from ``r1``; equals ``rc``
    exactly after ``t_in`` steps and stays there.
    """
    n = eng.capture_step_count if steps_in_capture is None else steps_in_capture
    if eng.zone is not Zone.CAPTURE:
        return cp.r1
    if n >= cp.t_in:
        return cp.rc
    return cp.r1 - n * (cp.r1 - cp.rc) / cp.t_in


def advance_engagement(eng: EngagementState, zone: Zone, cp: ControllerParams) -> EngagementState:
    """Enter ``zone`` for the current step and refresh the radius.

    Re-entering Capture restarts the schedule from ``r1``.
    """
    if zone is Zone.CAPTURE:
        count = eng.capture_step_count + 1 if eng.zone is Zone.CAPTURE else 0
    else:
        count = 0
    eng.zone = zone
    eng.capture_step_count = count
    eng.current_radius = radius_schedule(eng, cp)
    return eng


def is_captured(eng: EngagementState, cp: ControllerParams) -> bool:
    """Capture holds once the radius has shrunk to ``rc`` inside the Capture zone."""
    return eng.zone is Zone.CAPTURE and eng.current_radius <= cp.rc


def next_radius(eng: EngagementState, cp: ControllerParams) -> float:
    """Radius expected at the next step if the zone is held."""
    if eng.zone is not Zone.CAPTURE:
        return cp.r1
    return radius_schedule(eng, cp, eng.capture_step_count + 1)


def reference_position(protected: AgentState, cp: ControllerParams) -> np.ndarray:
    """Protected-target position, projected to height ``h1`` for ground targets."""
    p = protected.position.copy()
    if cp.h1 is not None:
        p[2] = cp.h1
    return p


def _law(i, q_i, g, v_ref, v_i, k, cp, sp, radius, nxt) -> np.ndarray:
    dz = delta_zeta(i, k, cp.alpha, sp, radius, nxt)
    return 2.0 / cp.t**2 * (cp.alpha_bar * g * q_i + dz) + 2.0 / cp.t * (v_ref - v_i)


def protect_gain(guardians: tuple[AgentState, AgentState], protected: AgentState, cp: ControllerParams) -> float:
    ref = reference_position(protected, cp)
    return g_constraint(
        float(np.linalg.norm(guardians[0].position - ref)),
        float(np.linalg.norm(guardians[1].position - ref)),
        cp,
    )


def engage_gain(guardians: tuple[AgentState, AgentState], fs: FilterState, cp: ControllerParams) -> float:
    est = fs.position
    return g_constraint(
        float(np.linalg.norm(guardians[0].position - est)),
        float(np.linalg.norm(guardians[1].position - est)),
        cp,
    )


def control_protect(
    i: int,
    guardians: tuple[AgentState, AgentState],
    protected: AgentState,
    k: int,
    cp: ControllerParams,
    sp: ShapeParams,
) -> np.ndarray:
    """Encircle the protected target at the nominal radius ``r1``.

    Uses the protected target's shared true state; the gain comes from the
    true guardian-to-target distances.
    """
    _check_index(i)
    g = protect_gain(guardians, protected, cp)
    me = guardians[i - 1]
    q = me.position - reference_position(protected, cp)
    return _law(i, q, g, protected.velocity, me.velocity, k, cp, sp, cp.r1, cp.r1)


def protect_components(i, guardians, protected, k, cp, sp) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split the protect-phase control into (encirclement, tracking, compensation) parts."""
    _check_index(i)
    s = -1.0 if i == 1 else 1.0
    g = protect_gain(guardians, protected, cp)
    me = guardians[i - 1]
    q = me.position - reference_position(protected, cp)
    z0 = shape_vector(k, sp, cp.r1)
    z1 = shape_vector(k + 1, sp, cp.r1)
    u_cir = 2.0 * cp.alpha / cp.t**2 * (g * q - s * z0)
    u_tra = -2.0 / cp.t**2 * (g * q - s * z1)
    u_com = 2.0 / cp.t * (protected.velocity - me.velocity)
    return u_cir, u_tra, u_com


def control_engage(
    i: int,
    guardians: tuple[AgentState, AgentState],
    fs: FilterState,
    k: int,
    eng: EngagementState,
    cp: ControllerParams,
    sp: ShapeParams,
) -> np.ndarray:
    """Encircle (Warn) or close in on (Capture) the estimated hostile target."""
    _check_index(i)
    if eng.zone is Zone.PROTECT:
        raise InvalidParameterError("control_engage requires the Warn or Capture zone")
    g = engage_gain(guardians, fs, cp)
    me = guardians[i - 1]
    q_hat = me.position - fs.position
    return _law(i, q_hat, g, fs.velocity, me.velocity, k, cp, sp, eng.current_radius, next_radius(eng, cp))


def as_manner_residual(zeta, q1, q2) -> tuple[float, float]:
    """Deviation from anti-synchronised placement; both zero when achieved."""
    zeta = np.asarray(zeta, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    nz = np.linalg.norm(zeta)
    return (
        float(zeta @ q1 + nz * np.linalg.norm(q1)),
        float(zeta @ q2 - nz * np.linalg.norm(q2)),
    )


def _check_index(i: int) -> None:
    if i not in (1, 2):
        raise InvalidParameterError(f"guardian index must be 1 or 2, got {i}")
