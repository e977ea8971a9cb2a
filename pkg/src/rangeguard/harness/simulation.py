"""Deterministic episode loop wiring motion, sensing, estimation and control.

Step ``k`` (time ``k t``):

1. for ``k > 0``: draw target accelerations and advance both targets to k;
   measure squared ranges at the guardians' current positions; run the
   estimator predict/update;
2. estimate inter-target distances and classify the zone;
3. update the capture radius;
4. compute both guardians' controls from the estimate at k;
5. log the step, stop on capture, then advance the guardians to k+1.

At ``k = 0`` the estimate is the configured prior with covariance ``G(0)``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import asatc
from ..asatc import EngagementState, Zone
from ..errors import SimulationError
from ..kinematics import make_step_matrices, propagate
from ..ranging import build_observation, measure_squared_range
from ..target_motion import RngStream, step_target
from ..tse import FilterState, estimate_distances, initial_state, predict, update
from .config import ScenarioConfig
from .simlog import SimLog

log = logging.getLogger(__name__)

_NAN = float("nan")


@dataclass
class _Streams:
    protected: RngStream
    hostile: RngStream
    range1: RngStream
    range2: RngStream
    init: RngStream


def _streams(seed: int) -> _Streams:
    return _Streams(*RngStream(seed).split(5))


def _initial_estimate(cfg: ScenarioConfig, rng: RngStream) -> np.ndarray:
    mode = cfg.filter.init
    truth = cfg.hostile.stacked()
    if mode == "truth":
        return truth.copy()
    if mode == "protected":
        return np.concatenate([cfg.protected.position, np.zeros(3)])
    if mode == "explicit":
        return np.asarray(cfg.filter.initial_estimate, dtype=float).copy()
    # prior_sample: error drawn from N(0, G(0)), so G(0) is the true error variance
    L = np.linalg.cholesky(cfg.filter.initial_covariance)
    return truth + L @ rng.standard_normal(6)


def _check_finite(k: int, **quantities) -> None:
    for name, value in quantities.items():
        if not np.all(np.isfinite(value)):
            raise SimulationError(k, name, value)


def run_episode(cfg: ScenarioConfig, seed: int) -> SimLog:
    m = make_step_matrices(cfg.t)
    cp, sp = cfg.controller, cfg.shape
    params = cfg.filter_params
    rng = _streams(seed)

    guardians = [cfg.guardian1, cfg.guardian2]
    protected, hostile = cfg.protected, cfg.hostile
    fs = initial_state(params, _initial_estimate(cfg, rng.init))
    eng = EngagementState(zone=Zone.PROTECT, current_radius=cp.r1)
    out = SimLog(seed=seed, config_hash=cfg.config_hash)

    for k in range(cfg.horizon):
        y = innovation = s = _NAN
        if k > 0:
            protected, _ = step_target(protected, cfg.protected_accel, rng.protected, m)
            hostile, _ = step_target(hostile, cfg.hostile_accel, rng.hostile, m)
            p1, p2 = guardians[0].position, guardians[1].position
            m1 = measure_squared_range(p1, hostile.position, cfg.noise.sigma1, rng.range1)
            m2 = measure_squared_range(p2, hostile.position, cfg.noise.sigma2, rng.range2)
            obs = build_observation(p1, p2, m1, m2, cfg.noise)
            y = obs.y
            if cfg.filter.perfect_estimate:
                fs = FilterState(hostile.stacked(), fs.covariance)
            else:
                fs = update(predict(fs, params), obs, params)
                innovation, s = fs.innovation, fs.innovation_variance
        elif cfg.filter.perfect_estimate:
            fs = FilterState(hostile.stacked(), fs.covariance)
        _check_finite(k, estimate=fs.estimate, covariance=fs.covariance)

        d12, d1, d2 = estimate_distances(fs, guardians[0].position, guardians[1].position, protected.position)
        zone = asatc.classify_zone(d12, cp, previous=eng.zone if k > 0 else None)
        asatc.advance_engagement(eng, zone, cp)
        radius, radius_next = eng.current_radius, asatc.next_radius(eng, cp)

        pair = (guardians[0], guardians[1])
        if zone is Zone.PROTECT:
            g = asatc.protect_gain(pair, protected, cp)
            u = [asatc.control_protect(i, pair, protected, k, cp, sp) for i in (1, 2)]
            ref = asatc.reference_position(protected, cp)
        else:
            g = asatc.engage_gain(pair, fs, cp)
            u = [asatc.control_engage(i, pair, fs, k, eng, cp, sp) for i in (1, 2)]
            ref = fs.position
        _check_finite(k, u1=u[0], u2=u[1])

        eig = np.linalg.eigvalsh(fs.covariance)
        err = hostile.stacked() - fs.estimate
        captured = asatc.is_captured(eng, cp)
        out.append(
            k=k,
            zone=zone.value,
            radius=radius,
            radius_next=radius_next,
            g=g,
            captured=int(captured),
            guardian1=guardians[0].stacked(),
            guardian2=guardians[1].stacked(),
            protected=protected.stacked(),
            hostile=hostile.stacked(),
            estimate=fs.estimate,
            cov_diag=np.diag(fs.covariance),
            cov_min_eig=float(eig[0]),
            cov_max_eig=float(eig[-1]),
            obs_y=y,
            innovation=innovation,
            innovation_var=s,
            u1=u[0],
            u2=u[1],
            zeta=asatc.shape_vector(k, sp, radius),
            zeta_next=asatc.shape_vector(k + 1, sp, radius_next),
            reference=ref,
            d12_hat=d12,
            d1_hat=d1,
            d2_hat=d2,
            est_pos_err=float(np.linalg.norm(err[:3])),
            est_vel_err=float(np.linalg.norm(err[3:])),
        )
        if captured:
            log.debug("seed %s: capture declared at step %d", seed, k)
            break
        guardians = [propagate(guardians[i], u[i], m) for i in range(2)]
    return out


def _run_one(args):
    cfg, seed = args
    return run_episode(cfg, seed)


@dataclass
class BatchResult:
    seeds: tuple[int, ...]
    logs: list[SimLog]
    summary: dict


def run_batch(cfg: ScenarioConfig, seeds=None, workers: int = 1, burn_in: int | None = None) -> BatchResult:
    """Run one episode per seed and aggregate ensemble error statistics.

    Results do not depend on ``workers``; each episode owns its streams.
    """
    from ..analysis import batch_summary

    seeds = tuple(cfg.seeds if seeds is None else seeds)
    if not seeds:
        raise ValueError("run_batch needs at least one seed")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            logs = list(pool.map(_run_one, [(cfg, s) for s in seeds]))
    else:
        logs = [run_episode(cfg, s) for s in seeds]
    summary = batch_summary(logs, cfg, cfg.burn_in if burn_in is None else burn_in)
    return BatchResult(seeds, logs, summary)


__all__ = ["run_episode", "run_batch", "BatchResult"]
