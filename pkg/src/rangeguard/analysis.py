"""Excitation/observability checks and error metrics over simulation logs."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .asatc import Zone
from .kinematics import inverse_power

PE_TOL = 1e-8


@dataclass(frozen=True)
class GramianReport:
    window_start: int
    window_len: int
    min_eig: float
    max_eig: float
    is_pe: bool
    matrix: np.ndarray


def _report(S: np.ndarray, start: int, window: int, tol: float, scale: float = 1.0) -> GramianReport:
    S = 0.5 * (S + S.T)
    eig = np.linalg.eigvalsh(S) / scale
    return GramianReport(start, window, float(eig[0]), float(eig[-1]), bool(eig[0] > tol), S / scale)


def pe_gramian(seq, start: int, window: int, tol: float = PE_TOL) -> GramianReport:
    """Windowed excitation Gramian ``sum_{m=start}^{start+window-1} v(m) v(m)'``."""
    seq = np.asarray(seq, dtype=float)
    if window < 1:
        raise ValueError(f"window must be at least 1, got {window}")
    if start < 0 or start + window > len(seq):
        raise IndexError(f"window [{start}, {start + window}) exceeds {len(seq)} samples")
    block = seq[start : start + window]
    return _report(block.T @ block, start, window, tol)


def sliding_pe(seq, window: int, first: int = 0, tol: float = PE_TOL) -> list[GramianReport]:
    seq = np.asarray(seq, dtype=float)
    return [pe_gramian(seq, s, window, tol) for s in range(first, len(seq) - window + 1)]


def observability_gramian(q12_seq, gamma2: float, t: float, start: int, window: int, tol: float = PE_TOL) -> GramianReport:
    """Uniform-observability Gramian of the pair ``(A, C(m) = [q12(m)', 0])``.

    ``sum_m (A^{-(start+window-1-m)})' C(m)' C(m) A^{-(start+window-1-m)} / gamma2``.
    """
    if not gamma2 > 0:
        raise ValueError(f"gamma2 must be positive, got {gamma2}")
    q = np.asarray(q12_seq, dtype=float)
    if window < 1:
        raise ValueError(f"window must be at least 1, got {window}")
    if start < 0 or start + window > len(q):
        raise IndexError(f"window [{start}, {start + window}) exceeds {len(q)} samples")
    S = np.zeros((6, 6))
    last = start + window - 1
    for m in range(start, last + 1):
        row = np.concatenate([q[m], np.zeros(3)]) @ inverse_power(last - m, t)
        S += np.outer(row, row)
    # eigenvalues taken before the 1/gamma2 scaling so they scale exactly
    return _report(S, start, window, tol, scale=gamma2)


def contraction_check(g_seq, alpha: float, beta: float) -> bool:
    """True iff every ``g (alpha - 1) + 1`` lies strictly inside ``max(1/beta, 1 - 1/beta)``."""
    if not (-1.0 / beta <= alpha < 0):
        warnings.warn(f"alpha={alpha} is outside the admissible gain interval [-1/beta, 0)", stacklevel=2)
    bound = max(1.0 / beta, 1.0 - 1.0 / beta)
    a_tilde = np.asarray(g_seq, dtype=float) * (alpha - 1.0) + 1.0
    return bool(np.all(np.abs(a_tilde) < bound))


@dataclass
class ErrorTrace:
    k: np.ndarray
    zones: np.ndarray
    estimation: np.ndarray  # hostile state minus estimate, (n, 6)
    ebar1: np.ndarray  # q_1^1 + q_2^1, (n, 3)
    ebar2: np.ndarray  # q_1^2 + q_2^2, (n, 3)

    @property
    def pos_norm(self) -> np.ndarray:
        return np.linalg.norm(self.estimation[:, :3], axis=1)

    @property
    def vel_norm(self) -> np.ndarray:
        return np.linalg.norm(self.estimation[:, 3:], axis=1)

    @property
    def ebar1_norm(self) -> np.ndarray:
        return np.linalg.norm(self.ebar1, axis=1)

    @property
    def ebar2_norm(self) -> np.ndarray:
        return np.linalg.norm(self.ebar2, axis=1)

    def windowed_mse(self, name: str, window: int) -> np.ndarray:
        """Trailing-window mean of a squared error norm (``pos``, ``vel``, ``state``, ``ebar1``, ``ebar2``)."""
        sq = {
            "pos": self.pos_norm**2,
            "vel": self.vel_norm**2,
            "state": np.sum(self.estimation**2, axis=1),
            "ebar1": self.ebar1_norm**2,
            "ebar2": self.ebar2_norm**2,
        }[name]
        if len(sq) < window:
            return np.zeros(0)
        c = np.cumsum(np.concatenate([[0.0], sq]))
        return (c[window:] - c[:-window]) / window


def compute_errors(log, protected_height: float | None = 0.7) -> ErrorTrace:
    """Estimation and anti-synchronisation errors for every logged step.

    ``protected_height`` projects the protected target as the controller does
    (``None`` keeps its true height).
    """
    if len(log) == 0:
        z = np.zeros((0, 3))
        return ErrorTrace(np.zeros(0, int), np.zeros(0, object), np.zeros((0, 6)), z, z)
    p1 = log["guardian1"][:, :3]
    p2 = log["guardian2"][:, :3]
    ref1 = log["protected"][:, :3].copy()
    if protected_height is not None:
        ref1[:, 2] = protected_height
    host = log["hostile"]
    return ErrorTrace(
        k=log.column("k"),
        zones=log.column("zone"),
        estimation=host - log["estimate"],
        ebar1=(p1 - ref1) + (p2 - ref1),
        ebar2=(p1 - host[:, :3]) + (p2 - host[:, :3]),
    )


def recursion_residuals(log, alpha: float) -> np.ndarray:
    """Per-step residual of ``q12(k+1) = a~ q12(k) + 2 (alpha zeta(k) - zeta(k+1))``."""
    if len(log) < 2:
        return np.zeros(0)
    q12 = log["guardian1"][:, :3] - log["guardian2"][:, :3]
    a_tilde = log.column("g") * (alpha - 1.0) + 1.0
    pred = a_tilde[:-1, None] * q12[:-1] + 2.0 * (alpha * log["zeta"][:-1] - log["zeta_next"][:-1])
    return np.linalg.norm(q12[1:] - pred, axis=1)


def q12_sequence(log) -> np.ndarray:
    return log["guardian1"][:, :3] - log["guardian2"][:, :3]


def phase_mask(zones, phases, settle: int = 0) -> np.ndarray:
    """Steps whose zone is in ``phases`` and has been held continuously for ``settle`` steps."""
    zones = [z.value if isinstance(z, Zone) else z for z in zones]
    wanted = {p.value if isinstance(p, Zone) else p for p in phases}
    mask = np.zeros(len(zones), dtype=bool)
    run = 0
    for i, z in enumerate(zones):
        run = run + 1 if z in wanted else 0
        mask[i] = run > settle
    return mask


def capture_timing(log) -> dict | None:
    """Entry step of the last Capture stint and its length up to declaration."""
    zones = log.zones
    if not zones or zones[-1] != Zone.CAPTURE.value:
        return None
    entry = len(zones) - 1
    while entry > 0 and zones[entry - 1] == Zone.CAPTURE.value:
        entry -= 1
    return {
        "entry_step": int(log.records[entry]["k"]),
        "steps_to_rc": int(log.records[-1]["k"] - log.records[entry]["k"]),
        "captured": log.captured,
        "entry_radius": log.records[entry]["radius"],
        "final_radius": log.records[-1]["radius"],
    }


def nis_mean(log) -> float:
    inn = log.column("innovation")
    s = log.column("innovation_var")
    ok = np.isfinite(inn) & (s > 0)
    return float(np.mean(inn[ok] ** 2 / s[ok])) if ok.any() else float("nan")


def episode_summary(log, cfg, burn_in: int | None = None) -> dict:
    burn_in = cfg.burn_in if burn_in is None else burn_in
    tr = compute_errors(log, cfg.controller.h1)
    settle = cfg.analysis.settle_steps
    post = tr.k > burn_in
    protect = phase_mask(tr.zones, [Zone.PROTECT], settle)
    engage = phase_mask(tr.zones, [Zone.WARN, Zone.CAPTURE], settle)

    def frac(values, mask, bound):
        return float(np.mean(values[mask] < bound)) if mask.any() else None

    def rms(values, mask):
        return float(np.sqrt(np.mean(values[mask] ** 2))) if mask.any() else None

    return {
        "seed": log.seed,
        "steps": len(log),
        "captured": log.captured,
        "capture": capture_timing(log),
        "post_burn_in_steps": int(post.sum()),
        "pos_err_frac_below_0.5": frac(tr.pos_norm, post, 0.5),
        "vel_err_frac_below_0.1": frac(tr.vel_norm, post, 0.1),
        "pos_err_rms": rms(tr.pos_norm, post),
        "vel_err_rms": rms(tr.vel_norm, post),
        "ebar1_steady_steps": int(protect.sum()),
        "ebar1_frac_below_0.1": frac(tr.ebar1_norm, protect, 0.1),
        "ebar1_max": float(tr.ebar1_norm[protect].max()) if protect.any() else None,
        "ebar2_steady_steps": int(engage.sum()),
        "ebar2_frac_below_0.6": frac(tr.ebar2_norm, engage, 0.6),
        "ebar2_rms": rms(tr.ebar2_norm, engage),
        "cov_min_eig": float(log.column("cov_min_eig").min()) if len(log) else None,
        "cov_max_eig": float(log.column("cov_max_eig").max()) if len(log) else None,
        "nis_mean": nis_mean(log),
        "contraction_ok": contraction_check(log.column("g"), cfg.controller.alpha, cfg.controller.beta)
        if len(log)
        else True,
    }


def batch_summary(logs, cfg, burn_in: int | None = None) -> dict:
    per_seed = [episode_summary(lg, cfg, burn_in) for lg in logs]
    burn_in = cfg.burn_in if burn_in is None else burn_in
    traces = [compute_errors(lg, cfg.controller.h1) for lg in logs]
    post_pos = np.concatenate([tr.pos_norm[tr.k > burn_in] for tr in traces])
    post_vel = np.concatenate([tr.vel_norm[tr.k > burn_in] for tr in traces])

    def stats(x):
        if len(x) == 0:
            return None
        q = np.quantile(x, [0.5, 0.9, 0.99])
        return {"mean": float(x.mean()), "rms": float(np.sqrt(np.mean(x**2))),
                "p50": float(q[0]), "p90": float(q[1]), "p99": float(q[2])}

    return {
        "seeds": [lg.seed for lg in logs],
        "burn_in": burn_in,
        "captured": sum(bool(s["captured"]) for s in per_seed),
        "ensemble_pos_err": stats(post_pos),
        "ensemble_vel_err": stats(post_vel),
        "per_seed": per_seed,
    }


def gramian_summary(log, cfg) -> dict:
    """Minimum eigenvalues of all post-transient excitation and observability windows."""
    q = q12_sequence(log)
    first = cfg.analysis.transient_steps
    N, M = cfg.analysis.pe_window, cfg.analysis.obs_window
    pe = sliding_pe(q, N, first)
    obs = [
        observability_gramian(q, cfg.noise.gamma2, cfg.t, s, M)
        for s in range(first, len(q) - M + 1)
    ] if cfg.noise.gamma2 > 0 else []
    return {
        "pe_windows": len(pe),
        "pe_min_eig": min((r.min_eig for r in pe), default=None),
        "pe_all": all(r.is_pe for r in pe),
        "obs_windows": len(obs),
        "obs_min_eig": min((r.min_eig for r in obs), default=None),
        "obs_all": all(r.is_pe for r in obs),
    }
