"""Scenario configuration: YAML schema, validation and bundled scenarios.

Schema (every section optional except where noted; unknown keys rejected)::

    timestep: float > 0                  # sampling period t (s)
    horizon: int >= 0                    # maximum number of steps
    burn_in: int >= 0                    # steady-state statistics use k > burn_in
    seeds: [int, ...]
    agents:                              # required
      guardian1|guardian2|protected|hostile: {position: [3], velocity: [3]}
    targets:
      protected|hostile: {gamma: (0,1], w1: [3] or [[3x3]], w2: ...}
    ranging: {sigma1: float >= 0, sigma2: float >= 0}
    shape: {rho, height_amplitude, height_frequency}
    controller: {alpha, beta, U, r1, rc, t_in, l_protect, l_warn, l_capture,
                 h1 (null disables ground projection), hysteresis}
    filter: {initial_covariance: identity | [6] | [[6x6]],
             init: prior_sample | protected | truth | explicit,
             initial_estimate: [6] (with init: explicit),
             perfect_estimate: bool}
    analysis: {settle_steps, transient_steps, pe_window, obs_window}

Numbers may be written as fractions in strings, e.g. ``rho: 1/24``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from ..asatc import ControllerParams, ShapeParams
from ..errors import ConfigError, InvalidParameterError
from ..kinematics import AgentState, make_step_matrices
from ..ranging import RangeNoiseModel
from ..target_motion import MixtureAccelModel, effective_variance
from ..tse import FilterParams

INIT_MODES = ("prior_sample", "protected", "truth", "explicit")
BUNDLED = ("paper_sec4",)


@dataclass(frozen=True)
class FilterConfig:
    initial_covariance: np.ndarray
    init: str = "prior_sample"
    initial_estimate: np.ndarray | None = None
    perfect_estimate: bool = False


@dataclass(frozen=True)
class AnalysisConfig:
    settle_steps: int = 20
    transient_steps: int = 50
    pe_window: int = 48
    obs_window: int = 72


@dataclass(frozen=True)
class ScenarioConfig:
    t: float
    horizon: int
    burn_in: int
    seeds: tuple[int, ...]
    guardian1: AgentState
    guardian2: AgentState
    protected: AgentState
    hostile: AgentState
    protected_accel: MixtureAccelModel
    hostile_accel: MixtureAccelModel
    noise: RangeNoiseModel
    shape: ShapeParams
    controller: ControllerParams
    filter: FilterConfig
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    source: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def filter_params(self) -> FilterParams:
        return FilterParams(
            step=make_step_matrices(self.t),
            process_variance=effective_variance(self.hostile_accel),
            initial_covariance=self.filter.initial_covariance,
        )

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.source, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def replace(self, **changes) -> "ScenarioConfig":
        """Rebuild from the source mapping with top-level or dotted-key overrides.

        ``cfg.replace(horizon=50, **{"controller.alpha": -0.05})``
        """
        src = json.loads(json.dumps(self.source))
        for key, value in changes.items():
            node = src
            parts = key.split(".")
            for part in parts[:-1]:
                node = node.setdefault(part, {})
            node[parts[-1]] = value
        return config_from_dict(src)


def _num(value, where: str) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, str):
        try:
            return float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"{where}: cannot parse number {value!r}") from None
    if isinstance(value, (int, float)):
        return float(value)
    raise ConfigError(f"{where}: expected a number, got {value!r}")


def _int(value, where: str) -> int:
    x = _num(value, where)
    if x != int(x):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return int(x)


def _vec(value, n: int, where: str) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or len(value) != n:
        raise ConfigError(f"{where}: expected a list of {n} numbers, got {value!r}")
    return np.array([_num(v, f"{where}[{i}]") for i, v in enumerate(value)])


def _matrix(value, n: int, where: str) -> np.ndarray:
    if value == "identity":
        return np.eye(n)
    if isinstance(value, (list, tuple)) and value and isinstance(value[0], (list, tuple)):
        if len(value) != n:
            raise ConfigError(f"{where}: expected {n} rows")
        return np.vstack([_vec(row, n, f"{where}[{i}]") for i, row in enumerate(value)])
    return np.diag(_vec(value, n, where))


def _section(raw: dict, name: str, allowed: set[str], required: bool = False) -> dict:
    sec = raw.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing required section '{name}'")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    _reject_unknown(sec, allowed, name)
    return sec


def _reject_unknown(mapping: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {unknown}; allowed {sorted(allowed)}")


def _agent(sec: dict, name: str) -> AgentState:
    if name not in sec:
        raise ConfigError(f"agents: missing '{name}'")
    a = sec[name]
    if not isinstance(a, dict):
        raise ConfigError(f"agents.{name} must be a mapping")
    _reject_unknown(a, {"position", "velocity"}, f"agents.{name}")
    pos = _vec(a.get("position"), 3, f"agents.{name}.position")
    vel = _vec(a.get("velocity", [0, 0, 0]), 3, f"agents.{name}.velocity")
    return AgentState(pos, vel)


def _mixture(sec: dict, name: str) -> MixtureAccelModel:
    m = sec.get(name)
    if m is None:
        return MixtureAccelModel.still()
    _reject_unknown(m, {"gamma", "w1", "w2"}, f"targets.{name}")
    w1 = _matrix(m.get("w1", [0, 0, 0]), 3, f"targets.{name}.w1")
    w2 = _matrix(m.get("w2", m.get("w1", [0, 0, 0])), 3, f"targets.{name}.w2")
    try:
        return MixtureAccelModel(_num(m.get("gamma", 1.0), f"targets.{name}.gamma"), w1, w2)
    except InvalidParameterError as exc:
        raise ConfigError(f"targets.{name}: {exc}") from None


def config_from_dict(raw: dict) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("scenario file must contain a mapping at the top level")
    _reject_unknown(
        raw,
        {"timestep", "horizon", "burn_in", "seeds", "agents", "targets", "ranging",
         "shape", "controller", "filter", "analysis"},
        "top level",
    )
    t = _num(raw.get("timestep", 0.5), "timestep")
    if not t > 0:
        raise ConfigError(f"timestep must be positive, got {t}")
    horizon = _int(raw.get("horizon", 200), "horizon")
    burn_in = _int(raw.get("burn_in", 100), "burn_in")
    if horizon < 0 or burn_in < 0:
        raise ConfigError("horizon and burn_in must be non-negative")
    if horizon < burn_in and horizon > 0:
        raise ConfigError(f"horizon ({horizon}) must not be shorter than burn_in ({burn_in})")
    seeds = raw.get("seeds", [0])
    if not isinstance(seeds, list):
        raise ConfigError("seeds must be a list of integers")
    seeds = tuple(_int(s, f"seeds[{i}]") for i, s in enumerate(seeds))

    agents = _section(raw, "agents", {"guardian1", "guardian2", "protected", "hostile"}, required=True)
    targets = _section(raw, "targets", {"protected", "hostile"})
    ranging = _section(raw, "ranging", {"sigma1", "sigma2"})
    shape = _section(raw, "shape", {"rho", "height_amplitude", "height_frequency"})
    ctrl = _section(
        raw, "controller",
        {"alpha", "beta", "U", "r1", "rc", "t_in", "l_protect", "l_warn", "l_capture", "h1", "hysteresis"},
    )
    filt = _section(raw, "filter", {"initial_covariance", "init", "initial_estimate", "perfect_estimate"})
    ana = _section(raw, "analysis", {"settle_steps", "transient_steps", "pe_window", "obs_window"})

    try:
        noise = RangeNoiseModel(
            _num(ranging.get("sigma1", 0.1), "ranging.sigma1"),
            _num(ranging.get("sigma2", 0.1), "ranging.sigma2"),
        )
        r1 = _num(ctrl.get("r1", 0.9), "controller.r1")
        shape_params = ShapeParams(
            rho=_num(shape.get("rho", "1/24"), "shape.rho"),
            radius=r1,
            height_amplitude=_num(shape.get("height_amplitude", 0.2), "shape.height_amplitude"),
            height_frequency=_num(shape.get("height_frequency", "1/8"), "shape.height_frequency"),
        )
        h1 = ctrl.get("h1", 0.7)
        controller = ControllerParams(
            alpha=_num(ctrl.get("alpha", -0.1), "controller.alpha"),
            beta=_num(ctrl.get("beta", 10), "controller.beta"),
            U_dist=_num(ctrl.get("U", 1.5), "controller.U"),
            t=t,
            r1=r1,
            rc=_num(ctrl.get("rc", 0.1), "controller.rc"),
            t_in=_int(ctrl.get("t_in", 30), "controller.t_in"),
            l_protect=_num(ctrl.get("l_protect", 8.5), "controller.l_protect"),
            l_warn=_num(ctrl.get("l_warn", 5.5), "controller.l_warn"),
            l_capture=_num(ctrl.get("l_capture", 3.0), "controller.l_capture"),
            h1=None if h1 is None else _num(h1, "controller.h1"),
            hysteresis=_num(ctrl.get("hysteresis", 0.0), "controller.hysteresis"),
        )
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from None

    init = filt.get("init", "prior_sample")
    if init not in INIT_MODES:
        raise ConfigError(f"filter.init must be one of {INIT_MODES}, got {init!r}")
    est0 = filt.get("initial_estimate")
    if init == "explicit":
        if est0 is None:
            raise ConfigError("filter.init 'explicit' requires filter.initial_estimate")
        est0 = _vec(est0, 6, "filter.initial_estimate")
    elif est0 is not None:
        raise ConfigError("filter.initial_estimate is only valid with init: explicit")
    perfect = filt.get("perfect_estimate", False)
    if not isinstance(perfect, bool):
        raise ConfigError("filter.perfect_estimate must be true or false")
    g0 = _matrix(filt.get("initial_covariance", "identity"), 6, "filter.initial_covariance")
    if not np.allclose(g0, g0.T) or np.linalg.eigvalsh(0.5 * (g0 + g0.T)).min() <= 0:
        raise ConfigError("filter.initial_covariance must be symmetric positive definite")
    if not perfect and not noise.gamma2 > 0:
        raise ConfigError("ranging noise must be positive unless filter.perfect_estimate is set")

    analysis = AnalysisConfig(
        settle_steps=_int(ana.get("settle_steps", 20), "analysis.settle_steps"),
        transient_steps=_int(ana.get("transient_steps", 50), "analysis.transient_steps"),
        pe_window=_int(ana.get("pe_window", 48), "analysis.pe_window"),
        obs_window=_int(ana.get("obs_window", 72), "analysis.obs_window"),
    )
    if min(analysis.pe_window, analysis.obs_window) < 1:
        raise ConfigError("analysis windows must be at least 1")

    return ScenarioConfig(
        t=t,
        horizon=horizon,
        burn_in=burn_in,
        seeds=seeds,
        guardian1=_agent(agents, "guardian1"),
        guardian2=_agent(agents, "guardian2"),
        protected=_agent(agents, "protected"),
        hostile=_agent(agents, "hostile"),
        protected_accel=_mixture(targets, "protected"),
        hostile_accel=_mixture(targets, "hostile"),
        noise=noise,
        shape=shape_params,
        controller=controller,
        filter=FilterConfig(g0, init, est0, perfect),
        analysis=analysis,
        source=json.loads(json.dumps(raw, default=str)),
    )


def parse_config(text: str, name: str = "<string>") -> ScenarioConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        where = f"{name}:{mark.line + 1}:{mark.column + 1}" if mark else name
        raise ConfigError(f"{where}: {exc.problem or exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{name}: {exc}") from None
    return config_from_dict(raw)


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("rangeguard") / "data" / f"{name}.yaml"))


def load_config(path) -> ScenarioConfig:
    """Load a scenario file, or a bundled scenario by name (e.g. ``"paper_sec4"``)."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        p = bundled_path(str(path))
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror}") from None
    return parse_config(text, str(p))
