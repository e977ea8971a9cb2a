import json
import subprocess
import sys
import time

import numpy as np
import pytest

from rangeguard.analysis import compute_errors
from rangeguard.errors import ConfigError, SimulationError
from rangeguard.harness import COLUMNS, SimLog, export, import_csv, load_config, parse_config, run_batch, run_episode
from rangeguard.harness import simulation
from rangeguard.harness.cli import SUMMARY_BEGIN, SUMMARY_END, main
from rangeguard.harness.config import bundled_path

MINIMAL = """
agents:
  guardian1: {position: [2, 2, 1]}
  guardian2: {position: [0, 1.5, 0.5]}
  protected: {position: [0, 0, 0]}
  hostile: {position: [2, 12, 2]}
"""


def test_bundled_scenario_values(sec4):
    assert sec4.t == 0.5 and sec4.horizon == 200 and sec4.burn_in == 100
    assert sec4.seeds == tuple(range(20))
    assert sec4.shape.rho == pytest.approx(1 / 24)
    assert sec4.shape.height_frequency == pytest.approx(1 / 8)
    c = sec4.controller
    assert (c.alpha, c.beta, c.U_dist, c.r1, c.rc, c.t_in) == (-0.1, 10, 1.5, 0.9, 0.1, 30)
    assert (c.l_protect, c.l_warn, c.l_capture, c.h1) == (8.5, 5.5, 3.0, 0.7)
    np.testing.assert_allclose(np.diag(sec4.filter_params.process_variance), [0.00096, 0.0024, 5e-6])
    np.testing.assert_array_equal(sec4.filter.initial_covariance, np.eye(6))
    assert sec4.noise.gamma2 == pytest.approx(0.05)
    np.testing.assert_array_equal(sec4.hostile.velocity, [-0.02, -0.1, 0])
    assert bundled_path("paper_sec4").exists()


def test_minimal_config_uses_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.controller.alpha == -0.1 and cfg.horizon == 200
    assert cfg.filter.init == "prior_sample"


@pytest.mark.parametrize(
    "override,needle",
    [
        ({"controller.l_warn": 9.0}, "l_protect > l_warn"),
        ({"controller.alpha": -0.2}, "alpha"),
        ({"controller.bogus": 1}, "bogus"),
        ({"horizon": 50}, "burn_in"),
        ({"timestep": 0}, "timestep"),
        ({"filter.init": "guess"}, "filter.init"),
        ({"filter.initial_covariance": [1, 1, 1, 1, 1, -1]}, "positive definite"),
        ({"ranging": {"sigma1": 0, "sigma2": 0}}, "noise"),
        ({"targets.hostile.gamma": 0}, "gamma"),
        ({"shape.rho": "1/x"}, "shape.rho"),
    ],
)
def test_invalid_configs(sec4, override, needle):
    with pytest.raises(ConfigError, match=needle):
        sec4.replace(**override)


def test_yaml_error_reports_line():
    with pytest.raises(ConfigError, match=r"bad\.yaml:3:"):
        parse_config("agents:\n  guardian1: {position: [1, 2, 3]}\n  protected: [: oops\n", "bad.yaml")
    with pytest.raises(ConfigError, match="mapping"):
        parse_config("- 1\n- 2\n")


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.yaml")


def test_config_hash_tracks_content(sec4):
    assert sec4.config_hash == load_config("paper_sec4").config_hash
    assert sec4.replace(horizon=150).config_hash != sec4.config_hash


def test_zero_horizon_gives_empty_log(sec4):
    lg = run_episode(sec4.replace(horizon=0, burn_in=0), 0)
    assert len(lg) == 0 and not lg.captured


def test_episode_record_layout(sec4):
    lg = run_episode(sec4, 3)
    assert len(lg) == sec4.horizon
    np.testing.assert_array_equal(lg.column("k"), np.arange(len(lg)))
    assert set(lg.records[0]) == set(COLUMNS)
    assert np.isnan(lg.records[0]["obs_y"]) and np.isfinite(lg.records[1]["obs_y"])
    assert set(lg.zones) <= {"Protect", "Warn", "Capture"}
    assert np.all(lg.column("cov_min_eig") > 0)


def test_same_seed_is_bit_identical(sec4):
    assert run_episode(sec4, 7).same_as(run_episode(sec4, 7))
    assert not run_episode(sec4, 7).same_as(run_episode(sec4, 8))


def test_batch_is_worker_independent(sec4):
    a = run_batch(sec4, seeds=[0, 1, 2], workers=1)
    b = run_batch(sec4, seeds=[0, 1, 2], workers=2)
    assert all(x.same_as(y) for x, y in zip(a.logs, b.logs))
    assert a.summary["ensemble_pos_err"] == b.summary["ensemble_pos_err"]
    assert a.summary["seeds"] == [0, 1, 2]


def test_empty_seed_list_is_a_usage_error(sec4):
    with pytest.raises(ValueError):
        run_batch(sec4, seeds=[])


def test_single_episode_wall_clock(sec4):
    t0 = time.perf_counter()
    run_episode(sec4, 0)
    assert time.perf_counter() - t0 < 1.0


def test_non_finite_quantity_aborts_with_step(sec4, monkeypatch):
    real = simulation.measure_squared_range
    calls = {"n": 0}

    def flaky(*args):
        calls["n"] += 1
        return float("nan") if calls["n"] > 6 else real(*args)

    monkeypatch.setattr(simulation, "measure_squared_range", flaky)
    with pytest.raises(SimulationError) as exc:
        run_episode(sec4, 0)
    assert exc.value.step == 4 and exc.value.quantity == "estimate"
    assert "step 4" in str(exc.value)


def test_protected_error_decays_at_contraction_rate(noise_free):
    lg = run_episode(noise_free.replace(horizon=40, burn_in=0), 0)
    e = compute_errors(lg, noise_free.controller.h1).ebar1_norm
    a_tilde = np.abs(lg.column("g") * (noise_free.controller.alpha - 1) + 1)
    live = e[:-1] > 1e-9
    assert live.sum() >= 5
    np.testing.assert_allclose(e[1:][live] / e[:-1][live], a_tilde[:-1][live], rtol=1e-6)
    # geometric fit over the saturated-gain tail, where a~ = alpha
    tail = live & (lg.column("g")[:-1] == 1.0)
    k = np.flatnonzero(tail)
    slope = np.polyfit(k, np.log(e[k]), 1)[0]
    assert np.exp(slope) == pytest.approx(abs(noise_free.controller.alpha), rel=1e-4)


def test_simlog_rejects_partial_records():
    with pytest.raises(KeyError):
        SimLog().append(k=0)
    assert len(set(COLUMNS)) == len(COLUMNS)


def test_csv_round_trip(tmp_path, sec4):
    lg = run_episode(sec4, 2)
    path = export(lg, "csv", tmp_path / "log.csv")
    back = import_csv(path)
    assert back.same_as(lg)
    assert back.seed == 2 and back.config_hash == sec4.config_hash
    assert path.read_text().splitlines()[0] == ",".join(COLUMNS)


def test_export_errors(tmp_path, sec4):
    lg = run_episode(sec4.replace(horizon=5, burn_in=0), 0)
    with pytest.raises(ValueError, match="format"):
        export(lg, "parquet", tmp_path / "x")
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        export(lg, "csv", blocker / "sub" / "log.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="header"):
        import_csv(bad)


def test_plot_script_runs_on_exported_log(tmp_path, sec4):
    pytest.importorskip("matplotlib")
    log_path = export(run_episode(sec4, 0), "csv", tmp_path / "log.csv", plot_script=True)
    script = tmp_path / "plot_figures.py"
    assert script.exists()
    out = tmp_path / "fig"
    proc = subprocess.run([sys.executable, str(script), str(log_path), str(out)],
                          capture_output=True, text=True, env={"MPLBACKEND": "Agg", "PATH": ""})
    assert proc.returncode == 0, proc.stderr
    for name in ("controls.png", "errors.png", "trajectories.png"):
        assert (out / name).stat().st_size > 0


def _summary(text):
    body = text.split(SUMMARY_BEGIN, 1)[1].split(SUMMARY_END, 1)[0]
    return json.loads(body)


def test_cli_run_and_analyze(tmp_path, capsys):
    assert main(["run", "-s", "1", "-o", str(tmp_path)]) == 0
    s = _summary(capsys.readouterr().out)
    assert s["seed"] == 1 and s["steps"] > 0
    log = tmp_path / "episode_seed1.csv"
    assert log.exists()
    assert main(["analyze", str(log), "--burn-in", "50"]) == 0
    s = _summary(capsys.readouterr().out)
    assert s["recursion_max_residual"] < 1e-10
    assert s["pe_windows"] > 0


def test_cli_batch_and_figures(tmp_path, capsys):
    assert main(["batch", "-s", "0", "1", "-o", str(tmp_path), "--save-logs"]) == 0
    s = _summary(capsys.readouterr().out)
    assert s["seeds"] == [0, 1]
    assert (tmp_path / "batch_summary.json").exists() and (tmp_path / "episode_seed0.csv").exists()
    assert main(["export-figures", "-o", str(tmp_path)]) == 0
    assert (tmp_path / "plot_figures.py").exists()


def test_cli_reports_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(MINIMAL + "controller: {alpha: -0.2}\n")
    assert main(["run", "-c", str(bad), "-o", str(tmp_path)]) == 2
    assert "alpha" in capsys.readouterr().err
    assert main(["batch", "-s", "-o", str(tmp_path)]) == 2
