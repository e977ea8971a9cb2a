"""Command-line entry point: ``rangeguard {run,batch,analyze,export-figures}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..analysis import episode_summary, recursion_residuals, gramian_summary
from ..errors import ConfigError, SimulationError
from .config import load_config
from .export import export, import_csv, write_plot_script
from .simulation import run_batch, run_episode

SUMMARY_BEGIN = "--- BEGIN SUMMARY ---"
SUMMARY_END = "--- END SUMMARY ---"


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rangeguard", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("-c", "--config", default="paper_sec4", help="scenario file or bundled name")
        sp.add_argument("-o", "--out", default="out", help="output directory")
        sp.add_argument("--burn-in", type=int, default=None, help="override the config burn-in")

    run = sub.add_parser("run", help="run a single episode and export its log")
    common(run)
    run.add_argument("-s", "--seed", type=int, default=0)
    run.add_argument("--plot-script", action="store_true", help="also emit plot_figures.py")

    batch = sub.add_parser("batch", help="run one episode per seed and summarise")
    common(batch)
    batch.add_argument("-s", "--seeds", type=int, nargs="*", default=None, help="default: seeds from config")
    batch.add_argument("-j", "--workers", type=int, default=1)
    batch.add_argument("--save-logs", action="store_true")

    ana = sub.add_parser("analyze", help="Gramian and error report for an exported log")
    common(ana)
    ana.add_argument("log", help="CSV log written by 'run'")

    fig = sub.add_parser("export-figures", help="emit the figure script for exported logs")
    common(fig)
    return p


def _print_summary(summary: dict) -> None:
    print(SUMMARY_BEGIN)
    print(json.dumps(summary, indent=2, default=str))
    print(SUMMARY_END)


def _cmd_run(args, cfg) -> int:
    log = run_episode(cfg, args.seed)
    out = export(log, "csv", Path(args.out) / f"episode_seed{args.seed}.csv", args.plot_script, cfg.controller.h1)
    s = episode_summary(log, cfg, args.burn_in)
    print(f"seed {args.seed}: {len(log)} steps, captured={log.captured}, log -> {out}")
    _print_summary(s)
    return 0


def _cmd_batch(args, cfg) -> int:
    res = run_batch(cfg, args.seeds, workers=args.workers, burn_in=args.burn_in)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.save_logs:
        for lg in res.logs:
            export(lg, "csv", outdir / f"episode_seed{lg.seed}.csv")
    (outdir / "batch_summary.json").write_text(json.dumps(res.summary, indent=2, default=str))
    print(f"{'seed':>5} {'steps':>5} {'capt':>5} {'pos<0.5':>8} {'vel<0.1':>8} {'pos rms':>8} {'vel rms':>8}")
    for s in res.summary["per_seed"]:
        def f(x):
            return "   -" if x is None else f"{x:8.3f}"
        print(f"{s['seed']:>5} {s['steps']:>5} {str(s['captured']):>5} {f(s['pos_err_frac_below_0.5'])} "
              f"{f(s['vel_err_frac_below_0.1'])} {f(s['pos_err_rms'])} {f(s['vel_err_rms'])}")
    summary = {k: v for k, v in res.summary.items() if k != "per_seed"}
    _print_summary(summary)
    return 0


def _cmd_analyze(args, cfg) -> int:
    log = import_csv(args.log)
    if log.config_hash and log.config_hash != cfg.config_hash:
        print(f"warning: log was produced by config {log.config_hash}, analysing with {cfg.config_hash}",
              file=sys.stderr)
    s = episode_summary(log, cfg, args.burn_in)
    gram = gramian_summary(log, cfg)
    res = recursion_residuals(log, cfg.controller.alpha)
    s.update(gram)
    s["recursion_max_residual"] = float(res.max()) if len(res) else None
    print(f"log {args.log}: {len(log)} steps, seed {log.seed}")
    print(f"  estimation: pos rms {s['pos_err_rms']}, vel rms {s['vel_err_rms']} (k > burn-in)")
    print(f"  excitation: {gram['pe_windows']} windows, min eig {gram['pe_min_eig']}")
    print(f"  observability: {gram['obs_windows']} windows, min eig {gram['obs_min_eig']}")
    print(f"  covariance eig range [{s['cov_min_eig']}, {s['cov_max_eig']}], mean NIS {s['nis_mean']}")
    _print_summary(s)
    return 0


def _cmd_figures(args, cfg) -> int:
    path = write_plot_script(Path(args.out) / "plot_figures.py", cfg.controller.h1)
    print(f"wrote {path}; run: python {path} LOG.csv OUTDIR")
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        cfg = load_config(args.config)
        return {
            "run": _cmd_run,
            "batch": _cmd_batch,
            "analyze": _cmd_analyze,
            "export-figures": _cmd_figures,
        }[args.command](args, cfg)
    except (ConfigError, SimulationError, OSError, ValueError) as exc:
        print(f"rangeguard: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
