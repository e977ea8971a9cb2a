"""Tabular log export/import and plot-script generation.

The CSV has one header row (:data:`~rangeguard.harness.simlog.COLUMNS`, in
that order) and one row per step. Floats are written with ``repr`` so the
round trip is exact. Seed and config hash go to a ``<name>.meta.json``
sidecar.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .simlog import COLUMNS, INT_COLUMNS, STR_COLUMNS, SimLog


def _meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def export_csv(log: SimLog, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(COLUMNS)
            for rec in log.records:
                w.writerow([rec[c] if c in STR_COLUMNS or c in INT_COLUMNS else repr(rec[c]) for c in COLUMNS])
        _meta_path(path).write_text(
            json.dumps({"seed": log.seed, "config_hash": log.config_hash, "columns": len(COLUMNS)}, indent=2)
        )
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write log to {path}: {exc.strerror}") from None
    return path


def import_csv(path) -> SimLog:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read log {path}: {exc.strerror}") from None
    if not rows or tuple(rows[0]) != COLUMNS:
        raise ValueError(f"{path}: header does not match the log schema")
    meta = {}
    if _meta_path(path).exists():
        meta = json.loads(_meta_path(path).read_text())
    out = SimLog(seed=meta.get("seed"), config_hash=meta.get("config_hash", ""))
    for row in rows[1:]:
        rec = {}
        for c, v in zip(COLUMNS, row):
            rec[c] = v if c in STR_COLUMNS else int(v) if c in INT_COLUMNS else float(v)
        out.records.append(rec)
    return out


PLOT_SCRIPT = '''\
"""Figures from an exported episode log.

usage: python {name} LOG.csv [OUTDIR]
Writes controls.png (control magnitudes and g), errors.png (estimation and
encirclement errors) and trajectories.png (3D paths).
"""
import csv
import sys
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

H1 = {h1!r}


def load(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols = {{}}
    for key in rows[0]:
        if key == "zone":
            cols[key] = np.array([r[key] for r in rows])
        else:
            cols[key] = np.array([float(r[key]) for r in rows])
    return cols


def vec(c, name, parts):
    return np.column_stack([c[name + "_" + p] for p in parts])


def main(argv):
    c = load(argv[1])
    out = Path(argv[2] if len(argv) > 2 else ".")
    out.mkdir(parents=True, exist_ok=True)
    k = c["k"]
    xyz, pv = ("x", "y", "z"), ("px", "py", "pz")

    fig, ax = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
    ax[0].plot(k, np.linalg.norm(vec(c, "u1", xyz), axis=1), label="|u1|")
    ax[0].plot(k, np.linalg.norm(vec(c, "u2", xyz), axis=1), label="|u2|")
    ax[0].set_ylabel("m/s^2")
    ax[0].legend()
    ax[1].plot(k, c["g"], label="g")
    ax[1].set_ylabel("g")
    ax[1].set_xlabel("k")
    fig.tight_layout()
    fig.savefig(out / "controls.png", dpi=120)

    p1, p2 = vec(c, "guardian1", pv), vec(c, "guardian2", pv)
    pt1, pt2 = vec(c, "protected", pv), vec(c, "hostile", pv)
    ref1 = pt1.copy()
    if H1 is not None:
        ref1[:, 2] = H1
    fig, ax = plt.subplots(3, 1, sharex=True, figsize=(7, 7))
    ax[0].plot(k, c["est_vel_err"])
    ax[0].set_ylabel("velocity error (m/s)")
    ax[1].plot(k, c["est_pos_err"])
    ax[1].set_ylabel("position error (m)")
    protect = c["zone"] == "Protect"
    e1 = np.linalg.norm(p1 + p2 - 2 * ref1, axis=1)
    e2 = np.linalg.norm(p1 + p2 - 2 * pt2, axis=1)
    ax[2].plot(k, np.where(protect, e1, np.nan), label="protected")
    ax[2].plot(k, np.where(protect, np.nan, e2), label="hostile")
    ax[2].set_ylabel("AS error (m)")
    ax[2].set_xlabel("k")
    ax[2].legend()
    fig.tight_layout()
    fig.savefig(out / "errors.png", dpi=120)

    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(projection="3d")
    for p, label in ((p1, "guardian 1"), (p2, "guardian 2"), (pt1, "protected"), (pt2, "hostile")):
        ax.plot(p[:, 0], p[:, 1], p[:, 2], label=label)
    est = vec(c, "estimate", pv)
    ax.plot(est[:, 0], est[:, 1], est[:, 2], "k:", label="estimate")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "trajectories.png", dpi=120)


if __name__ == "__main__":
    main(sys.argv)
'''


def write_plot_script(path, h1: float | None = 0.7) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(PLOT_SCRIPT.format(name=path.name, h1=h1))
    return path


def export(log: SimLog, fmt: str, path, plot_script: bool = False, h1: float | None = 0.7) -> Path:
    if fmt != "csv":
        raise ValueError(f"unsupported export format {fmt!r}; only 'csv'")
    out = export_csv(log, path)
    if plot_script:
        write_plot_script(out.with_name("plot_figures.py"), h1)
    return out
