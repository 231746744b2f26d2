"""Figure rendering from result CSVs.

Plots are regenerated purely from the delimited files, never from live
simulation state, and are written as SVG with a fixed hash salt and no
date metadata so a rerun reproduces the bytes exactly.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "riscast"

import matplotlib.pyplot as plt

from .experiments import SweepRow, read_sweep_csv

SCHEME_STYLE = {
    "optimal-csi": dict(color="black", marker="o", label="optimal CSI"),
    "transformer": dict(color="tab:red", marker="s", label="transformer"),
    "lstm": dict(color="tab:blue", marker="^", label="LSTM"),
    "dnn": dict(color="tab:green", marker="v", label="DNN"),
    "fixed-phase": dict(color="tab:orange", marker="x", label="fixed phase"),
    "no-ris": dict(color="tab:gray", marker="d", label="no RIS"),
}

_SAVE_KW = dict(format="svg", metadata={"Date": None})


def _save(fig, path: Path) -> Path:
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def _series(rows: list[SweepRow], scheme: str, x_attr: str):
    picked = sorted((r for r in rows if r.scheme == scheme), key=lambda r: getattr(r, x_attr))
    xs = [getattr(r, x_attr) for r in picked]
    return xs, picked


def _plot_metric(rows, x_attr, x_label, metric, y_label, log_y, path):
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for scheme, style in SCHEME_STYLE.items():
        xs, picked = _series(rows, scheme, x_attr)
        if not xs:
            continue
        ys = [getattr(r, metric) for r in picked]
        if metric == "outage":
            err = [
                [max(0.0, r.outage - r.outage_lo) for r in picked],
                [max(0.0, r.outage_hi - r.outage) for r in picked],
            ]
            ax.errorbar(xs, ys, yerr=err, capsize=2, markersize=4, **style)
        else:
            ax.plot(xs, ys, markersize=4, **style)
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def sweep_kind(rows: list[SweepRow]) -> str:
    """Distinguish a power sweep from an element sweep by what varies."""
    powers = {r.power_dbm for r in rows}
    counts = {r.n_elements for r in rows}
    if len(powers) > 1 and len(counts) > 1:
        raise ValueError("rows vary in both power and element count; split them into separate sweeps")
    if len(powers) > 1:
        return "power"
    return "elements"


def render_sweep(csv_path: str | Path, out_dir: str | Path) -> list[Path]:
    """Outage and rate figures for one sweep CSV; returns written paths."""
    rows = read_sweep_csv(csv_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    kind = sweep_kind(rows)
    if kind == "power":
        x_attr, x_label = "power_dbm", "transmit power (dBm)"
    else:
        x_attr, x_label = "n_elements", "RIS elements"
    stem = Path(csv_path).stem
    return [
        _plot_metric(
            rows, x_attr, x_label, "outage", "outage probability", True, out_dir / f"{stem}_outage.svg"
        ),
        _plot_metric(
            rows, x_attr, x_label, "rate", "achievable rate (bits/s/Hz)", False, out_dir / f"{stem}_rate.svg"
        ),
    ]


def render_training(metrics_csv: str | Path, out_dir: str | Path) -> list[Path]:
    """Train and validation RMSE curves from a metrics CSV."""
    import csv as _csv

    epochs, train, val = [], [], []
    with open(metrics_csv, newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader)
        if header[:3] != ["epoch", "train_rmse", "val_rmse"]:
            raise ValueError(f"{metrics_csv} does not look like a training metrics CSV")
        for record in reader:
            epochs.append(int(record[0]))
            train.append(float(record[1]))
            val.append(float(record[2]))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    ax.plot(epochs, train, color="tab:blue", label="train")
    ax.plot(epochs, val, color="tab:red", label="validation")
    ax.set_xlabel("epoch")
    ax.set_ylabel("RMSE (normalized)")
    ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return [_save(fig, out_dir / f"{Path(metrics_csv).stem}_curves.svg")]
