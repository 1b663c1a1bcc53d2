"""Figures rendered from a result directory's plot-data CSVs and episode logs."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ecovedge.metrics import DISPLAY, read_episode_logs  # noqa: E402

LABELS = {"sinr_min": r"SINR threshold $\gamma_{min}$ [dB]", "coverage_radius": "Coverage radius [m]"}
YLABELS = {"success": "Success probability", "average_ee": "Average EE [bits/Hz/J]",
           "jain_pooled": "Jain fairness (pooled)"}
MARKERS = {"brute": "s", "dmarl": "o", "sarl": "^", "marl": "v", "equal": "x", "random": "+"}


def read_plot_csv(path) -> tuple[str, np.ndarray, dict[str, np.ndarray]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    xs = np.array([float(r[0]) for r in body])
    cols = {s: np.array([float(r[i + 1]) if r[i + 1] else np.nan for r in body]) for i, s in enumerate(head[1:])}
    return head[0], xs, cols


def plot_sweep(csv_path, png_path) -> Path:
    sweep, xs, cols = read_plot_csv(csv_path)
    metric = Path(csv_path).stem[len(sweep) + 1:]
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for s, ys in cols.items():
        ax.plot(xs, ys, marker=MARKERS.get(s, "."), label=DISPLAY.get(s, s))
    ax.set_xlabel(LABELS.get(sweep, sweep))
    ax.set_ylabel(YLABELS.get(metric, metric))
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return Path(png_path)


def per_vu_backhaul(episodes_csv) -> np.ndarray:
    _, logs = read_episode_logs(episodes_csv)
    return np.concatenate([log.backhaul for log in logs]).mean(axis=0)


def plot_fairness(rates: dict[str, np.ndarray], png_path) -> Path:
    """Grouped bars of mean per-VU backhaul consumption, one group per scheme."""
    schemes = list(rates)
    U = len(next(iter(rates.values())))
    width = 0.8 / U
    fig, ax = plt.subplots(figsize=(6, 4))
    x = np.arange(len(schemes))
    for i in range(U):
        ax.bar(x + (i - (U - 1) / 2) * width, [rates[s][i] for s in schemes], width, label=f"VU {i + 1}")
    ax.set_xticks(x, [DISPLAY.get(s, s) for s in schemes], rotation=20, fontsize=8)
    ax.set_ylabel("Mean backhaul consumption C [bits/s/Hz]")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return Path(png_path)


def _point_key(path: Path):
    tail = path.name.rsplit("_", 1)[-1]
    try:
        return (0, float(tail))
    except ValueError:
        return (1, 0.0)


def render_report(out) -> list[Path]:
    """Render every figure a result directory supports; returns the written paths."""
    out = Path(out)
    figs = out / "figures"
    figs.mkdir(exist_ok=True)
    written = []
    for csv_path in sorted((out / "plots").glob("*.csv")) if (out / "plots").exists() else []:
        written.append(plot_sweep(csv_path, figs / f"{csv_path.stem}.png"))
    points = sorted((p for p in (out / "cells").iterdir() if p.is_dir()), key=_point_key) \
        if (out / "cells").exists() else []
    if points:
        # fairness bars at the first sweep point (or the only one), first seed
        rates = {}
        for scheme_dir in sorted(points[0].iterdir()):
            eps = sorted(scheme_dir.glob("seed*/episodes.csv"))
            if eps:
                rates[scheme_dir.name] = per_vu_backhaul(eps[0])
        order = [s for s in MARKERS if s in rates]
        if rates:
            written.append(plot_fairness({s: rates[s] for s in order}, figs / f"fairness_{points[0].name}.png"))
    return written
