"""Figures for experiment output directories.

Reads the CSVs written by the runner and saves PNGs next to them: metric
curves against labeled-pool size for a run directory, and metric-vs-value
curves for a sweep directory.
"""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

PERFORMANCE = ("accuracy", "f1", "gmeans")
FAIRNESS = ("sp_diff", "eopp_diff", "eodds_diff")
LABELS = {
    "accuracy": "Accuracy", "f1": "F1", "gmeans": "GMeans",
    "sp_diff": "SP", "eopp_diff": "E_opp", "eodds_diff": "E_odd",
}


def _read(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _num(v):
    return float(v) if v not in ("", None) else float("nan")


def _panel(ax, x, rows, names, prefix=""):
    for name in names:
        mean = [_num(r[f"{prefix}{name}_mean"]) for r in rows]
        std = [_num(r[f"{prefix}{name}_std"]) for r in rows]
        line, = ax.plot(x, mean, marker="o", ms=3, label=LABELS[name])
        lo = [m - s for m, s in zip(mean, std)]
        hi = [m + s for m, s in zip(mean, std)]
        ax.fill_between(x, lo, hi, color=line.get_color(), alpha=0.15, lw=0)
    ax.legend(frameon=False, fontsize=8)
    ax.grid(alpha=0.3)


def plot_summary(run_dir) -> list[Path]:
    """metrics.png: performance and fairness means (+/- std) against labeled count."""
    run_dir = Path(run_dir)
    rows = _read(run_dir / "summary.csv")
    x = [_num(r["n_labeled_mean"]) for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    _panel(ax1, x, rows, PERFORMANCE)
    ax1.set_xlabel("labeled samples")
    ax1.set_title("performance")
    _panel(ax2, x, rows, FAIRNESS)
    ax2.set_xlabel("labeled samples")
    ax2.set_title("unfairness")
    fig.tight_layout()
    out = run_dir / "metrics.png"
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return [out]


def plot_sweep(sweep_dir) -> list[Path]:
    """sweep.png: final-iteration metrics against the swept parameter."""
    sweep_dir = Path(sweep_dir)
    rows = _read(sweep_dir / "sweep.csv")
    param = rows[0]["param"]
    x = [_num(r["value"]) for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    _panel(ax1, x, rows, PERFORMANCE)
    _panel(ax2, x, rows, FAIRNESS)
    for ax in (ax1, ax2):
        ax.set_xlabel(param)
    fig.tight_layout()
    out = sweep_dir / "sweep.png"
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return [out]


def render(out_dir) -> list[Path]:
    """Render whatever figures the directory's CSVs support."""
    out_dir = Path(out_dir)
    made = []
    if (out_dir / "summary.csv").is_file():
        made += plot_summary(out_dir)
    if (out_dir / "sweep.csv").is_file():
        made += plot_sweep(out_dir)
        for sub in sorted(p for p in out_dir.iterdir() if (p / "summary.csv").is_file()):
            made += plot_summary(sub)
    if not made:
        raise FileNotFoundError(f"no summary.csv or sweep.csv in {out_dir}")
    return made
