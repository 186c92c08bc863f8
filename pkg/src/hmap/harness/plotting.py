"""Line plots of summary CSVs (mean total energy vs swept value, one line per scheme)."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from hmap.harness.sweep import read_csv  # noqa: E402

LOG_AXES = ("zeta", "cpu_freq")
LABELS = {
    "beta0_db": r"$\beta_0$ (dB)",
    "delta": r"path-loss exponent $\delta$",
    "cpu_freq": "CPU frequency (FLOP/s)",
    "payload_sender": "sender payload (bits)",
    "initial_distance": "initial distance (m)",
    "T_max": r"$T_{max}$ (s)",
    "N": "number of agents",
    "zeta": r"$\zeta$",
}


def _float(s):
    try:
        return float(s)
    except ValueError:
        return math.nan


def plot_summary(summary_csv, out_path=None, title=None):
    """Write a PNG next to ``summary_csv`` (or at ``out_path``); returns the path."""
    rows = read_csv(summary_csv)
    if not rows:
        raise ValueError(f"{summary_csv} has no rows")
    param = rows[0]["param"]
    schemes = sorted({r["scheme"] for r in rows})
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for s in schemes:
        pts = sorted((_float(r["value"]), _float(r["mean_total_J"]), _float(r["stderr_total_J"]))
                     for r in rows if r["scheme"] == s)
        x = [p[0] for p in pts]
        y = [p[1] for p in pts]
        err = [0.0 if math.isnan(p[2]) else p[2] for p in pts]
        ax.errorbar(x, y, yerr=err, marker="o", ms=3, capsize=2, lw=1, label=s)
    if param in LOG_AXES:
        ax.set_xscale("log")
    ax.set_xlabel(LABELS.get(param, param))
    ax.set_ylabel("total energy (J)")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=7, frameon=False)
    fig.tight_layout()
    out = Path(out_path) if out_path else Path(summary_csv).with_suffix(".png")
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
