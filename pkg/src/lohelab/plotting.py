"""Static SVG time-series plots of trajectory CSVs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from . import diagnostics

__all__ = ["plot_timeseries"]


def plot_timeseries(csv_path, out_path, logscale: bool = False) -> Path:
    """Plot order parameter, variance and diameter against time."""
    records = diagnostics.read_records_csv(csv_path)
    if not records:
        raise ValueError(f"{csv_path}: no records to plot")
    ts = [r.t for r in records]
    fig, ax = plt.subplots(figsize=(7, 4.2))
    ax.plot(ts, [r.order_parameter for r in records], label="R (order parameter)")
    ax.plot(ts, [r.variance for r in records], label="V (variance)")
    ax.plot(ts, [r.diameter for r in records], label="Dmax (diameter)")
    if logscale:
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out_path
