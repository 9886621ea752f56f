"""Optional PNG rendering of run outputs (needs the ``plot`` extra)."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .io import read_series_csv


class PlottingUnavailable(RuntimeError):
    pass


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise PlottingUnavailable("matplotlib is not installed; pip install 'membrane-iim[plot]'") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_series(series_csv, png) -> Path:
    plt = _pyplot()
    s = read_series_csv(series_csv)
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    panels = [("perimeter", "perimeter"), ("area", "area"), ("E_s", "stretch energy"), ("kinetic", "kinetic energy")]
    for ax, (key, label) in zip(axes.flat, panels):
        ax.plot(s["t"], s[key])
        ax.set_ylabel(label)
    for ax in axes[1]:
        ax.set_xlabel("t")
    fig.tight_layout()
    fig.savefig(png, dpi=110)
    plt.close(fig)
    return Path(png)


def plot_interfaces(out_dir, png) -> Path:
    """Overlay every ``interface_<step>.csv`` in ``out_dir``."""
    plt = _pyplot()
    files = sorted(Path(out_dir).glob("interface_*.csv"))
    fig, ax = plt.subplots(figsize=(5, 5))
    for k, f in enumerate(files):
        pts = np.loadtxt(f, delimiter=",", skiprows=1, ndmin=2)
        if len(pts):
            ax.plot(pts[:, 0], pts[:, 1], color=plt.cm.viridis(k / max(len(files) - 1, 1)), lw=1,
                    label=f.stem.split("_")[-1].lstrip("0") or "0")
    ax.set_aspect("equal")
    if files:
        ax.legend(title="step", fontsize=7)
    fig.savefig(png, dpi=110)
    plt.close(fig)
    return Path(png)


def render_run(out_dir) -> list[Path]:
    out = Path(out_dir)
    made = [plot_series(out / "series.csv", out / "series.png")]
    if any(out.glob("interface_*.csv")):
        made.append(plot_interfaces(out, out / "interfaces.png"))
    return made
