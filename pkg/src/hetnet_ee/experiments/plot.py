"""SVG line plots of sweep tables (needs matplotlib)."""

from __future__ import annotations

from pathlib import Path

from .sweep import OVERALL, SweepTable


def plot_tables(tables: dict, metric: str, path, title: str = "", log_x: bool = False) -> Path:
    """Overall curves of several named tables on one set of axes."""
    import matplotlib
    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    # fixed hash salt keeps the SVG byte-stable between runs
    matplotlib.rcParams["svg.hashsalt"] = "hetnet-ee"
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for name, table in tables.items():
        for engine, style in (("analytic", "-"), ("mc", "o")):
            x, y, ci = table.series(metric, engine, OVERALL)
            if not x:
                continue
            label = f"{name} ({engine})"
            if engine == "mc":
                ax.errorbar(x, y, yerr=ci, fmt=style, ms=3, capsize=2, label=label)
            else:
                ax.plot(x, y, style, label=label)
    first = next(iter(tables.values()), SweepTable())
    ax.set_xlabel(first.metadata.get("axis_parameter", "axis"))
    ax.set_ylabel(f"{metric} coverage")
    if log_x:
        ax.set_xscale("log")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
