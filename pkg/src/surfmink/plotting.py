"""Line charts written as SVG; log-log by default for convergence data."""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from .errors import IoError


def emit_svg_plot(series, path, title="", xlabel="h", ylabel="error", slopes=(1.0,),
                  scale="log"):
    """Draw ``series`` as lines, by default on log-log axes with slope guides.

    Parameters
    ----------
    series : list of (label, x, y)
        Lines to draw. On log axes non-positive values are dropped.
    slopes : sequence of float
        A dashed guide ``y ~ x**slope`` is anchored at the first point of the
        first non-empty series. Ignored for linear axes.
    scale : {"log", "linear"}
        Axis scaling.
    """
    loglog = scale == "log"
    path = Path(path)
    fig = Figure(figsize=(5.0, 4.0))
    ax = fig.add_subplot()
    if loglog:
        ax.set_xscale("log")
        ax.set_yscale("log")
    anchor = None
    for label, x, y in series:
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if loglog:
            keep &= (x > 0) & (y > 0)
        if not keep.any():
            continue
        ax.plot(x[keep], y[keep], marker="o", label=label)
        if anchor is None:
            anchor = (x[keep], y[keep][0])
    if anchor is not None and loglog:
        x, y0 = anchor
        xs = np.array([x.min(), x.max()])
        for k in slopes:
            ax.plot(xs, y0 * (xs / x[0]) ** k, "k--", linewidth=0.8, label=f"slope {k:g}")
    if anchor is not None:
        ax.legend(fontsize="small")
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with matplotlib.rc_context({"svg.hashsalt": "surfmink", "svg.fonttype": "none"}):
            fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path
