"""SVG rendering of cumulative calibration paths.

One figure shows the standardized path(s) S over variance-fraction time,
with four kinds of reference geometry:

* blue horizontal guides at +-z_(1-alpha/2): pointwise bounds for the
  terminal location, the mean-calibration part of the bridge test;
* a gray segment joining the path's endpoints (0,0) and (1, S_n);
* red guides parallel to that segment, offset vertically by +-q where the
  Kolmogorov survival at q equals alpha: the bridged path rejects when it
  escapes this band;
* a top axis mapping time ticks back to the ordering value (predicted
  benefit or risk) at that time, and a right axis rescaling S to the raw
  cumulative error C via the path's probability-per-sd factor.

Rendering is byte-deterministic: fixed hash salt, no embedded fonts or
creation date, and no path simplification (every vertex is emitted).
"""

from __future__ import annotations

from dataclasses import dataclass
from io import BytesIO
from pathlib import Path
from typing import Union

import matplotlib as mpl
import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from .domain import ITE_CONDITIONAL, ITE_MARGINAL, RISK, ProcessPath, ValidationError
from .inference import kolmogorov_quantile, std_normal_quantile

PATH_COLORS = {
    RISK: "#444444",
    ITE_CONDITIONAL: "black",
    ITE_MARGINAL: "#1f77b4",
}
MEAN_GUIDE_COLOR = "#1f77b4"
ENDPOINT_COLOR = "#888888"
BRIDGE_GUIDE_COLOR = "#d62728"
MAX_DELTA_TICKS = 6

_DETERMINISTIC_RC = {
    "svg.hashsalt": "itecalib",
    "svg.fonttype": "none",
    "path.simplify": False,
}


class EmptyPath(ValidationError):
    pass


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: one or more paths plus guide/axis toggles."""

    paths: tuple[ProcessPath, ...]
    alpha: float = 0.05
    title: str = ""
    mean_guides: bool = True
    bridge_guides: bool = True
    delta_axis: bool = True
    raw_axis: bool = True
    figsize: tuple[float, float] = (8.0, 5.0)

    def __post_init__(self):
        if not self.paths:
            raise EmptyPath("nothing to plot: no paths supplied")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be inside (0, 1)")


def _delta_tick_positions(path: ProcessPath) -> tuple[np.ndarray, list[str]]:
    # ticks sit at realized vertices, so each tick time maps to the exact
    # ordering value reached there
    n = path.n
    count = min(n, MAX_DELTA_TICKS)
    idx = np.unique(np.linspace(1, n, count).round().astype(int))
    times = path.times[idx]
    labels = [f"{path.deltas[i]:.3g}" for i in idx]
    return times, labels


def render_plot(spec: PlotSpec) -> str:
    """Render the figure and return the SVG document as text.

    Guides and secondary axes are anchored to the first path; additional
    paths are overlaid with their own style class (SVG group id
    "process-<kind>") for comparison.
    """
    primary = spec.paths[0]
    with mpl.rc_context(_DETERMINISTIC_RC):
        fig = Figure(figsize=spec.figsize)
        FigureCanvasSVG(fig)
        ax = fig.add_subplot(111)

        for path in spec.paths:
            color = PATH_COLORS.get(path.kind, "black")
            ax.plot(
                path.times,
                path.locations,
                color=color,
                linewidth=1.2,
                gid=f"process-{path.kind}",
            )

        if spec.mean_guides:
            z = std_normal_quantile(1.0 - spec.alpha / 2.0)
            for sign in (1.0, -1.0):
                ax.axhline(
                    sign * z,
                    color=MEAN_GUIDE_COLOR,
                    linewidth=0.8,
                    linestyle="--",
                    gid=f"guide-mean-{'upper' if sign > 0 else 'lower'}",
                )

        s_n = primary.terminal_location
        ax.plot(
            [0.0, 1.0],
            [0.0, s_n],
            color=ENDPOINT_COLOR,
            linewidth=0.8,
            gid="guide-endpoint",
        )
        if spec.bridge_guides:
            q = kolmogorov_quantile(spec.alpha)
            for sign, tag in ((1.0, "upper"), (-1.0, "lower")):
                ax.plot(
                    [0.0, 1.0],
                    [sign * q, s_n + sign * q],
                    color=BRIDGE_GUIDE_COLOR,
                    linewidth=0.8,
                    linestyle=":",
                    gid=f"guide-bridge-{tag}",
                )

        ax.set_xlabel("time (cumulative variance fraction)")
        ax.set_ylabel("standardized cumulative error S")
        if spec.title:
            ax.set_title(spec.title)

        if spec.delta_axis:
            top = ax.secondary_xaxis("top")
            ticks, labels = _delta_tick_positions(primary)
            top.set_xticks(ticks, labels)
            top.set_xlabel(
                "predicted risk" if primary.kind == RISK else "predicted benefit"
            )
        if spec.raw_axis:
            scale = primary.sd_scale
            right = ax.secondary_yaxis(
                "right", functions=(lambda s: s * scale, lambda c: c / scale)
            )
            right.set_ylabel("cumulative error C")

        buf = BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue().decode("utf-8")


def write_plot(spec: PlotSpec, target: Union[str, Path]) -> None:
    Path(target).write_text(render_plot(spec), encoding="utf-8")
