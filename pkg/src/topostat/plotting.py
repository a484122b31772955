"""SVG figures for barcodes, landscapes, scree curves and null distributions.

Figures are drawn on standalone ``Figure`` objects (no pyplot state) and saved
with a fixed hash salt and no date metadata, so equal inputs give equal bytes.
"""

import io
import math

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib.figure import Figure

from .data import atomic_write_text

STYLE = {
    "font.size": 9,
    "axes.linewidth": 0.6,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "lines.linewidth": 1.2,
    "svg.hashsalt": "topostat",
    "svg.fonttype": "none",
    "path.simplify": False,
}

DEGREE_COLORS = ["#1b6ca8", "#d1495b", "#2e8b57", "#8d6a9f"]
GROUP_COLORS = ["#1b6ca8", "#d1495b", "#2e8b57", "#edae49"]


def new_figure(width=5.0, height=None):
    matplotlib.rcParams.update(STYLE)
    golden = (math.sqrt(5) - 1.0) / 2.0
    fig = Figure(figsize=(width, height or width * golden))
    return fig, fig.add_subplot(1, 1, 1)


def figure_to_svg(fig) -> str:
    buf = io.StringIO()
    with matplotlib.rc_context(STYLE):
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    return buf.getvalue()


def save_svg(fig, path) -> None:
    atomic_write_text(path, figure_to_svg(fig))


def _no_data(ax, text):
    ax.text(0.5, 0.5, text, transform=ax.transAxes, ha="center", va="center", color="0.4")


def plot_barcode(rows, title="", infinite_cap=None):
    """Horizontal bars from ``(degree, birth, death)`` rows, grouped by degree.

    Essential classes run to ``infinite_cap`` (or past the largest finite
    value) and end in an arrow.
    """
    rows = np.asarray(rows, dtype=np.float64).reshape(-1, 3)
    fig, ax = new_figure(5.0, 3.2)
    ax.set_xlabel("filtration value")
    ax.set_ylabel("interval")
    ax.set_yticks([])
    if title:
        ax.set_title(title)
    if len(rows) == 0:
        _no_data(ax, "no intervals")
        ax.set_xlim(0, 1)
        return fig
    finite = rows[np.isfinite(rows[:, 2]), 1:]
    top = float(finite.max()) if finite.size else float(rows[:, 1].max())
    right = infinite_cap if infinite_cap is not None else (top * 1.1 if top > 0 else 1.0)
    order = np.lexsort((rows[:, 2], rows[:, 1], rows[:, 0]))
    y = 0
    seen = set()
    for deg, birth, death in rows[order].tolist():
        color = DEGREE_COLORS[int(deg) % len(DEGREE_COLORS)]
        label = None if deg in seen else f"$H_{int(deg)}$"
        seen.add(deg)
        end = death if math.isfinite(death) else right
        ax.plot([birth, end], [y, y], color=color, label=label, solid_capstyle="butt")
        if not math.isfinite(death):
            ax.plot([end], [y], marker=">", color=color, markersize=3)
        y += 1
    ax.set_xlim(min(0.0, float(rows[:, 1].min())), right * 1.02)
    ax.set_ylim(-1, y)
    ax.legend(loc="lower right")
    return fig


def plot_landscape(levels, title="", labels=None, max_levels=None):
    """Line plot of landscape levels.

    ``levels`` is a list of landscapes, each a list of ``(t, y)`` arrays; one
    color per landscape.
    """
    fig, ax = new_figure(5.0)
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\lambda_k(t)$")
    if title:
        ax.set_title(title)
    drawn = False
    for i, landscape in enumerate(levels):
        color = GROUP_COLORS[i % len(GROUP_COLORS)]
        shown = landscape if max_levels is None else landscape[:max_levels]
        for k, (t, y) in enumerate(shown):
            if len(t) == 0:
                continue
            label = labels[i] if (labels and k == 0) else None
            ax.plot(t, y, color=color, alpha=max(0.25, 1.0 - 0.12 * k), label=label)
            drawn = True
    if not drawn:
        _no_data(ax, "zero landscape")
    elif labels:
        ax.legend(loc="upper right")
    ax.set_ylim(bottom=0)
    return fig


def plot_scree(residual_variance, title=""):
    rv = np.asarray(residual_variance, dtype=np.float64)
    fig, ax = new_figure(4.0)
    ax.set_xlabel("embedding dimension")
    ax.set_ylabel("residual variance")
    if title:
        ax.set_title(title)
    if rv.size == 0:
        _no_data(ax, "no dimensions")
        return fig
    dims = np.arange(1, rv.size + 1)
    ax.plot(dims, rv, color="k", marker="o", markersize=3)
    ax.set_xticks(dims)
    ax.set_ylim(bottom=0)
    return fig


def plot_null_hist(null, t_obs, p_value=None, bins=20, title=""):
    null = np.asarray(null, dtype=np.float64)
    fig, ax = new_figure(4.5)
    ax.set_xlabel("test statistic")
    ax.set_ylabel("count")
    if title:
        ax.set_title(title)
    finite = null[np.isfinite(null)]
    if finite.size == 0:
        _no_data(ax, "no finite null values")
        return fig
    lo, hi = float(finite.min()), float(finite.max())
    if hi <= lo:
        hi = lo + 1.0
    counts, edges = np.histogram(finite, bins=bins, range=(lo, hi))
    ax.bar(edges[:-1], counts, width=np.diff(edges), align="edge", color="0.7", edgecolor="0.3",
           linewidth=0.4)
    if math.isfinite(t_obs):
        label = r"$t_{obs}$" if p_value is None else rf"$t_{{obs}}$, p = {p_value:.4g}"
        ax.axvline(t_obs, color="#d1495b", label=label)
        ax.legend(loc="upper right")
    return fig
