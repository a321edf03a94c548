"""Matplotlib figures for classification reports.

Figures are built on :class:`matplotlib.figure.Figure` directly (no pyplot
state), so they can be rendered from worker threads and written to PNG
next to the CSV/JSON report files.
"""

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
from matplotlib.patches import Patch

from .distances import StatisticKind


def _save(fig, path, dpi=120):
    FigureCanvasAgg(fig)
    # fixed metadata keeps re-rendered PNGs byte-identical
    fig.savefig(path, dpi=dpi, metadata={"Software": None})


def class_map_figure(rgb, palette, names, title=""):
    fig = Figure(figsize=(6.5, 5))
    ax = fig.add_subplot(111)
    ax.imshow(rgb, interpolation="nearest")
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    handles = [Patch(color=np.array(palette[n]) / 255, label=n) for n in names]
    ax.legend(handles=handles, loc="center left", bbox_to_anchor=(1.01, 0.5),
              fontsize=8, frameon=False)
    fig.tight_layout()
    return fig


def pvalue_map_figure(binary, alpha, title=""):
    fig = Figure(figsize=(5, 5))
    ax = fig.add_subplot(111)
    ax.imshow(binary, cmap="gray", vmin=0, vmax=255, interpolation="nearest")
    ax.set_axis_off()
    accepted = float(np.mean(binary == 255)) * 100
    ax.set_title(f"{title}  p >= {alpha:g}: {accepted:.1f}% of pixels" if title
                 else f"p >= {alpha:g}: {accepted:.1f}% of pixels", fontsize=9)
    fig.tight_layout()
    return fig


def non_rejection_figure(summary, reference=None):
    """Grouped bars of non-rejection (%) per statistic, one group per tile size.

    ``reference`` optionally maps kind to per-tile reference percentages,
    drawn as black ticks over the bars.
    """
    tiles = sorted({row["tile"] for row in summary})
    kinds = [k.value for k in StatisticKind if any(r["kind"] == k.value for r in summary)]
    lookup = {(r["kind"], r["tile"]): r for r in summary}
    width = 0.8 / max(len(kinds), 1)
    fig = Figure(figsize=(8, 4))
    ax = fig.add_subplot(111)
    x = np.arange(len(tiles))
    for j, kind in enumerate(kinds):
        vals = [100 * lookup[(kind, t)]["non_rejection"] if (kind, t) in lookup else np.nan
                for t in tiles]
        pos = x - 0.4 + width * (j + 0.5)
        ax.bar(pos, vals, width, label=StatisticKind(kind).label)
        if reference and StatisticKind(kind) in reference:
            ref = reference[StatisticKind(kind)]
            ax.scatter(pos, ref[:len(tiles)], marker="_", s=120, color="k", zorder=3)
    ax.axhline(95, color="0.4", lw=0.8, ls="--")
    ax.set_xticks(x, [f"{t}x{t}" for t in tiles])
    ax.set_ylabel("segments not rejected (%)")
    ax.set_ylim(50, 100)
    ax.legend(fontsize=7, ncol=3, loc="lower right")
    fig.tight_layout()
    return fig


def save_class_map(path, rgb, palette, names, title=""):
    _save(class_map_figure(rgb, palette, names, title), path)


def save_pvalue_map(path, binary, alpha, title=""):
    _save(pvalue_map_figure(binary, alpha, title), path)


def save_non_rejection(path, summary, reference=None):
    _save(non_rejection_figure(summary, reference), path)
