"""Figure rendering: validated bundle in, vector image out.

Rendering is a pure function of the CSV bundle: the plotted data series
come from :mod:`srw_figures.extract` (bit-stable string parsing) and no
quantity is recomputed here. Image bytes may vary across matplotlib
versions; the extracted series must not.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .bundle import FigureError, load_bundle
from .extract import EXPERIMENT_FIGURES, extract_segments, extract_series

#: Shading for band pairs, outermost pair first.
_BAND_ALPHAS = (0.15, 0.28, 0.40)


@dataclass(frozen=True)
class FigureSpec:
    """One figure to render.

    ``bands`` selects which aggregate pairs are shaded, as (lower, upper)
    aggregate kinds; ``None`` uses the experiment's caption convention
    (10-90 and 25-75 quantile bands, or min-max where the original figure
    shades extremes). The input schema must match the CSV; any mismatch
    aborts with the offending column named.
    """

    experiment: str
    csv_path: Path
    schema_path: Path
    out_path: Path
    bands: tuple[tuple[str, str], ...] | None = None


def _render_bands(ax, series_list, figure) -> None:
    for series in series_list:
        (line,) = ax.plot(series.x, series.center, marker="o", markersize=3.5,
                          linewidth=1.6, label=series.label)
        color = line.get_color()
        for idx, pair in enumerate(series.bands):
            lo, hi = series.bands[pair]
            alpha = _BAND_ALPHAS[min(idx, len(_BAND_ALPHAS) - 1)]
            ax.fill_between(series.x, lo, hi, color=color, alpha=alpha, linewidth=0)
    ax.set_xscale(figure.xscale)
    ax.set_yscale(figure.yscale)
    if any(s.label for s in series_list):
        ax.legend(frameon=False)


def _render_segments(ax, segments) -> None:
    mass = segments["mass"]
    peak = float(mass.max())
    widths = 0.4 + 2.2 * (mass / peak if peak > 0 else mass)
    for x0, y0, x1, y1, w in zip(
        segments["x0"], segments["y0"], segments["x1"], segments["y1"], widths
    ):
        ax.plot([x0, x1], [y0, y1], color="0.45", linewidth=float(w),
                alpha=0.6, zorder=1)
    ax.scatter(segments["x0"], segments["y0"], s=14, color="firebrick",
               zorder=2, label="source atoms")
    ax.scatter(segments["x1"], segments["y1"], s=14, color="steelblue",
               zorder=2, label="target atoms")
    ax.set_aspect("equal")
    ax.legend(frameon=False)


def render(spec: FigureSpec) -> Path:
    """Render one experiment figure to a vector image file.

    Returns the written path. Raises :class:`SchemaMismatch` /
    :class:`FigureError` on invalid or empty inputs; never writes an
    empty plot.
    """
    if spec.experiment not in EXPERIMENT_FIGURES:
        known = ", ".join(sorted(EXPERIMENT_FIGURES))
        raise FigureError(f"unknown experiment {spec.experiment!r} (known: {known})")
    figure = EXPERIMENT_FIGURES[spec.experiment]
    bundle = load_bundle(spec.csv_path, spec.schema_path, experiment=spec.experiment)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    try:
        if figure.kind == "segments":
            _render_segments(ax, extract_segments(bundle))
        else:
            _render_bands(ax, extract_series(bundle, figure, spec.bands), figure)
        ax.set_xlabel(figure.xlabel)
        ax.set_ylabel(figure.ylabel)
        ax.set_title(spec.experiment)
        ax.grid(True, alpha=0.3)
        out_path = Path(spec.out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out_path, bbox_inches="tight")
    finally:
        plt.close(fig)
    return out_path
