"""Figure rendering for srw experiment CSV bundles.

Read-only consumer of the CLI's output: validates each CSV against its
schema sidecar, extracts the plotted series bit-stably, and renders one
vector figure per experiment with the caption's band conventions
(10-90 / 25-75 quantiles, or min-max extremes).
"""

from .bundle import Bundle, FigureError, SchemaMismatch, load_bundle
from .extract import (
    EXPERIMENT_FIGURES,
    ExperimentFigure,
    Series,
    extract_segments,
    extract_series,
)
from .render import FigureSpec, render

__all__ = [
    "Bundle",
    "EXPERIMENT_FIGURES",
    "ExperimentFigure",
    "FigureError",
    "FigureSpec",
    "SchemaMismatch",
    "Series",
    "extract_segments",
    "extract_series",
    "load_bundle",
    "render",
]

__version__ = "0.1.0"
