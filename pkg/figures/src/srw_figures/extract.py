"""Bit-stable extraction of plotted data series from validated bundles.

Every number that ends up on an axis comes out of :func:`extract_series`,
which parses the CSV's decimal strings with ``float`` in file order and
never recomputes or re-derives a quantity. Running it twice on the same
bundle therefore yields bit-identical arrays, which is what the figure
tests pin down.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bundle import Bundle, FigureError, SchemaMismatch

#: Band pairs follow the figure captions: (lower aggregate, upper aggregate).
QUANTILE_BANDS = (("q10", "q90"), ("q25", "q75"))
MINMAX_BAND = (("min", "max"),)


@dataclass(frozen=True)
class ExperimentFigure:
    """How one experiment's bundle maps onto a figure."""

    kind: str  # "bands" (aggregate curves) or "segments" (transport plan)
    x: str = ""
    ys: tuple[str, ...] = ()
    group: str | None = None
    xlabel: str = ""
    ylabel: str = ""
    xscale: str = "linear"
    yscale: str = "linear"
    bands: tuple[tuple[str, str], ...] = QUANTILE_BANDS


EXPERIMENT_FIGURES: dict[str, ExperimentFigure] = {
    "hypercube-curve": ExperimentFigure(
        kind="bands", x="k", ys=("value_squared",), group="kstar",
        xlabel="subspace dimension k", ylabel="squared distance",
        bands=MINMAX_BAND,
    ),
    "disk-annulus-curve": ExperimentFigure(
        kind="bands", x="k", ys=("value_squared",), group="kstar",
        xlabel="subspace dimension k", ylabel="squared distance",
        bands=MINMAX_BAND,
    ),
    "hypercube-error": ExperimentFigure(
        kind="bands", x="n", ys=("error",),
        xlabel="number of points n", ylabel="estimation error",
        xscale="log", yscale="log",
    ),
    "hypercube-subspace": ExperimentFigure(
        kind="bands", x="n", ys=("frobenius_error",),
        xlabel="number of points n", ylabel="projection estimation error",
        xscale="log", yscale="log",
    ),
    "disk-annulus-error": ExperimentFigure(
        kind="bands", x="n", ys=("abs_error",),
        xlabel="number of points n", ylabel="estimation error",
        xscale="log", yscale="log",
    ),
    "gaussians-curve": ExperimentFigure(
        kind="bands", x="l", ys=("ratio",), group="sigma",
        xlabel="subspace dimension l", ylabel="squared distance ratio",
        bands=QUANTILE_BANDS + MINMAX_BAND,
    ),
    "noise-robustness": ExperimentFigure(
        kind="bands", x="sigma", ys=("srw_rel_error", "w2_rel_error"),
        xlabel="noise level σ", ylabel="relative error",
        xscale="log", yscale="log",
        bands=MINMAX_BAND + (("q10", "q90"),),
    ),
    "timing": ExperimentFigure(
        kind="bands", x="d", ys=("seconds",),
        xlabel="dimension d", ylabel="runtime (seconds)",
        xscale="log", yscale="log",
        bands=MINMAX_BAND,
    ),
    "plan-segments": ExperimentFigure(
        kind="segments",
        xlabel="first coordinate", ylabel="second coordinate",
        bands=(),
    ),
}

_SEGMENT_COLUMNS = ("mass", "x0", "y0", "x1", "y1")


@dataclass(frozen=True)
class Series:
    """One plotted curve: x grid, central line, and shaded band edges."""

    label: str
    x: np.ndarray
    center: np.ndarray
    bands: dict[tuple[str, str], tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)


def _parse(cell: str, column: str, kind: str) -> float:
    if cell == "":
        raise FigureError(
            f"aggregate rows of kind {kind!r} have no value for column {column!r}"
        )
    try:
        return float(cell)
    except ValueError:
        raise FigureError(
            f"column {column!r} holds non-numeric value {cell!r} in a {kind!r} row"
        ) from None


def _group_label(column: str, raw: str) -> str:
    value = float(raw)
    shown = str(int(value)) if value == int(value) else format(value, "g")
    return f"{column}={shown}"


def _band_kinds(bands: tuple[tuple[str, str], ...]) -> tuple[str, ...]:
    out: list[str] = []
    for lo, hi in bands:
        out.extend((lo, hi))
    return tuple(out)


def extract_series(
    bundle: Bundle,
    figure: ExperimentFigure,
    bands: tuple[tuple[str, str], ...] | None = None,
) -> list[Series]:
    """Pull the plotted series out of an aggregate-curve bundle.

    Returns one :class:`Series` per (group value, y column) combination,
    in file order of the ``mean`` rows. Raises :class:`SchemaMismatch`
    when a needed column or aggregate kind is not declared, and
    :class:`FigureError` when the aggregate rows are missing or empty.
    """
    if figure.kind != "bands":
        raise FigureError("extract_series handles aggregate-curve figures only")
    bands = figure.bands if bands is None else bands

    if "kind" not in bundle.columns:
        raise SchemaMismatch("schema is missing required column 'kind'")
    for column in (figure.x, *((figure.group,) if figure.group else ())):
        if column not in bundle.key_columns:
            raise SchemaMismatch(f"schema is missing required key column {column!r}")
    for column in figure.ys:
        if column not in bundle.value_columns:
            raise SchemaMismatch(f"schema is missing required value column {column!r}")
    for kind in ("mean", *_band_kinds(bands)):
        if kind not in bundle.aggregate_kinds:
            raise SchemaMismatch(f"schema does not declare aggregate kind {kind!r}")

    by_kind: dict[str, list[dict[str, str]]] = {}
    for row in bundle.rows:
        by_kind.setdefault(row["kind"], []).append(row)

    def series_points(kind: str, group_value: str | None, column: str):
        xs, ys = [], []
        for row in by_kind.get(kind, ()):
            if group_value is not None and row[figure.group] != group_value:
                continue
            xs.append(_parse(row[figure.x], figure.x, kind))
            ys.append(_parse(row[column], column, kind))
        return xs, ys

    if figure.group:
        groups: list[str] = []
        for row in by_kind.get("mean", ()):
            if row[figure.group] not in groups:
                groups.append(row[figure.group])
        group_values: tuple[str | None, ...] = tuple(groups)
    else:
        group_values = (None,)

    out: list[Series] = []
    for group_value in group_values:
        for column in figure.ys:
            xs, ys = series_points("mean", group_value, column)
            if not xs:
                raise FigureError(
                    f"no aggregate rows of kind 'mean' for column {column!r}; "
                    "nothing to plot"
                )
            band_arrays: dict[tuple[str, str], tuple[np.ndarray, np.ndarray]] = {}
            for lo_kind, hi_kind in bands:
                edges = []
                for kind in (lo_kind, hi_kind):
                    bxs, bys = series_points(kind, group_value, column)
                    if bxs != xs:
                        raise FigureError(
                            f"aggregate rows of kind {kind!r} cover a different "
                            f"{figure.x!r} grid than the mean rows"
                        )
                    edges.append(np.asarray(bys, dtype=np.float64))
                band_arrays[(lo_kind, hi_kind)] = (edges[0], edges[1])
            parts = []
            if group_value is not None:
                parts.append(_group_label(figure.group, group_value))
            if len(figure.ys) > 1 or not parts:
                parts.append(column)
            out.append(
                Series(
                    label=", ".join(parts),
                    x=np.asarray(xs, dtype=np.float64),
                    center=np.asarray(ys, dtype=np.float64),
                    bands=band_arrays,
                )
            )
    return out


def extract_segments(bundle: Bundle) -> dict[str, np.ndarray]:
    """Pull transport-plan segments (mass, endpoints) from trial rows."""
    for column in _SEGMENT_COLUMNS:
        if column not in bundle.columns:
            raise SchemaMismatch(f"schema is missing required column {column!r}")
    data: dict[str, list[float]] = {c: [] for c in _SEGMENT_COLUMNS}
    for row in bundle.rows:
        if row["kind"] != "trial":
            continue
        for column in _SEGMENT_COLUMNS:
            data[column].append(_parse(row[column], column, "trial"))
    if not data["mass"]:
        raise FigureError("no trial rows with transport segments; nothing to plot")
    return {c: np.asarray(v, dtype=np.float64) for c, v in data.items()}
