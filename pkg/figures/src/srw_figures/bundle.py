"""Loading and validation of experiment CSV bundles.

A bundle is the pair of files written by ``srw exp <name> --out-dir DIR``:
``<name>.csv`` (one header row, then trial and aggregate rows) and
``<name>.schema.json`` (column layout, key/value column split, aggregate
kinds, resolved parameters). Rendering never trusts the CSV shape on its
own: the header must match the sidecar schema column for column, and any
disagreement is a hard :class:`SchemaMismatch` naming the offending
column rather than a silent reinterpretation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path


class FigureError(ValueError):
    """Any condition that must abort rendering (bad input, empty data)."""


class SchemaMismatch(FigureError):
    """CSV and sidecar schema disagree, or a required column is absent."""


_SCHEMA_KEYS = ("experiment", "columns", "key_columns", "value_columns", "aggregate_kinds")


@dataclass(frozen=True)
class Bundle:
    """One validated experiment bundle, rows kept as raw CSV strings."""

    experiment: str
    columns: tuple[str, ...]
    rows: tuple[dict[str, str], ...]
    schema: dict

    @property
    def aggregate_kinds(self) -> tuple[str, ...]:
        return tuple(self.schema["aggregate_kinds"])

    @property
    def value_columns(self) -> tuple[str, ...]:
        return tuple(self.schema["value_columns"])

    @property
    def key_columns(self) -> tuple[str, ...]:
        return tuple(self.schema["key_columns"])


def _check_header(header: list[str], declared: list[str]) -> None:
    for i, (got, want) in enumerate(zip(header, declared)):
        if got != want:
            raise SchemaMismatch(
                f"column {i + 1}: CSV has {got!r}, schema declares {want!r}"
            )
    if len(header) < len(declared):
        raise SchemaMismatch(
            f"column {len(header) + 1}: CSV is missing column {declared[len(header)]!r} "
            "declared by the schema"
        )
    if len(header) > len(declared):
        raise SchemaMismatch(
            f"column {len(declared) + 1}: CSV has extra column {header[len(declared)]!r} "
            "not declared by the schema"
        )


def load_bundle(csv_path, schema_path, experiment: str | None = None) -> Bundle:
    """Read and cross-validate one CSV + schema sidecar pair.

    Raises :class:`SchemaMismatch` when the CSV header and the schema's
    declared columns differ (first offending column named), and
    :class:`FigureError` for structural problems (missing files are left
    to the caller as ``OSError``).
    """
    csv_path, schema_path = Path(csv_path), Path(schema_path)
    with open(schema_path, encoding="ascii") as fh:
        try:
            schema = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FigureError(f"{schema_path.name} is not valid JSON: {exc}") from exc
    if not isinstance(schema, dict):
        raise FigureError(f"{schema_path.name} must hold a JSON object")
    for key in _SCHEMA_KEYS:
        if key not in schema:
            raise FigureError(f"{schema_path.name} is missing required key {key!r}")
    if experiment is not None and schema["experiment"] != experiment:
        raise FigureError(
            f"schema is for experiment {schema['experiment']!r}, expected {experiment!r}"
        )

    declared = [str(c) for c in schema["columns"]]
    with open(csv_path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FigureError(f"{csv_path.name} is empty") from None
        _check_header(header, declared)
        rows = []
        for lineno, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != len(declared):
                raise FigureError(
                    f"{csv_path.name} line {lineno}: {len(fields)} fields, "
                    f"expected {len(declared)}"
                )
            rows.append(dict(zip(declared, fields)))

    return Bundle(
        experiment=str(schema["experiment"]),
        columns=tuple(declared),
        rows=tuple(rows),
        schema=schema,
    )
