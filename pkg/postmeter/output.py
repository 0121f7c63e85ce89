"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

import csv
from datetime import UTC, datetime
import io
import json
import math
from pathlib import Path
from typing import Any

from .config import FORMATS
from .const import INTEGER_COLUMNS, LOGGER, TEXT_COLUMNS
from .exceptions import EmitError, EmptyTableError
from .experiment import ResultTable


def _format_float(value: float) -> str:
    """Return the shortest round-trip text, as the json encoder writes it."""
    return float.__repr__(value)


def _format_cell(value: Any) -> str:
    """Format one CSV cell."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return _format_float(value)
    return str(value)


def _parse_cell(column: str, text: str) -> Any:
    if column in TEXT_COLUMNS:
        return text
    if column in INTEGER_COLUMNS:
        return int(text)
    return float(text)


def _json_safe(value: Any) -> Any:
    """Replace non-finite floats by null, recursively."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {key: _json_safe(item) for key, item in value.items()}
    if isinstance(value, list | tuple):
        return [_json_safe(item) for item in value]
    return value


def _json_restore(column: str, value: Any) -> Any:
    if value is None and column not in TEXT_COLUMNS:
        return math.nan
    return value


def render_csv(table: ResultTable) -> str:
    """Return the CSV data section of a table."""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=table.columns, lineterminator="\n")
    writer.writeheader()
    for row in table.rows:
        writer.writerow({column: _format_cell(row[column]) for column in table.columns})
    return buffer.getvalue()


def render_json(table: ResultTable, created: str) -> str:
    """Return the JSON document of a table, metadata included."""
    document = {
        "metadata": _json_safe({"name": table.name, "created": created, **table.metadata}),
        "columns": list(table.columns),
        "rows": _json_safe(table.rows),
    }
    return json.dumps(document, indent=2, allow_nan=False) + "\n"


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as err:
        msg = f"Could not write {path}: {err}"
        raise EmitError(msg) from err


def emit(table: ResultTable, fmt: str, out_dir: Path | str) -> list[Path]:
    """Write a table and return the written paths.

    CSV output puts the metadata in a <name>.meta.json sidecar, so the data
    file holds nothing that changes between identical runs.
    """
    if not table.rows:
        msg = f"Result table {table.name} has no rows"
        raise EmptyTableError(msg)
    if fmt not in FORMATS:
        msg = f"Unknown output format: {fmt}"
        raise ValueError(msg)

    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        msg = f"Could not create output directory {out_dir}: {err}"
        raise EmitError(msg) from err

    created = datetime.now(tz=UTC).isoformat()
    if fmt == "json":
        path = out_dir / f"{table.name}.json"
        _write(path, render_json(table, created))
        written = [path]
    else:
        path = out_dir / f"{table.name}.csv"
        sidecar = out_dir / f"{table.name}.meta.json"
        _write(path, render_csv(table))
        _write(
            sidecar,
            json.dumps(
                _json_safe({"name": table.name, "created": created, **table.metadata}),
                indent=2,
                allow_nan=False,
            )
            + "\n",
        )
        written = [path, sidecar]

    LOGGER.info("Wrote %s rows of %s to %s", len(table.rows), table.name, path)
    return written


def load_table(path: Path | str) -> ResultTable:
    """Read a table back from its CSV or JSON file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        msg = f"Could not read {path}: {err}"
        raise EmitError(msg) from err

    try:
        if path.suffix == ".json":
            document = json.loads(text)
            metadata = document["metadata"]
            columns = tuple(document["columns"])
            rows = [
                {key: _json_restore(key, value) for key, value in row.items()}
                for row in document["rows"]
            ]
        else:
            reader = csv.reader(io.StringIO(text))
            columns = tuple(next(reader))
            rows = [
                {
                    column: _parse_cell(column, cell)
                    for column, cell in zip(columns, line, strict=True)
                }
                for line in reader
            ]
            sidecar = path.with_suffix(".meta.json")
            metadata = (
                json.loads(sidecar.read_text(encoding="utf-8")) if sidecar.exists() else {}
            )
    except (KeyError, StopIteration, ValueError, OSError) as err:
        msg = f"Could not parse result table {path}: {err}"
        raise EmitError(msg) from err

    name = metadata.pop("name", path.stem)
    return ResultTable(name=name, columns=columns, rows=rows, metadata=metadata)
