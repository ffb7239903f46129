"""Byte-stable CSV/JSON tables with an embedded metadata header."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Optional, Sequence

__all__ = ["format_value", "serialize_dataset", "write_dataset", "load_dataset"]

SIG_DIGITS = 12


def format_value(x) -> str:
    """Render one cell: floats with 12 significant digits, booleans as true/false."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r} in output")
        s = f"{x:.{SIG_DIGITS}g}"
        return "0" if s == "-0" else s
    if hasattr(x, "dtype"):
        return format_value(x.item())
    return str(x)


def _json_value(x):
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, int):
        return x
    if hasattr(x, "dtype"):
        return _json_value(x.item())
    if isinstance(x, float):
        return float(format_value(x))
    return str(x)


def serialize_dataset(rows: Sequence[Sequence], columns: Sequence[str], fmt: str = "csv", metadata: Optional[dict] = None) -> str:
    """Serialise ``rows`` (sequences aligned with ``columns``).

    CSV output starts with ``# key: value`` comment lines holding the
    metadata (values JSON-encoded with sorted keys), then a header row. JSON
    output is ``{"metadata": ..., "columns": ..., "rows": [{...}, ...]}``.
    """
    metadata = metadata or {}
    columns = list(columns)
    for i, row in enumerate(rows):
        if len(row) != len(columns):
            raise ValueError(f"row {i} has {len(row)} fields, expected {len(columns)}")
    if fmt == "csv":
        buf = io.StringIO()
        for key in sorted(metadata):
            buf.write(f"# {key}: {json.dumps(metadata[key], sort_keys=True)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_value(x) for x in row])
        return buf.getvalue()
    if fmt == "json":
        data = {
            "metadata": metadata,
            "columns": columns,
            "rows": [{c: _json_value(x) for c, x in zip(columns, row)} for row in rows],
        }
        return json.dumps(data, indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown format {fmt!r}; expected 'csv' or 'json'")


def write_dataset(path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def load_dataset(text_or_path) -> tuple[dict, list[str], list[list[str]]]:
    """Parse serialised output back into ``(metadata, columns, rows)``.

    Cells come back as the strings that were written, so re-serialising them
    reproduces the file byte for byte.
    """
    text = text_or_path
    if isinstance(text_or_path, Path) or (isinstance(text_or_path, str) and "\n" not in text_or_path):
        text = Path(text_or_path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        cols = data["columns"]
        rows = [[row[c] for c in cols] for row in data["rows"]]
        return data["metadata"], cols, rows
    metadata, body = {}, []
    for line in text.splitlines(keepends=True):
        if line.startswith("# ") and not body:
            key, _, value = line[2:].rstrip("\n").partition(": ")
            metadata[key] = json.loads(value)
        else:
            body.append(line)
    reader = csv.reader(body)
    cols = next(reader)
    return metadata, cols, [list(r) for r in reader]
