"""Strict TSV reading and writing.

Files are UTF-8, tab-separated, without any quoting convention: a tab or
newline inside a field is a schema violation, not something to escape.
"""

from __future__ import annotations

import os
from collections.abc import Iterable, Iterator, Sequence
from pathlib import Path

from .errors import DataError, SchemaError


def read_rows(path: str | Path, n_fields: int) -> Iterator[tuple[int, list[str]]]:
    """Yield (line_no, fields) for each non-empty line of a TSV file.

    Rejects rows whose field count differs from `n_fields`.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing input file: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != n_fields:
                raise SchemaError(
                    path, line_no, f"expected {n_fields} fields, got {len(fields)}"
                )
            yield line_no, fields


def check_field(value: str, name: str) -> str:
    """Reject values that cannot survive a round-trip through strict TSV."""
    if "\t" in value or "\n" in value or "\r" in value:
        raise DataError(f"{name} contains a tab or newline: {value!r}")
    return value


def write_rows(path: str | Path, rows: Iterable[Sequence[str]]) -> None:
    """Write rows as strict TSV, creating parent directories as needed."""
    path = Path(path)
    os.makedirs(path.parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for row in rows:
            for value in row:
                check_field(value, "field")
            fh.write("\t".join(row) + "\n")
