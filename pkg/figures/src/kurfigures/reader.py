"""Reader for the versioned CSV files written by the btckur CLI.

Schema contract: first line is the comment ``# btckur-csv v1``, second
line the header row, then full-double-precision values with '.' decimal
separator and LF line endings.
"""

from __future__ import annotations

import csv
import hashlib
from pathlib import Path

import numpy as np

SCHEMA_COMMENT = "# btckur-csv v1"


class CsvFormatError(RuntimeError):
    """The file is empty or does not follow the btckur CSV schema."""


class MissingColumnError(KeyError):
    """A required column is absent; the message names the column."""

    def __init__(self, column: str, path: str):
        super().__init__(f"column {column!r} not found in {path}")
        self.column = column


def read_table(path: str | Path) -> dict[str, np.ndarray]:
    """Parse one CSV into named float columns (empty cells become NaN)."""
    path = Path(path)
    text = path.read_text()
    if not text.strip():
        raise CsvFormatError(f"{path} is empty; refusing to render a blank figure")
    lines = text.splitlines()
    if lines[0].strip() != SCHEMA_COMMENT:
        raise CsvFormatError(
            f"{path} does not start with {SCHEMA_COMMENT!r}; not a btckur CSV"
        )
    rows = list(csv.reader(lines[1:]))
    if not rows or len(rows) < 2:
        raise CsvFormatError(f"{path} has a header but no data rows")
    header = rows[0]
    data = {name: [] for name in header}
    for row in rows[1:]:
        for name, cell in zip(header, row):
            data[name].append(float(cell) if cell != "" else np.nan)
    return {name: np.asarray(vals) for name, vals in data.items()}


def column(data: dict[str, np.ndarray], name: str, path: str | Path) -> np.ndarray:
    if name not in data:
        raise MissingColumnError(name, str(path))
    return data[name]


def sha256_of(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
