"""Deterministic on-disk formats: CSV tables and run manifests.

CSV contract: '.' decimal separator, 17 significant digits, LF line
endings, one header row, schema version pinned in a leading comment line.
Absent quantities are written as empty fields.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile

import numpy as np

SCHEMA_COMMENT = "# btckur-csv v1"


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if np.isnan(x):
        return ""
    return f"{x:.17g}"


def write_csv(path, header, columns) -> None:
    """Write columns (sequences or None) under the given header names."""
    cols = []
    n_rows = None
    for c in columns:
        if c is None:
            cols.append(None)
        else:
            arr = np.asarray(c, dtype=float)
            if n_rows is None:
                n_rows = len(arr)
            elif len(arr) != n_rows:
                raise ValueError("column lengths differ")
            cols.append(arr)
    if n_rows is None:
        raise ValueError("need at least one populated column")

    lines = [SCHEMA_COMMENT, ",".join(header)]
    for i in range(n_rows):
        lines.append(",".join("" if c is None else _fmt(c[i]) for c in cols))
    _atomic_write(path, "\n".join(lines) + "\n")


def _atomic_write(path, text: str) -> None:
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def content_hash(obj) -> str:
    """sha256 of the canonical JSON encoding."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def write_manifest(path, manifest: dict) -> None:
    _atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")


def read_csv(path):
    """Read a schema-v1 CSV into (header list, dict of float arrays)."""
    with open(path) as f:
        lines = [ln.rstrip("\n") for ln in f]
    lines = [ln for ln in lines if not ln.startswith("#")]
    if not lines:
        raise ValueError(f"{path}: empty CSV")
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:] if ln]
    data = {}
    for j, name in enumerate(header):
        vals = [r[j] for r in rows]
        data[name] = np.array([float(v) if v else np.nan for v in vals])
    return header, data
