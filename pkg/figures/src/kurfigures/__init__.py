"""Figure rendering for btckur CSV outputs.

This package is a read-only consumer of the CSV contract emitted by the
`btckur` command line tool: it plots the columns as they are and never
recomputes any physics.
"""

from .reader import CsvFormatError, MissingColumnError, read_table
from .specs import FigureSpec, PanelSpec, build_spec
from .render import render

__version__ = "0.1.0"

__all__ = [
    "CsvFormatError",
    "MissingColumnError",
    "read_table",
    "FigureSpec",
    "PanelSpec",
    "build_spec",
    "render",
]
