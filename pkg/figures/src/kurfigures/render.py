"""Render a FigureSpec to a PNG file.

The output is deterministic: fixed size, DPI, and styling, no
timestamps, and the SHA-256 of every input CSV embedded in the PNG text
metadata so a figure can be traced back to the exact data it shows.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .reader import column, read_table, sha256_of
from .specs import FigureSpec


def _fitted_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log y vs log x (annotation only)."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def render(spec: FigureSpec, out_path: str | Path) -> Path:
    out_path = Path(out_path)
    checksums = {}

    with plt.rc_context({"font.size": 9, "svg.hashsalt": spec.name}):
        fig, axes = plt.subplots(
            1, len(spec.panels), figsize=spec.figsize, constrained_layout=True
        )
        axes = np.atleast_1d(axes)
        for ax, panel in zip(axes, spec.panels):
            data = read_table(panel.csv_path)
            checksums[panel.csv_path.name] = sha256_of(panel.csv_path)
            x = column(data, panel.x_column, panel.csv_path)
            keep = x > 0 if "log" in (panel.xscale, panel.yscale) else slice(None)
            for series in panel.series:
                y = column(data, series.column, panel.csv_path)
                if series.error_column is not None:
                    err = column(data, series.error_column, panel.csv_path)
                    ax.errorbar(
                        x[keep], y[keep], yerr=err[keep],
                        label=series.label, capsize=2, **series.style,
                    )
                else:
                    ax.plot(x[keep], y[keep], label=series.label, **series.style)
            if panel.guide_inverse_x:
                xk = x[keep]
                ref = column(data, panel.series[-1].column, panel.csv_path)[keep]
                anchor = 0.5 * ref[0] * xk[0]  # below the lowest series
                ax.plot(xk, anchor / xk, color="gray", linestyle=":",
                        label=r"$\propto 1/N$")
            if panel.annotate_slope_of is not None:
                y = column(data, panel.annotate_slope_of, panel.csv_path)[keep]
                slope = _fitted_slope(x[keep], y)
                ax.annotate(f"slope {slope:+.2f}", xy=(0.05, 0.08),
                            xycoords="axes fraction")
            ax.set_xscale(panel.xscale)
            ax.set_yscale(panel.yscale)
            ax.set_xlabel(panel.x_label)
            ax.set_ylabel(panel.y_label)
            ax.set_title(f"{panel.label} {panel.title}")
            ax.legend(fontsize=8)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(
            out_path,
            dpi=spec.dpi,
            metadata={
                "Software": "kurfigures",
                "InputChecksums": json.dumps(checksums, sort_keys=True),
            },
        )
        plt.close(fig)
    return out_path
