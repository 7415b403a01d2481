"""Figure specifications: which CSVs, panels, axes, and series to draw.

Three presets mirror the experiment presets of the btckur CLI:

- ``fig2``: 1x3 time sweep, relative fluctuation vs. measurement time
  against the two analytical lower bounds, one panel per drive strength.
- ``fig3``: 1x3 log-log size sweep with a 1/N guide line and the fitted
  slope of the Monte Carlo series annotated.
- ``figS1``: 1x3 time sweep of the exact quantum Fisher information
  against the mean-field activity and its upper bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class SeriesSpec:
    column: str
    label: str
    style: dict = field(default_factory=dict)
    error_column: str | None = None


@dataclass(frozen=True)
class PanelSpec:
    label: str            # (a), (b), (c)
    title: str
    csv_path: Path
    x_column: str
    x_label: str
    y_label: str
    series: tuple[SeriesSpec, ...]
    xscale: str = "linear"
    yscale: str = "log"
    guide_inverse_x: bool = False   # draw a line proportional to 1/x
    annotate_slope_of: str | None = None


@dataclass(frozen=True)
class FigureSpec:
    name: str
    panels: tuple[PanelSpec, ...]
    figsize: tuple[float, float] = (12.0, 3.6)
    dpi: int = 150


MC_STYLE = {"color": "tab:blue", "linestyle": "-", "marker": "o", "markersize": 3}
BMB_STYLE = {"color": "tab:red", "linestyle": "--", "marker": "s", "markersize": 3}
BUB_STYLE = {"color": "tab:green", "linestyle": "-.", "marker": "^", "markersize": 3}

PRESET_OMEGAS = (0.5, 1.0, 1.5)
PANEL_LABELS = ("(a)", "(b)", "(c)")


def _omega_title(omega: float) -> str:
    return rf"$\omega = {omega:g}\,\kappa$"


def build_spec(preset: str, input_dir: str | Path) -> FigureSpec:
    input_dir = Path(input_dir)
    if preset == "fig2":
        panels = tuple(
            PanelSpec(
                label=lab,
                title=_omega_title(om),
                csv_path=input_dir / f"time_sweep_omega{om:g}.csv",
                x_column="tau",
                x_label=r"$\kappa\tau$",
                y_label=r"$\mathrm{Var}[N_J]/(\tau\,\partial_\tau\langle N_J\rangle)^2$",
                series=(
                    SeriesSpec("rel_fluct", "Monte Carlo", MC_STYLE, "se_rel_fluct"),
                    SeriesSpec("inv_bmb", r"$1/B_\mathrm{mb}$", BMB_STYLE),
                    SeriesSpec("inv_bmb_ub", r"$1/B_\mathrm{mb}^\mathrm{ub}$", BUB_STYLE),
                ),
            )
            for lab, om in zip(PANEL_LABELS, PRESET_OMEGAS)
        )
        return FigureSpec(name="fig2", panels=panels)
    if preset == "fig3":
        panels = tuple(
            PanelSpec(
                label=lab,
                title=_omega_title(om),
                csv_path=input_dir / f"size_sweep_omega{om:g}.csv",
                x_column="n_spins",
                x_label=r"$N$",
                y_label=r"$\mathrm{Var}[N_J]/(\tau\,\partial_\tau\langle N_J\rangle)^2$",
                series=(
                    SeriesSpec("rel_fluct", "Monte Carlo", MC_STYLE, "se_rel_fluct"),
                    SeriesSpec("inv_bmb", r"$1/B_\mathrm{mb}$", BMB_STYLE),
                    SeriesSpec("inv_bmb_ub", r"$1/B_\mathrm{mb}^\mathrm{ub}$", BUB_STYLE),
                ),
                xscale="log",
                yscale="log",
                guide_inverse_x=True,
                annotate_slope_of="rel_fluct",
            )
            for lab, om in zip(PANEL_LABELS, PRESET_OMEGAS)
        )
        return FigureSpec(name="fig3", panels=panels)
    if preset == "figS1":
        panels = tuple(
            PanelSpec(
                label=lab,
                title=_omega_title(om),
                csv_path=input_dir / f"bounds_omega{om:g}.csv",
                x_column="tau",
                x_label=r"$\kappa\tau$",
                y_label="activity",
                series=(
                    SeriesSpec("J0", r"$J(0)$", MC_STYLE),
                    SeriesSpec("Bmb", r"$B_\mathrm{mb}$", BMB_STYLE),
                    SeriesSpec("BmbUb_nested", r"$B_\mathrm{mb}^\mathrm{ub}$", BUB_STYLE),
                ),
                yscale="linear",
            )
            for lab, om in zip(PANEL_LABELS, PRESET_OMEGAS)
        )
        return FigureSpec(name="figS1", panels=panels)
    raise ValueError(f"unknown preset {preset!r}; expected fig2, fig3, or figS1")
