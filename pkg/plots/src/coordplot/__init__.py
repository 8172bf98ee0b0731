"""Figure rendering for experiment metrics CSVs."""

from .render import ChartInfo, PlotSpec, aggregate, load_rows, main, render

__all__ = [
    "ChartInfo",
    "PlotSpec",
    "aggregate",
    "load_rows",
    "main",
    "render",
]
