"""Static figures from probe time-series CSVs."""

from .core import RenderSpec, Series, load_series, phase_stats, render, stats_report

__all__ = [
    "RenderSpec",
    "Series",
    "load_series",
    "phase_stats",
    "render",
    "stats_report",
]
