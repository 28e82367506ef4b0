"""CSV time series to figures, plus per-phase summary statistics.

The accepted dialect is the one the permsym CLI writes: a `t,<name>,...`
header row, one comma-separated record per line.  Rendering draws one
column against time, one curve per input file, with vertical markers at
the Hamiltonian switch times.  Nothing here transforms the data beyond
selecting a column and taking per-phase min/max; a record that falls on
a phase boundary is counted with the earlier phase, matching the
producer's convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_BOUNDARY_SLACK = 1e-9


class ColumnError(ValueError):
    """The requested column is not in the CSV header."""


class DialectError(ValueError):
    """The file does not parse as a probe time series."""


@dataclass
class Series:
    path: str
    label: str
    times: np.ndarray
    columns: dict[str, np.ndarray]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            known = ", ".join(self.columns)
            raise ColumnError(
                f"{self.path} has no column {name!r}; columns: {known}"
            ) from None


def load_series(path, label: str | None = None) -> Series:
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip()
        names = header.split(",")
        if names[0] != "t" or len(names) < 2 or "" in names:
            raise DialectError(f"{path}: header {header!r} is not 't,<name>,...'")
        try:
            table = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise DialectError(f"{path}: {exc}") from None
    if table.size == 0 or table.shape[1] != len(names):
        raise DialectError(
            f"{path}: expected {len(names)} columns of data, got shape {table.shape}"
        )
    columns = {name: table[:, k] for k, name in enumerate(names[1:], start=1)}
    return Series(str(path), label or path.stem, table[:, 0], columns)


def phase_stats(series: Series, column: str, switch_times) -> list[dict]:
    """Min/max of one column over each inter-switch window."""
    values = series.column(column)
    edges = [float(series.times[0]), *switch_times, float(series.times[-1])]
    out = []
    for k, (start, end) in enumerate(zip(edges, edges[1:])):
        mask = series.times <= end + _BOUNDARY_SLACK
        if k == 0:
            mask &= series.times >= start - _BOUNDARY_SLACK
        else:
            mask &= series.times > start + _BOUNDARY_SLACK
        if not mask.any():
            raise ValueError(f"no records in phase [{start}, {end}]")
        out.append(
            {
                "start": start,
                "end": end,
                "min": float(values[mask].min()),
                "max": float(values[mask].max()),
            }
        )
    return out


@dataclass
class RenderSpec:
    csv_paths: list
    column: str
    out_path: str | None = None
    switch_times: list = field(default_factory=list)
    title: str | None = None
    labels: list | None = None

    def __post_init__(self):
        if not self.csv_paths:
            raise ValueError("at least one CSV path is required")
        if self.labels is not None and len(self.labels) != len(self.csv_paths):
            raise ValueError(
                f"{len(self.labels)} labels for {len(self.csv_paths)} CSVs"
            )
        times = [float(t) for t in self.switch_times]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"switch times must increase: {times}")
        self.switch_times = times

    def load(self) -> list[Series]:
        labels = self.labels or [None] * len(self.csv_paths)
        loaded = [load_series(p, lab) for p, lab in zip(self.csv_paths, labels)]
        for series in loaded:
            series.column(self.column)  # fail before any drawing
        return loaded


def render(spec: RenderSpec) -> None:
    """Write one PNG: spec.column against time, one curve per input CSV."""
    if spec.out_path is None:
        raise ValueError("render needs an output path")
    loaded = spec.load()
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    try:
        for series in loaded:
            ax.plot(series.times, series.column(spec.column), lw=1.2,
                    label=series.label)
        for t in spec.switch_times:
            ax.axvline(t, color="0.45", ls="--", lw=0.8)
        ax.set_xlabel("t")
        ax.set_ylabel(spec.column)
        if spec.title:
            ax.set_title(spec.title)
        if len(loaded) > 1:
            ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(spec.out_path, dpi=150)
    finally:
        plt.close(fig)


def stats_report(spec: RenderSpec) -> dict:
    return {
        "column": spec.column,
        "switch_times": spec.switch_times,
        "series": [
            {
                "path": series.path,
                "label": series.label,
                "phases": phase_stats(series, spec.column, spec.switch_times),
            }
            for series in spec.load()
        ],
    }
