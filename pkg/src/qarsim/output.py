"""Deterministic artifact writing: CSV, JSON, and optional SVG plots.

Floats are serialized with a fixed 12-significant-digit scientific format so
repeated runs with the same seed produce byte-identical CSV files. Writes go
through a temp file and os.replace, so readers never observe partial output.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "FLOAT_FORMAT",
    "LinePlot",
    "HeatmapPlot",
    "TableArtifact",
    "format_value",
    "atomic_write_text",
    "write_csv",
    "write_json",
    "render_svg",
]

FLOAT_FORMAT = "%.11e"


@dataclass(frozen=True)
class LinePlot:
    x: str
    ys: tuple[str, ...]
    xlabel: str
    ylabel: str
    logy: bool = False
    logx: bool = False
    # Optional column whose distinct values split rows into separate series.
    group_by: Optional[str] = None


@dataclass(frozen=True)
class HeatmapPlot:
    x: str
    y: str
    z: str
    xlabel: str
    ylabel: str
    zlabel: str


@dataclass(frozen=True)
class TableArtifact:
    """One output table: a CSV on disk, optionally also rendered as a plot."""

    name: str
    header: tuple[str, ...]
    rows: tuple[tuple, ...]
    plot: Optional[LinePlot | HeatmapPlot] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "header", tuple(self.header))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        for row in self.rows:
            if len(row) != len(self.header):
                raise ConfigurationError(
                    f"artifact {self.name!r}: row width {len(row)} != header width "
                    f"{len(self.header)}"
                )

    def column(self, name: str) -> np.ndarray:
        try:
            k = self.header.index(name)
        except ValueError:
            raise ConfigurationError(f"artifact {self.name!r} has no column {name!r}")
        return np.array([row[k] for row in self.rows])


def format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if np.isnan(v):
        return "nan"
    return FLOAT_FORMAT % v


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str, artifact: TableArtifact) -> None:
    lines = [",".join(artifact.header)]
    for row in artifact.rows:
        lines.append(",".join(format_value(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _sanitize(obj):
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, float) and np.isnan(obj):
        return None
    return obj


def write_json(path: str, payload: dict) -> None:
    text = json.dumps(_sanitize(payload), sort_keys=True, indent=2)
    atomic_write_text(path, text + "\n")


def _line_plot(ax, artifact: TableArtifact, hint: LinePlot) -> None:
    x = artifact.column(hint.x).astype(float)
    if hint.group_by is None:
        for name in hint.ys:
            ax.plot(x, artifact.column(name).astype(float), label=name)
    else:
        groups = artifact.column(hint.group_by)
        for value in dict.fromkeys(groups.tolist()):
            mask = groups == value
            for name in hint.ys:
                y = artifact.column(name).astype(float)[mask]
                ax.plot(x[mask], y, label=f"{hint.group_by}={value}")
    if hint.logx:
        ax.set_xscale("log")
    if hint.logy:
        ax.set_yscale("log")
    ax.set_xlabel(hint.xlabel)
    ax.set_ylabel(hint.ylabel)
    if len(hint.ys) > 1 or hint.group_by is not None:
        ax.legend(fontsize="small")


def _heatmap_plot(fig, ax, artifact: TableArtifact, hint: HeatmapPlot) -> None:
    x = artifact.column(hint.x).astype(float)
    y = artifact.column(hint.y).astype(float)
    z = artifact.column(hint.z).astype(float)
    xu, yu = np.unique(x), np.unique(y)
    grid = np.full((yu.size, xu.size), np.nan)
    xi = np.searchsorted(xu, x)
    yi = np.searchsorted(yu, y)
    grid[yi, xi] = z
    mesh = ax.pcolormesh(xu, yu, grid, shading="nearest")
    fig.colorbar(mesh, ax=ax, label=hint.zlabel)
    ax.set_xlabel(hint.xlabel)
    ax.set_ylabel(hint.ylabel)


def render_svg(path: str, artifact: TableArtifact) -> None:
    """Render the artifact's plot hint to an SVG with stable content."""
    if artifact.plot is None:
        raise ConfigurationError(f"artifact {artifact.name!r} has no plot hint")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "qarsim"}):
        fig, ax = plt.subplots(figsize=(5.0, 3.4), constrained_layout=True)
        try:
            if isinstance(artifact.plot, LinePlot):
                _line_plot(ax, artifact, artifact.plot)
            else:
                _heatmap_plot(fig, ax, artifact, artifact.plot)
            ax.set_title(artifact.name)
            directory = os.path.dirname(os.path.abspath(path))
            os.makedirs(directory, exist_ok=True)
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
