"""Render figure datasets (CSV) into deterministic static images.

The renderer is a pure presentation layer: it validates the CSV header
against the published schema for the requested figure, then plots the
columns verbatim. No quantity is ever recomputed from protocol parameters,
so a perturbed CSV renders the perturbed values. Output bytes are stable
across runs: a fixed SVG hash salt, no timestamps, no creator metadata.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

EXPECTED_COLUMNS = {
    "fig2a": ("eta", "N_DI", "N_DD", "ratio"),
    "fig2b": ("N", "eta", "confidence"),
    "fig3": ("N", "eta_c", "confidence"),
}

_STYLE = {
    "svg.hashsalt": "figrender",
    "figure.figsize": (7.0, 4.5),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 11,
}


class SchemaError(ValueError):
    """CSV header does not match the figure's published schema."""


@dataclass(frozen=True)
class RenderSpec:
    figure_id: str
    csv_path: str
    image_path: str
    title: str | None = None

    def __post_init__(self):
        if self.figure_id not in EXPECTED_COLUMNS:
            raise ValueError(f"unknown figure id {self.figure_id!r}")
        suffix = Path(self.image_path).suffix.lower()
        if suffix not in (".svg", ".png"):
            raise ValueError(f"unsupported image format {suffix!r} (use .svg or .png)")


def load_dataset(csv_path: str, figure_id: str) -> dict[str, list[float]]:
    """Parse and schema-check a dataset; returns columns exactly as stored."""
    expected = EXPECTED_COLUMNS[figure_id]
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{csv_path}: empty file, expected header {','.join(expected)}")
        if tuple(header) != expected:
            missing = [c for c in expected if c not in header]
            extra = [c for c in header if c not in expected]
            raise SchemaError(
                f"{csv_path}: header mismatch for {figure_id}: "
                f"missing={missing or 'none'} unexpected={extra or 'none'} "
                f"(expected {','.join(expected)})"
            )
        columns = {name: [] for name in expected}
        for row in reader:
            if len(row) != len(expected):
                raise SchemaError(f"{csv_path}: row has {len(row)} fields, expected {len(expected)}")
            for name, value in zip(expected, row):
                columns[name].append(float(value))
    if not columns[expected[0]]:
        raise SchemaError(f"{csv_path}: no data rows")
    return columns


def _series_by_curve(columns: dict, key: str):
    """Split rows into curves keyed by the given column, order of appearance."""
    order = []
    curves = {}
    for i, k in enumerate(columns[key]):
        if k not in curves:
            curves[k] = ([], [])
            order.append(k)
        curves[k][0].append(columns["N"][i])
        curves[k][1].append(columns["confidence"][i])
    return [(k, curves[k][0], curves[k][1]) for k in order]


def render(spec: RenderSpec) -> str:
    """Write the image for ``spec`` and return its path."""
    columns = load_dataset(spec.csv_path, spec.figure_id)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        if spec.figure_id == "fig2a":
            ax.loglog(columns["eta"], columns["N_DI"], label="device-independent", color="#1f77b4")
            ax.loglog(columns["eta"], columns["N_DD"], label="device-dependent", color="#d62728", linestyle="--")
            ax.set_xlabel("extractability deficit eta")
            ax.set_ylabel("copies N")
        else:
            key = "eta" if spec.figure_id == "fig2b" else "eta_c"
            for label_value, xs, ys in _series_by_curve(columns, key):
                ax.plot(xs, ys, label=f"{key} = {label_value:g}")
            ax.set_xlabel("copies N")
            ax.set_ylabel("confidence")
            ax.set_ylim(0.0, 1.05)
        ax.legend(loc="best")
        if spec.title:
            ax.set_title(spec.title)
        fig.tight_layout()
        metadata = {"Date": None} if spec.image_path.endswith(".svg") else {"Software": None}
        fig.savefig(spec.image_path, metadata=metadata)
        plt.close(fig)
    return spec.image_path
