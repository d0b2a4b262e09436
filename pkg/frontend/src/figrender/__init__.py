"""Static renderings of diqsv figure datasets (CSV in, SVG/PNG out)."""

from .render import EXPECTED_COLUMNS, RenderSpec, SchemaError, load_dataset, render

__version__ = "0.1.0"
