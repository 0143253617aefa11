"""Plot-emitting companion for fins2d run artifacts."""

from .formats import FormatError, read_contour, read_diagnostics, \
    read_snapshot, read_summary
from .plots import KINDS, PlotSpec, render

__all__ = [
    "FormatError",
    "KINDS",
    "PlotSpec",
    "read_contour",
    "read_diagnostics",
    "read_snapshot",
    "read_summary",
    "render",
]

__version__ = "0.1.0"
