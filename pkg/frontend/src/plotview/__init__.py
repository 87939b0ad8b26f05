"""Figure renderer for simulation run directories.

Consumes the documented artifact formats (trace.csv, events.csv,
metrics.json) and nothing else, so it stays decoupled from whatever
produced them.
"""

from .artifacts import RunData, SchemaMismatch, load_run
from .figures import FIGURES, FigureSpec, render_figures

__all__ = [
    "FIGURES",
    "FigureSpec",
    "RunData",
    "SchemaMismatch",
    "load_run",
    "render_figures",
]

__version__ = "0.1.0"
