"""Figure rendering for solver trace CSV files."""

from .render import FIGURE_IDS, FigureSpec, TraceFormatError, build_figure, read_trace, render

__all__ = [
    "FIGURE_IDS",
    "FigureSpec",
    "TraceFormatError",
    "build_figure",
    "read_trace",
    "render",
]
