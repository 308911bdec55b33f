"""Batch figure rendering for qpot result directories.

A pure consumer: all numbers come from the exported CSV/JSON files, no
physics is recomputed here.
"""

__version__ = "0.1.0"

from .reader import ResultDir
from .render import FIGURE_KINDS, PlotJob, render

__all__ = ["ResultDir", "PlotJob", "render", "FIGURE_KINDS", "__version__"]
