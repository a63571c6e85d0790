"""Figures and markdown tables rendered from federated-unlearning run logs.

This package only reads the files a run directory contains (per-run CSV
curves, per-run JSON scalars, `manifest.json`, `summary.json`); it never
imports or invokes the simulator.
"""

from .curves import FigureSpec, render_curves
from .tables import render_tables

__all__ = ["FigureSpec", "render_curves", "render_tables"]
