"""Ginzburg-Landau wire simulator with current-carrying contacts."""

__version__ = "0.1.0"
