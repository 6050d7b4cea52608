"""Detecting UAV emitters and inferring their number from large ULA snapshots."""

__version__ = "0.1.0"
