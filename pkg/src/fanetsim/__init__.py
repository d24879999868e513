"""Deterministic simulator of UAV data-collection field experiments, with a
calibrated radio model, log synchronization tools, and a ground-station
service for live observation and command of runs."""

__version__ = "0.1.0"
