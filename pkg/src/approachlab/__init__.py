"""Approachability, no-regret learning and calibration toolkit."""

__version__ = "0.1.0"
