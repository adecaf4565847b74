"""Closed-loop evaluation toolkit for vision-based aircraft detect-and-avoid."""

__version__ = "0.1.0"
